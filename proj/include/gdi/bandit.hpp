#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gdi/policy.hpp"

namespace gdi {

// One tile-coded bandit over a box. Blocks (width acc) are the scoring/sampling
// granularity; tiles (width ta, shifted by to) hold the learned weights. A
// block's value is the mean weight over the tiles its interval touches.
class TileBandit {
 public:
  enum class Mode { argmax, random };

  TileBandit(Mode mode, std::vector<double> l, std::vector<double> r, double lr, int d,
             std::vector<double> acc, std::vector<double> ta, std::vector<double> to,
             double ucb_c);

  int dim() const { return static_cast<int>(l_.size()); }
  int n_blocks() const { return n_blocks_; }
  int n_tiles() const { return n_tiles_; }
  Mode mode() const { return mode_; }
  double lr() const { return lr_; }
  int d() const { return d_; }
  int64_t total_updates() const { return total_updates_; }
  const std::vector<int64_t>& tile_counts() const { return N_; }
  const std::vector<double>& tile_weights() const { return w_; }

  // Clamped per-dimension tile index of a point (any real input).
  std::vector<int> tile_of(const std::vector<double>& x) const;
  int tile_flat(const std::vector<int>& idx) const;
  std::vector<int> block_of(const std::vector<double>& x) const;
  int block_flat(const std::vector<int>& idx) const;

  // Tiles whose point preimage intersects the block. Throws on a bad index.
  const std::vector<int32_t>& block_tiles(int block_flat_index) const;
  double evaluate_block(int block_flat_index) const;
  // Sum of tile draw counts over the block's tiles.
  int64_t block_count(int block_flat_index) const;

  // w_j += lr*(g - V(block of x)) at exactly the tile containing x; N_j += 1.
  void update(const std::vector<double>& x, double g);

  // Wholesale weight/count restore (checkpoint shape); block aggregates are
  // rebuilt and the total draw count becomes sum(n).
  void set_state(std::vector<double> w, std::vector<int64_t> n);

  // z-scored block values plus the exploration bonus; the z-term is zero when
  // the value spread collapses (population sigma < 1e-12).
  std::vector<double> score_blocks() const;

  // d in-box points, one uniform inside each selected block. argmax: top-d by
  // score, ties to the lowest block index. random: d softmax(score) draws
  // without replacement.
  std::vector<std::vector<double>> sample_candidates(std::mt19937_64& rng) const;

 private:
  void build_adjacency();
  std::vector<double> block_lo(int flat) const;
  std::vector<double> block_hi(int flat) const;

  Mode mode_;
  std::vector<double> l_, r_, acc_, ta_, to_;
  double lr_;
  int d_;
  double ucb_c_;
  std::vector<int> tiles_per_dim_, blocks_per_dim_;
  int n_tiles_ = 0, n_blocks_ = 0;
  std::vector<double> w_;
  std::vector<int64_t> N_;
  std::vector<std::vector<int32_t>> block_tiles_;
  std::vector<std::vector<int32_t>> tile_blocks_;
  std::vector<double> block_w_sum_;
  std::vector<int64_t> block_n_;
  int64_t total_updates_ = 0;
};

// Member-geometry distributions. Drawn values are scaled per dimension by
// `unit` (the search-range granularity for that coordinate).
struct EnsembleConfig {
  int members = 7;
  int d = 3;
  double ucb_c = 1.0;
  std::vector<double> lr_choices{0.05, 0.1, 0.2};
  std::vector<double> ta_choices{2.0, 3.0, 4.0};
  std::vector<double> acc_choices{2.0, 3.0, 4.0};
  double to_lo = 0.0;
  double to_hi = 60.0;
  bool mix_modes = true;  // draw each member's mode from {argmax, random}
  std::vector<double> box_l{0.0, 0.0, 0.0};
  std::vector<double> box_r{50.0, 50.0, 1.0};
  std::vector<double> unit{1.0, 1.0, 0.1};

  void validate() const;
};

class BanditEnsemble {
 public:
  BanditEnsemble(const EnsembleConfig& cfg, std::mt19937_64& rng);

  int dim() const;
  size_t size() const { return members_.size(); }
  const TileBandit& member(size_t i) const { return members_.at(i); }

  // Uniform pick among the members' pooled candidates (members x d points).
  std::vector<double> sample(std::mt19937_64& rng) const;
  // Updates every member at x with payoff g. Throws on non-finite g.
  void update(const std::vector<double>& x, double g);
  int64_t total_updates() const;

 private:
  std::vector<TileBandit> members_;
};

// lambda-level wrappers. A 3-dim ensemble drives (tau1, tau2, epsilon); a
// 1-dim ensemble drives tau1 with epsilon pinned to 1.
IndexPoint ensemble_sample_lambda(const BanditEnsemble& ensemble, std::mt19937_64& rng);
void ensemble_update_lambda(BanditEnsemble& ensemble, const IndexPoint& lambda, double G);

}  // namespace gdi
