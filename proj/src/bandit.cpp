#include "gdi/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gdi {

namespace {

int ceil_count(double span, double width) {
  int n = static_cast<int>(std::ceil(span / width - 1e-9));
  return std::max(n, 1);
}

double clampd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

TileBandit::TileBandit(Mode mode, std::vector<double> l, std::vector<double> r, double lr,
                       int d, std::vector<double> acc, std::vector<double> ta,
                       std::vector<double> to, double ucb_c)
    : mode_(mode),
      l_(std::move(l)),
      r_(std::move(r)),
      acc_(std::move(acc)),
      ta_(std::move(ta)),
      to_(std::move(to)),
      lr_(lr),
      d_(d),
      ucb_c_(ucb_c) {
  const size_t n = l_.size();
  if (n == 0) throw std::invalid_argument("TileBandit: empty box");
  if (r_.size() != n || acc_.size() != n || ta_.size() != n || to_.size() != n)
    throw std::invalid_argument("TileBandit: dimension mismatch");
  for (size_t i = 0; i < n; ++i) {
    if (!(l_[i] < r_[i])) throw std::invalid_argument("TileBandit: need l < r");
    if (!(acc_[i] > 0.0) || !(ta_[i] > 0.0))
      throw std::invalid_argument("TileBandit: widths must be positive");
    if (to_[i] < 0.0) throw std::invalid_argument("TileBandit: offset must be >= 0");
  }
  if (!(lr_ > 0.0)) throw std::invalid_argument("TileBandit: lr must be positive");
  if (d_ < 1) throw std::invalid_argument("TileBandit: d must be >= 1");
  if (ucb_c_ < 0.0) throw std::invalid_argument("TileBandit: ucb_c must be >= 0");

  tiles_per_dim_.resize(n);
  blocks_per_dim_.resize(n);
  n_tiles_ = 1;
  n_blocks_ = 1;
  for (size_t i = 0; i < n; ++i) {
    tiles_per_dim_[i] = ceil_count(r_[i] - l_[i], ta_[i]);
    blocks_per_dim_[i] = ceil_count(r_[i] - l_[i], acc_[i]);
    n_tiles_ *= tiles_per_dim_[i];
    n_blocks_ *= blocks_per_dim_[i];
  }
  w_.assign(n_tiles_, 0.0);
  N_.assign(n_tiles_, 0);
  build_adjacency();
}

std::vector<int> TileBandit::tile_of(const std::vector<double>& x) const {
  if (x.size() != l_.size()) throw std::invalid_argument("tile_of: dimension mismatch");
  std::vector<int> idx(l_.size());
  for (size_t i = 0; i < l_.size(); ++i) {
    double y = clampd(x[i] - to_[i], l_[i], r_[i]);
    int j = static_cast<int>(std::floor((y - l_[i]) / ta_[i]));
    idx[i] = std::clamp(j, 0, tiles_per_dim_[i] - 1);
  }
  return idx;
}

int TileBandit::tile_flat(const std::vector<int>& idx) const {
  int flat = 0;
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= tiles_per_dim_[i])
      throw std::out_of_range("tile_flat: index out of range");
    flat = flat * tiles_per_dim_[i] + idx[i];
  }
  return flat;
}

std::vector<int> TileBandit::block_of(const std::vector<double>& x) const {
  if (x.size() != l_.size()) throw std::invalid_argument("block_of: dimension mismatch");
  std::vector<int> idx(l_.size());
  for (size_t i = 0; i < l_.size(); ++i) {
    double y = clampd(x[i], l_[i], r_[i]);
    int b = static_cast<int>(std::floor((y - l_[i]) / acc_[i]));
    idx[i] = std::clamp(b, 0, blocks_per_dim_[i] - 1);
  }
  return idx;
}

int TileBandit::block_flat(const std::vector<int>& idx) const {
  int flat = 0;
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= blocks_per_dim_[i])
      throw std::out_of_range("block_flat: index out of range");
    flat = flat * blocks_per_dim_[i] + idx[i];
  }
  return flat;
}

std::vector<double> TileBandit::block_lo(int flat) const {
  std::vector<double> lo(l_.size());
  for (size_t i = l_.size(); i-- > 0;) {
    int b = flat % blocks_per_dim_[i];
    flat /= blocks_per_dim_[i];
    lo[i] = l_[i] + b * acc_[i];
  }
  return lo;
}

std::vector<double> TileBandit::block_hi(int flat) const {
  std::vector<double> hi(l_.size());
  for (size_t i = l_.size(); i-- > 0;) {
    int b = flat % blocks_per_dim_[i];
    flat /= blocks_per_dim_[i];
    hi[i] = (b == blocks_per_dim_[i] - 1) ? r_[i] : std::min(l_[i] + (b + 1) * acc_[i], r_[i]);
  }
  return hi;
}

void TileBandit::build_adjacency() {
  const size_t n = l_.size();
  block_tiles_.assign(n_blocks_, {});
  tile_blocks_.assign(n_tiles_, {});
  block_w_sum_.assign(n_blocks_, 0.0);
  block_n_.assign(n_blocks_, 0);

  // Per-dimension tile preimages: tile 0 starts at l (it also absorbs the
  // offset gap below l+to), tile j>=1 starts at l+to+j*ta. A tile overlaps a
  // block iff its start lies below the block's right edge and the next tile's
  // start lies above the block's left edge.
  for (int b = 0; b < n_blocks_; ++b) {
    std::vector<int> bidx(n);
    int rem = b;
    for (size_t i = n; i-- > 0;) {
      bidx[i] = rem % blocks_per_dim_[i];
      rem /= blocks_per_dim_[i];
    }
    std::vector<std::pair<int, int>> ranges(n);
    for (size_t i = 0; i < n; ++i) {
      double blo = l_[i] + bidx[i] * acc_[i];
      bool last = bidx[i] == blocks_per_dim_[i] - 1;
      double bhi = last ? r_[i] : std::min(l_[i] + (bidx[i] + 1) * acc_[i], r_[i]);

      double ylo = clampd(blo - to_[i], l_[i], r_[i]);
      int j_lo = std::clamp(static_cast<int>(std::floor((ylo - l_[i]) / ta_[i])), 0,
                            tiles_per_dim_[i] - 1);
      double yhi = clampd(bhi - to_[i], l_[i], r_[i]);
      int j_hi = std::clamp(static_cast<int>(std::floor((yhi - l_[i]) / ta_[i])), 0,
                            tiles_per_dim_[i] - 1);
      if (!last) {
        // Half-open block: a tile starting exactly at the right edge is out.
        while (j_hi > j_lo && l_[i] + to_[i] + j_hi * ta_[i] >= bhi) --j_hi;
      }
      ranges[i] = {j_lo, j_hi};
    }
    std::vector<int> cur(n);
    for (size_t i = 0; i < n; ++i) cur[i] = ranges[i].first;
    while (true) {
      block_tiles_[b].push_back(static_cast<int32_t>(tile_flat(cur)));
      size_t i = n;
      while (i-- > 0) {
        if (cur[i] < ranges[i].second) {
          ++cur[i];
          for (size_t k = i + 1; k < n; ++k) cur[k] = ranges[k].first;
          break;
        }
        if (i == 0) goto done_block;
      }
    }
  done_block:
    for (int32_t t : block_tiles_[b]) tile_blocks_[t].push_back(static_cast<int32_t>(b));
  }
}

const std::vector<int32_t>& TileBandit::block_tiles(int block_flat_index) const {
  if (block_flat_index < 0 || block_flat_index >= n_blocks_)
    throw std::out_of_range("block_tiles: bad block index");
  return block_tiles_[block_flat_index];
}

double TileBandit::evaluate_block(int block_flat_index) const {
  if (block_flat_index < 0 || block_flat_index >= n_blocks_)
    throw std::out_of_range("evaluate_block: bad block index");
  return block_w_sum_[block_flat_index] /
         static_cast<double>(block_tiles_[block_flat_index].size());
}

int64_t TileBandit::block_count(int block_flat_index) const {
  if (block_flat_index < 0 || block_flat_index >= n_blocks_)
    throw std::out_of_range("block_count: bad block index");
  return block_n_[block_flat_index];
}

void TileBandit::update(const std::vector<double>& x, double g) {
  if (!std::isfinite(g)) throw std::invalid_argument("TileBandit::update: non-finite payoff");
  int b = block_flat(block_of(x));
  double v = evaluate_block(b);
  int j = tile_flat(tile_of(x));
  double dw = lr_ * (g - v);
  w_[j] += dw;
  N_[j] += 1;
  for (int32_t ab : tile_blocks_[j]) {
    block_w_sum_[ab] += dw;
    block_n_[ab] += 1;
  }
  ++total_updates_;
}

void TileBandit::set_state(std::vector<double> w, std::vector<int64_t> n) {
  if (w.size() != static_cast<size_t>(n_tiles_) || n.size() != static_cast<size_t>(n_tiles_))
    throw std::invalid_argument("set_state: size mismatch");
  for (double x : w)
    if (!std::isfinite(x)) throw std::invalid_argument("set_state: non-finite weight");
  for (int64_t c : n)
    if (c < 0) throw std::invalid_argument("set_state: negative count");
  w_ = std::move(w);
  N_ = std::move(n);
  std::fill(block_w_sum_.begin(), block_w_sum_.end(), 0.0);
  std::fill(block_n_.begin(), block_n_.end(), 0);
  for (int j = 0; j < n_tiles_; ++j) {
    for (int32_t b : tile_blocks_[j]) {
      block_w_sum_[b] += w_[j];
      block_n_[b] += N_[j];
    }
  }
  total_updates_ = std::accumulate(N_.begin(), N_.end(), int64_t{0});
}

std::vector<double> TileBandit::score_blocks() const {
  std::vector<double> v(n_blocks_);
  for (int b = 0; b < n_blocks_; ++b) v[b] = evaluate_block(b);
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / n_blocks_;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var = std::max(var / n_blocks_, 0.0);
  double sigma = std::sqrt(var);
  double lognt = std::log1p(static_cast<double>(total_updates_));
  std::vector<double> score(n_blocks_);
  for (int b = 0; b < n_blocks_; ++b) {
    double z = sigma < 1e-12 ? 0.0 : (v[b] - mean) / sigma;
    score[b] = z + ucb_c_ * std::sqrt(lognt / (1.0 + static_cast<double>(block_n_[b])));
  }
  return score;
}

std::vector<std::vector<double>> TileBandit::sample_candidates(std::mt19937_64& rng) const {
  if (d_ > n_blocks_)
    throw std::invalid_argument("sample_candidates: d exceeds block count");
  std::vector<double> score = score_blocks();
  std::vector<int> chosen;
  chosen.reserve(d_);
  if (mode_ == Mode::argmax) {
    std::vector<int> order(n_blocks_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    chosen.assign(order.begin(), order.begin() + d_);
  } else {
    double mx = *std::max_element(score.begin(), score.end());
    std::vector<double> p(n_blocks_);
    for (int b = 0; b < n_blocks_; ++b) p[b] = std::exp(score[b] - mx);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < d_; ++k) {
      double total = std::accumulate(p.begin(), p.end(), 0.0);
      double u = unit(rng) * total;
      int pick = -1;
      double acc = 0.0;
      for (int b = 0; b < n_blocks_; ++b) {
        if (p[b] <= 0.0) continue;
        acc += p[b];
        if (u < acc) {
          pick = b;
          break;
        }
      }
      if (pick < 0) {
        for (int b = n_blocks_ - 1; b >= 0; --b)
          if (p[b] > 0.0) {
            pick = b;
            break;
          }
      }
      chosen.push_back(pick);
      p[pick] = 0.0;
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> points;
  points.reserve(chosen.size());
  for (int b : chosen) {
    std::vector<double> lo = block_lo(b);
    std::vector<double> hi = block_hi(b);
    std::vector<double> pt(lo.size());
    for (size_t i = 0; i < lo.size(); ++i) pt[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    points.push_back(std::move(pt));
  }
  return points;
}

void EnsembleConfig::validate() const {
  if (members < 1) throw std::invalid_argument("EnsembleConfig: members must be >= 1");
  if (d < 1) throw std::invalid_argument("EnsembleConfig: d must be >= 1");
  if (ucb_c < 0.0) throw std::invalid_argument("EnsembleConfig: ucb_c must be >= 0");
  if (lr_choices.empty() || ta_choices.empty() || acc_choices.empty())
    throw std::invalid_argument("EnsembleConfig: empty choice set");
  for (double v : lr_choices)
    if (!(v > 0.0)) throw std::invalid_argument("EnsembleConfig: lr choices must be positive");
  for (double v : ta_choices)
    if (!(v > 0.0)) throw std::invalid_argument("EnsembleConfig: ta choices must be positive");
  for (double v : acc_choices)
    if (!(v > 0.0)) throw std::invalid_argument("EnsembleConfig: acc choices must be positive");
  if (to_lo < 0.0 || to_hi < to_lo)
    throw std::invalid_argument("EnsembleConfig: need 0 <= to_lo <= to_hi");
  const size_t n = box_l.size();
  if (n == 0 || box_r.size() != n || unit.size() != n)
    throw std::invalid_argument("EnsembleConfig: box/unit dimension mismatch");
  for (size_t i = 0; i < n; ++i) {
    if (!(box_l[i] < box_r[i])) throw std::invalid_argument("EnsembleConfig: need box_l < box_r");
    if (!(unit[i] > 0.0)) throw std::invalid_argument("EnsembleConfig: unit must be positive");
  }
}

BanditEnsemble::BanditEnsemble(const EnsembleConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const size_t n = cfg.box_l.size();
  members_.reserve(cfg.members);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<size_t> lr_pick(0, cfg.lr_choices.size() - 1);
  std::uniform_int_distribution<size_t> ta_pick(0, cfg.ta_choices.size() - 1);
  std::uniform_int_distribution<size_t> acc_pick(0, cfg.acc_choices.size() - 1);
  std::uniform_real_distribution<double> to_draw(cfg.to_lo, cfg.to_hi);
  for (int m = 0; m < cfg.members; ++m) {
    TileBandit::Mode mode = TileBandit::Mode::argmax;
    if (cfg.mix_modes && coin(rng) == 1) mode = TileBandit::Mode::random;
    double lr = cfg.lr_choices[lr_pick(rng)];
    double ta_base = cfg.ta_choices[ta_pick(rng)];
    double acc_base = cfg.acc_choices[acc_pick(rng)];
    double to_base = to_draw(rng);
    std::vector<double> ta(n), acc(n), to(n);
    for (size_t i = 0; i < n; ++i) {
      ta[i] = ta_base * cfg.unit[i];
      acc[i] = acc_base * cfg.unit[i];
      to[i] = to_base * cfg.unit[i];
    }
    members_.emplace_back(mode, cfg.box_l, cfg.box_r, lr, cfg.d, acc, ta, to, cfg.ucb_c);
  }
}

int BanditEnsemble::dim() const { return members_.empty() ? 0 : members_.front().dim(); }

std::vector<double> BanditEnsemble::sample(std::mt19937_64& rng) const {
  std::vector<std::vector<double>> pool;
  for (const TileBandit& m : members_) {
    std::vector<std::vector<double>> c = m.sample_candidates(rng);
    for (auto& pt : c) pool.push_back(std::move(pt));
  }
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

void BanditEnsemble::update(const std::vector<double>& x, double g) {
  if (!std::isfinite(g)) throw std::invalid_argument("BanditEnsemble::update: non-finite payoff");
  for (TileBandit& m : members_) m.update(x, g);
}

int64_t BanditEnsemble::total_updates() const {
  return members_.empty() ? 0 : members_.front().total_updates();
}

IndexPoint ensemble_sample_lambda(const BanditEnsemble& ensemble, std::mt19937_64& rng) {
  std::vector<double> x = ensemble.sample(rng);
  if (ensemble.dim() == 3) return search_to_index({x[0], x[1], x[2]});
  if (ensemble.dim() == 1) {
    IndexPoint p = search_to_index({x[0], x[0], 1.0});
    return p;
  }
  throw std::logic_error("ensemble_sample_lambda: unsupported dimension");
}

void ensemble_update_lambda(BanditEnsemble& ensemble, const IndexPoint& lambda, double G) {
  SearchCoordinates c = index_to_search(lambda);
  if (ensemble.dim() == 3) {
    ensemble.update({c.x1, c.x2, c.x3}, G);
  } else if (ensemble.dim() == 1) {
    ensemble.update({c.x1}, G);
  } else {
    throw std::logic_error("ensemble_update_lambda: unsupported dimension");
  }
}

}  // namespace gdi
