#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

namespace gdi {

// Effective inverse temperature is capped here; the cap is what bounds the
// searchable policy family (x1,x2 <= 50 in search coordinates).
constexpr double kInvTempCap = 50.0;
constexpr double kTauInf = std::numeric_limits<double>::infinity();

// lambda = (tau1, tau2, epsilon). tau=+inf is the exact-uniform sentinel.
struct IndexPoint {
  double tau1 = 1.0;
  double tau2 = kTauInf;
  double epsilon = 1.0;
};

// x1 = log(1 + 1/tau1), x2 likewise, x3 = epsilon. Box: [0,50]^2 x [0,1].
struct SearchCoordinates {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 1.0;
};

// Softmax of logits/tau with max-subtraction; tau=+inf gives exact uniform,
// otherwise the inverse temperature is clamped to kInvTempCap. tau <= 0 throws.
std::vector<double> tempered_softmax(const std::vector<double>& logits, double tau);

SearchCoordinates index_to_search(const IndexPoint& lambda);
// Clamps x into the box; x=0 maps to the tau=+inf sentinel. Round-trips with
// index_to_search within 1e-12 on the box interior.
IndexPoint search_to_index(const SearchCoordinates& x);

struct HeadParams {
  std::vector<double> A;  // [n_features x n_actions], row-major
  std::vector<double> v;  // [n_features]
};

// Linear-in-features dueling parameters; features are one-hot state indices,
// so rows of A are per-state advantage logits. In isomorphic mode both logical
// heads resolve to h1 (theta1 == theta2).
struct PolicyParams {
  int n_features = 0;
  int n_actions = 0;
  bool isomorphic = true;
  HeadParams h1, h2;
  int64_t version = 0;

  const HeadParams& head(int i) const { return (isomorphic || i == 0) ? h1 : h2; }
  HeadParams& head(int i) { return (isomorphic || i == 0) ? h1 : h2; }
  int n_heads() const { return isomorphic ? 1 : 2; }
};

PolicyParams make_params(int n_features, int n_actions, bool isomorphic);

struct DuelingOut {
  std::vector<double> A;     // advantage logits at the state
  std::vector<double> Abar;  // A - E_{pi_ref}[A], pi_ref = softmax(A) at temp 1
  double V = 0.0;
  std::vector<double> Q;     // Abar + V
};

DuelingOut dueling_q(const PolicyParams& params, int head, int state);

// eps*softmax(A1/tau1) + (1-eps)*softmax(A2/tau2) at the state.
std::vector<double> mixture_policy(const PolicyParams& params, const IndexPoint& lambda,
                                   int state);

// Versioned immutable snapshots: the learner publishes, actors fetch. Fetch
// before the first publish is an error; versions must strictly increase.
class SnapshotStore {
 public:
  void publish(const PolicyParams& params);
  std::shared_ptr<const PolicyParams> fetch() const;
  bool empty() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const PolicyParams> latest_;
};

}  // namespace gdi
