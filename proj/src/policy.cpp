#include "gdi/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gdi {

std::vector<double> tempered_softmax(const std::vector<double>& logits, double tau) {
  if (logits.empty()) throw std::invalid_argument("empty logits");
  const size_t n = logits.size();
  if (std::isinf(tau) && tau > 0.0)
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive or +inf");
  const double k = std::min(1.0 / tau, kInvTempCap);
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> out(n);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::exp(k * (logits[i] - m));
    z += out[i];
  }
  for (size_t i = 0; i < n; ++i) out[i] /= z;
  return out;
}

SearchCoordinates index_to_search(const IndexPoint& lambda) {
  auto to_x = [](double tau) {
    if (std::isinf(tau) && tau > 0.0) return 0.0;
    if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive or +inf");
    return std::log1p(1.0 / tau);
  };
  return {to_x(lambda.tau1), to_x(lambda.tau2), lambda.epsilon};
}

IndexPoint search_to_index(const SearchCoordinates& x) {
  auto to_tau = [](double xi) {
    xi = std::clamp(xi, 0.0, kInvTempCap);
    if (xi == 0.0) return kTauInf;
    return 1.0 / std::expm1(xi);
  };
  return {to_tau(x.x1), to_tau(x.x2), std::clamp(x.x3, 0.0, 1.0)};
}

PolicyParams make_params(int n_features, int n_actions, bool isomorphic) {
  if (n_features < 1 || n_actions < 1) throw std::invalid_argument("bad parameter shape");
  PolicyParams p;
  p.n_features = n_features;
  p.n_actions = n_actions;
  p.isomorphic = isomorphic;
  p.h1.A.assign(static_cast<size_t>(n_features) * n_actions, 0.0);
  p.h1.v.assign(n_features, 0.0);
  if (!isomorphic) {
    p.h2 = p.h1;
  }
  return p;
}

DuelingOut dueling_q(const PolicyParams& params, int head, int state) {
  if (state < 0 || state >= params.n_features) throw std::invalid_argument("bad state");
  const HeadParams& h = params.head(head);
  DuelingOut out;
  out.A.assign(h.A.begin() + static_cast<size_t>(state) * params.n_actions,
               h.A.begin() + static_cast<size_t>(state + 1) * params.n_actions);
  std::vector<double> pi_ref = tempered_softmax(out.A, 1.0);
  double mean = 0.0;
  for (int a = 0; a < params.n_actions; ++a) mean += pi_ref[a] * out.A[a];
  out.Abar.resize(params.n_actions);
  for (int a = 0; a < params.n_actions; ++a) out.Abar[a] = out.A[a] - mean;
  out.V = h.v[state];
  out.Q.resize(params.n_actions);
  for (int a = 0; a < params.n_actions; ++a) out.Q[a] = out.Abar[a] + out.V;
  return out;
}

std::vector<double> mixture_policy(const PolicyParams& params, const IndexPoint& lambda,
                                   int state) {
  if (state < 0 || state >= params.n_features) throw std::invalid_argument("bad state");
  const double eps = lambda.epsilon;
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("epsilon outside [0,1]");
  const int nA = params.n_actions;
  std::vector<double> a1(params.head(0).A.begin() + static_cast<size_t>(state) * nA,
                         params.head(0).A.begin() + static_cast<size_t>(state + 1) * nA);
  std::vector<double> p1 = tempered_softmax(a1, lambda.tau1);
  if (eps == 1.0) return p1;
  std::vector<double> a2(params.head(1).A.begin() + static_cast<size_t>(state) * nA,
                         params.head(1).A.begin() + static_cast<size_t>(state + 1) * nA);
  std::vector<double> p2 = tempered_softmax(a2, lambda.tau2);
  std::vector<double> out(nA);
  for (int a = 0; a < nA; ++a) out[a] = eps * p1[a] + (1.0 - eps) * p2[a];
  return out;
}

void SnapshotStore::publish(const PolicyParams& params) {
  auto snap = std::make_shared<const PolicyParams>(params);
  std::lock_guard<std::mutex> lock(mutex_);
  if (latest_ && snap->version <= latest_->version)
    throw std::logic_error("snapshot version must strictly increase");
  latest_ = std::move(snap);
}

std::shared_ptr<const PolicyParams> SnapshotStore::fetch() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!latest_) throw std::runtime_error("fetch before first publish");
  return latest_;
}

bool SnapshotStore::empty() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return !latest_;
}

}  // namespace gdi
