#include "gdi/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gdi {

namespace {

void check_measure(const std::vector<double>& mass) {
  if (mass.empty()) throw std::invalid_argument("measure: empty support");
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m))
      throw std::invalid_argument("measure: mass must be finite and >= 0");
    total += m;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("measure: mass must sum to 1");
}

}  // namespace

std::vector<double> exp_tilt(const std::vector<double>& mass, const std::vector<double>& g,
                             double eta) {
  check_measure(mass);
  if (g.size() != mass.size()) throw std::invalid_argument("exp_tilt: size mismatch");
  if (!std::isfinite(eta)) throw std::invalid_argument("exp_tilt: non-finite eta");
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw std::invalid_argument("exp_tilt: non-finite score");
    if (mass[i] > 0.0) mx = std::max(mx, eta * g[i]);
  }
  std::vector<double> out(mass.size());
  double z = 0.0;
  for (size_t i = 0; i < mass.size(); ++i) {
    out[i] = mass[i] > 0.0 ? mass[i] * std::exp(eta * g[i] - mx) : 0.0;
    z += out[i];
  }
  if (!(z > 0.0)) throw std::invalid_argument("exp_tilt: zero total mass");
  for (double& v : out) v /= z;
  return out;
}

CouplingMatrix uttc_coupling(const std::vector<double>& mass, const std::vector<double>& g,
                             double eta) {
  check_measure(mass);
  if (g.size() != mass.size()) throw std::invalid_argument("uttc_coupling: size mismatch");
  const int n = static_cast<int>(mass.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g[a] < g[b]; });

  // Work in score-sorted coordinates with shifted exponents; every quantity
  // below is a ratio of partition sums, so the shift cancels.
  std::vector<double> mu(n), e(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, eta * g[order[i]]);
  for (int i = 0; i < n; ++i) {
    mu[i] = mass[order[i]];
    e[i] = std::exp(eta * g[order[i]] - mx);
  }
  std::vector<double> tail(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) tail[i] = tail[i + 1] + mu[i];

  std::vector<double> prefix(n + 1, 0.0);  // prefix[m] = sum_{i<m} mu_i e_i
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + mu[i] * e[i];

  CouplingMatrix plan(n, std::vector<double>(n, 0.0));
  plan[0][0] = tail[0];  // single-point base case: all mass sits on the tail
  for (int m = 0; m + 1 < n; ++m) {
    double z_cur = prefix[m] + tail[m] * e[m];
    double z_next = prefix[m + 1] + tail[m + 1] * e[m + 1];
    if (!(z_next > 0.0)) throw std::runtime_error("uttc_coupling: degenerate partition sum");
    double factor = z_cur / z_next;
    double b_m = mu[m] * e[m] / z_next;
    double b_m1 = tail[m + 1] * e[m + 1] / z_next;
    double b_sum = b_m + b_m1;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= m; ++j) plan[i][j] *= factor;
      double bracket = plan[i][m] + (1.0 - factor) * mu[i];
      if (b_sum > 0.0) {
        plan[i][m] = bracket * b_m / b_sum;
        plan[i][m + 1] = bracket * b_m1 / b_sum;
      } else {
        plan[i][m] = 0.0;
        plan[i][m + 1] = 0.0;
      }
    }
    double u = b_sum > 0.0 ? b_m * (mu[m] + tail[m + 1]) / b_sum : 0.0;
    u = std::min(u, mu[m]);  // exact math keeps u <= mu[m]; clamp rounding
    plan[m][m] = u;
    plan[m][m + 1] = mu[m] - u;
    plan[m + 1][m + 1] = tail[m + 1];
  }

  CouplingMatrix out(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[order[i]][order[j]] = plan[i][j];
  return out;
}

CouplingCheck verify_coupling(const std::vector<double>& mass, const std::vector<double>& g,
                              double eta, const CouplingMatrix& plan) {
  check_measure(mass);
  const size_t n = mass.size();
  if (g.size() != n || plan.size() != n)
    throw std::invalid_argument("verify_coupling: size mismatch");
  for (const auto& row : plan)
    if (row.size() != n) throw std::invalid_argument("verify_coupling: ragged plan");

  std::vector<double> tilted = exp_tilt(mass, g, eta);
  CouplingCheck res;
  std::vector<double> col(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (size_t j = 0; j < n; ++j) {
      double m = plan[i][j];
      res.min_entry = std::min(res.min_entry, m);
      row_sum += m;
      col[j] += m;
      if (g[i] > g[j]) res.downward_mass += m;
    }
    res.max_row_residual = std::max(res.max_row_residual, std::fabs(row_sum - mass[i]));
  }
  for (size_t j = 0; j < n; ++j)
    res.max_col_residual = std::max(res.max_col_residual, std::fabs(col[j] - tilted[j]));
  return res;
}

double tilt_inequality_gap(const std::vector<double>& mass, const std::vector<double>& g,
                           const std::vector<double>& f, double eta) {
  check_measure(mass);
  if (g.size() != mass.size() || f.size() != mass.size())
    throw std::invalid_argument("tilt_inequality_gap: size mismatch");
  if (mass.size() > 200)
    throw std::invalid_argument("tilt_inequality_gap: support too large for pairwise check");
  for (size_t i = 0; i < mass.size(); ++i)
    for (size_t j = i + 1; j < mass.size(); ++j)
      if ((f[i] - f[j]) * (g[i] - g[j]) < 0.0)
        throw std::invalid_argument("tilt_inequality_gap: f and g are not co-monotone");
  std::vector<double> tilted = exp_tilt(mass, g, eta);
  double base = 0.0, shifted = 0.0;
  for (size_t i = 0; i < mass.size(); ++i) {
    base += mass[i] * f[i];
    shifted += tilted[i] * f[i];
  }
  return shifted - base;
}

double superior_target(const std::vector<double>& mass, const std::vector<double>& scores,
                       const std::vector<double>& f, double eta) {
  std::vector<double> tilted = exp_tilt(mass, scores, eta);
  if (f.size() != tilted.size()) throw std::invalid_argument("superior_target: size mismatch");
  double out = 0.0;
  for (size_t i = 0; i < f.size(); ++i) out += tilted[i] * f[i];
  return out;
}

double perf_diff_residual(const TabularMdp& mdp, const std::vector<double>& pi_new,
                          const std::vector<double>& pi_old) {
  const int ns = mdp.n_states, na = mdp.n_actions;
  if (static_cast<int>(pi_new.size()) != ns * na || static_cast<int>(pi_old.size()) != ns * na)
    throw std::invalid_argument("perf_diff_residual: policy size mismatch");

  std::vector<double> v_new = exact_policy_value(mdp, pi_new);
  std::vector<double> v_old = exact_policy_value(mdp, pi_old);
  std::vector<double> q_old = exact_policy_q(mdp, pi_old);
  std::vector<double> visits = discounted_visitation(mdp, pi_new, mdp.initial_dist);

  double lhs = 0.0;
  for (int s = 0; s < ns; ++s) lhs += mdp.initial_dist[s] * (v_new[s] - v_old[s]);

  double rhs = 0.0;
  for (int s = 0; s < ns; ++s) {
    if (mdp.terminal[s]) continue;
    double adv = 0.0;
    for (int a = 0; a < na; ++a) {
      size_t k = static_cast<size_t>(s) * na + a;
      adv += (pi_new[k] - pi_old[k]) * q_old[k];
    }
    rhs += visits[s] * adv;
  }
  rhs /= 1.0 - mdp.discount;
  return std::fabs(lhs - rhs);
}

}  // namespace gdi
