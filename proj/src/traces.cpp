#include "gdi/traces.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace gdi {

void SampleSegment::validate() const {
  const size_t t = states.size();
  if (t == 0) throw std::invalid_argument("SampleSegment: empty");
  if (actions.size() != t || rewards.size() != t || raw_rewards.size() != t ||
      dones.size() != t || behavior_probs.size() != t)
    throw std::invalid_argument("SampleSegment: ragged arrays");
  for (size_t i = 0; i < t; ++i) {
    if (dones[i] > 1) throw std::invalid_argument("SampleSegment: done flag must be 0/1");
    if (!(behavior_probs[i] > 0.0) || behavior_probs[i] > 1.0)
      throw std::invalid_argument("SampleSegment: behavior prob outside (0,1]");
    if (!std::isfinite(rewards[i]) || !std::isfinite(raw_rewards[i]))
      throw std::invalid_argument("SampleSegment: non-finite reward");
  }
  if (bootstrap_state < 0) throw std::invalid_argument("SampleSegment: bad bootstrap state");
}

void LossWeights::validate() const {
  if (!(is_clip_c > 0.0) || is_clip_rho < is_clip_c)
    throw std::invalid_argument("LossWeights: need rho clip >= c clip > 0");
  if (!(discount > 0.0) || !(discount < 1.0))
    throw std::invalid_argument("LossWeights: discount outside (0,1)");
  if (v_scale < 0.0 || q_scale < 0.0 || pi_scale < 0.0)
    throw std::invalid_argument("LossWeights: negative loss scale");
}

std::vector<double> vtrace_target_policy(const std::vector<double>& pi,
                                         const std::vector<double>& mu, double rho_bar) {
  if (pi.size() != mu.size() || pi.empty())
    throw std::invalid_argument("vtrace_target_policy: size mismatch");
  if (!(rho_bar > 0.0)) throw std::invalid_argument("vtrace_target_policy: rho_bar <= 0");
  std::vector<double> out(pi.size());
  double z = 0.0;
  for (size_t a = 0; a < pi.size(); ++a) {
    out[a] = std::min(rho_bar * mu[a], pi[a]);
    z += out[a];
  }
  if (!(z > 0.0)) throw std::invalid_argument("vtrace_target_policy: zero mass");
  for (double& v : out) v /= z;
  return out;
}

VtraceOut vtrace_from_arrays(const std::vector<double>& pi_taken,
                             const std::vector<double>& mu_taken,
                             const std::vector<double>& rewards,
                             const std::vector<uint8_t>& dones,
                             const std::vector<double>& step_values, double bootstrap_value,
                             const LossWeights& w) {
  w.validate();
  const size_t t_len = rewards.size();
  if (pi_taken.size() != t_len || mu_taken.size() != t_len || dones.size() != t_len ||
      step_values.size() != t_len)
    throw std::invalid_argument("vtrace_from_arrays: ragged arrays");
  if (t_len == 0) return {};

  const double gamma = w.discount;
  std::vector<double> rho(t_len), c(t_len);
  for (size_t i = 0; i < t_len; ++i) {
    if (!(mu_taken[i] > 0.0)) throw std::invalid_argument("vtrace_from_arrays: mu <= 0");
    double ratio = pi_taken[i] / mu_taken[i];
    rho[i] = std::min(ratio, w.is_clip_rho);
    c[i] = std::min(ratio, w.is_clip_c);
  }

  VtraceOut out;
  out.v_targets.resize(t_len);
  out.advantages.resize(t_len);
  double dv_next = 0.0;
  for (size_t i = t_len; i-- > 0;) {
    double not_done = dones[i] ? 0.0 : 1.0;
    double v_next = (i + 1 < t_len) ? step_values[i + 1] : bootstrap_value;
    double delta = rewards[i] + gamma * not_done * v_next - step_values[i];
    double dv = rho[i] * delta + gamma * not_done * c[i] * dv_next;
    out.v_targets[i] = step_values[i] + dv;
    dv_next = dv;
  }
  for (size_t i = 0; i < t_len; ++i) {
    double not_done = dones[i] ? 0.0 : 1.0;
    double vhat_next = (i + 1 < t_len) ? out.v_targets[i + 1] : bootstrap_value;
    out.advantages[i] = rho[i] * (rewards[i] + gamma * not_done * vhat_next - step_values[i]);
  }
  return out;
}

RetraceOut retrace_from_arrays(const std::vector<double>& pi_taken,
                               const std::vector<double>& mu_taken,
                               const std::vector<double>& rewards,
                               const std::vector<uint8_t>& dones,
                               const std::vector<double>& q_taken, const LossWeights& w) {
  w.validate();
  const int t_len = static_cast<int>(rewards.size());
  if (static_cast<int>(pi_taken.size()) != t_len ||
      static_cast<int>(mu_taken.size()) != t_len ||
      static_cast<int>(dones.size()) != t_len || static_cast<int>(q_taken.size()) != t_len)
    throw std::invalid_argument("retrace_from_arrays: ragged arrays");

  RetraceOut out;
  if (t_len == 0) return out;
  // The last step only has a target if it closed the episode; otherwise it is
  // the bootstrap pair for the step before it.
  out.n_valid = dones[t_len - 1] ? t_len : t_len - 1;
  if (out.n_valid <= 0) return out;

  const double gamma = w.discount;
  out.q_targets.resize(out.n_valid);
  for (int i = out.n_valid - 1; i >= 0; --i) {
    if (dones[i]) {
      out.q_targets[i] = rewards[i];
      continue;
    }
    if (!(mu_taken[i + 1] > 0.0)) throw std::invalid_argument("retrace_from_arrays: mu <= 0");
    double q_next = q_taken[i + 1];
    double cont;
    if (i + 1 < out.n_valid) {
      double c = std::min(pi_taken[i + 1] / mu_taken[i + 1], w.is_clip_c);
      cont = q_next + c * (out.q_targets[i + 1] - q_next);
    } else {
      cont = q_next;
    }
    out.q_targets[i] = rewards[i] + gamma * cont;
  }
  return out;
}

std::vector<double> vtrace_operator(const TabularMdp& mdp, const std::vector<double>& v,
                                    const std::vector<std::vector<double>>& pi,
                                    const std::vector<std::vector<double>>& mu,
                                    double rho_bar, double c_bar) {
  const int ns = mdp.n_states, na = mdp.n_actions;
  if (static_cast<int>(v.size()) != ns || static_cast<int>(pi.size()) != ns ||
      static_cast<int>(mu.size()) != ns)
    throw std::invalid_argument("vtrace_operator: size mismatch");
  const double gamma = mdp.discount;

  Eigen::MatrixXd a_mat = Eigen::MatrixXd::Identity(ns, ns);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    if (mdp.terminal[s]) {
      d(s) = -v[s];
      continue;
    }
    for (int a = 0; a < na; ++a) {
      if (!(mu[s][a] > 0.0)) throw std::invalid_argument("vtrace_operator: mu <= 0");
      double ratio = pi[s][a] / mu[s][a];
      double rho = std::min(ratio, rho_bar);
      double c = std::min(ratio, c_bar);
      double ev_next = 0.0;
      for (int s2 = 0; s2 < ns; ++s2) {
        double p = mdp.p(s, a, s2);
        if (p == 0.0) continue;
        if (!mdp.terminal[s2]) {
          ev_next += p * v[s2];
          a_mat(s, s2) -= gamma * mu[s][a] * c * p;
        }
      }
      d(s) += mu[s][a] * rho * (mdp.r(s, a) + gamma * ev_next - v[s]);
    }
  }
  Eigen::VectorXd x = a_mat.partialPivLu().solve(d);
  std::vector<double> out(ns);
  for (int s = 0; s < ns; ++s) out[s] = v[s] + x(s);
  return out;
}

std::vector<double> retrace_operator(const TabularMdp& mdp, const std::vector<double>& q,
                                     const std::vector<std::vector<double>>& pi,
                                     const std::vector<std::vector<double>>& mu,
                                     double c_bar) {
  const int ns = mdp.n_states, na = mdp.n_actions;
  const int n = ns * na;
  if (static_cast<int>(q.size()) != n || static_cast<int>(pi.size()) != ns ||
      static_cast<int>(mu.size()) != ns)
    throw std::invalid_argument("retrace_operator: size mismatch");
  const double gamma = mdp.discount;

  Eigen::MatrixXd a_mat = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      int row = s * na + a;
      if (mdp.terminal[s]) {
        delta(row) = -q[row];
        continue;
      }
      double exp_next = 0.0;
      for (int s2 = 0; s2 < ns; ++s2) {
        double p = mdp.p(s, a, s2);
        if (p == 0.0 || mdp.terminal[s2]) continue;
        for (int a2 = 0; a2 < na; ++a2) {
          if (!(mu[s2][a2] > 0.0)) throw std::invalid_argument("retrace_operator: mu <= 0");
          int col = s2 * na + a2;
          double c = std::min(pi[s2][a2] / mu[s2][a2], c_bar);
          exp_next += p * mu[s2][a2] * q[col];
          a_mat(row, col) -= gamma * p * mu[s2][a2] * c;
        }
      }
      delta(row) = mdp.r(s, a) + gamma * exp_next - q[row];
    }
  }
  Eigen::VectorXd x = a_mat.partialPivLu().solve(delta);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = q[i] + x(i);
  return out;
}

}  // namespace gdi
