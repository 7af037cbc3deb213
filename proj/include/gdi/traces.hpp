#pragma once

#include <vector>

#include "gdi/mdp.hpp"

namespace gdi {

// Fixed-length slice of experience as the learner consumes it. `rewards`
// carries the shaped stream the critic trains on, `raw_rewards` the
// environment payoff used by the controller. `bootstrap_state` is the state
// after the last step (used when the slice is truncated mid-episode).
struct SampleSegment {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> raw_rewards;
  std::vector<uint8_t> dones;
  std::vector<double> behavior_probs;
  int bootstrap_state = 0;

  int length() const { return static_cast<int>(states.size()); }
  void validate() const;
};

struct LossWeights {
  double v_scale = 1.0;
  double q_scale = 10.0;
  double pi_scale = 10.0;
  double is_clip_rho = 1.05;
  double is_clip_c = 1.05;
  double discount = 0.997;

  void validate() const;
};

// Clipped-ratio projection of a target policy against the behavior policy:
// min(rho_bar * mu, pi), renormalized.
std::vector<double> vtrace_target_policy(const std::vector<double>& pi,
                                         const std::vector<double>& mu, double rho_bar);

struct VtraceOut {
  std::vector<double> v_targets;  // corrected state-value targets, one per step
  std::vector<double> advantages;  // policy-gradient advantages, one per step
};

// Clipped importance-weighted value correction over one slice. `step_values`
// holds V(s_t) for each step under the frozen parameters; `bootstrap_value`
// is V of the state after the slice (ignored past a terminal step).
VtraceOut vtrace_from_arrays(const std::vector<double>& pi_taken,
                             const std::vector<double>& mu_taken,
                             const std::vector<double>& rewards,
                             const std::vector<uint8_t>& dones,
                             const std::vector<double>& step_values, double bootstrap_value,
                             const LossWeights& w);

struct RetraceOut {
  std::vector<double> q_targets;  // one per step with a defined successor pair
  int n_valid = 0;
};

// Safe multi-step action-value targets along the sampled path. Steps need the
// next sampled (state, action) pair, so an unterminated slice loses its final
// step; a terminal step's target is just its reward.
RetraceOut retrace_from_arrays(const std::vector<double>& pi_taken,
                               const std::vector<double>& mu_taken,
                               const std::vector<double>& rewards,
                               const std::vector<uint8_t>& dones,
                               const std::vector<double>& q_taken, const LossWeights& w);

// Exact dense-operator forms on a known model, for cross-checking the sampled
// recursions and their fixed points.
std::vector<double> vtrace_operator(const TabularMdp& mdp, const std::vector<double>& v,
                                    const std::vector<std::vector<double>>& pi,
                                    const std::vector<std::vector<double>>& mu,
                                    double rho_bar, double c_bar);

std::vector<double> retrace_operator(const TabularMdp& mdp, const std::vector<double>& q,
                                     const std::vector<std::vector<double>>& pi,
                                     const std::vector<std::vector<double>>& mu,
                                     double c_bar);

}  // namespace gdi
