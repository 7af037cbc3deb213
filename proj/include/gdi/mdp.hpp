#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace gdi {

// Finite MDP with expected rewards r(s,a). Terminal states are absorbing
// with zero reward; stepping one is an error.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;    // [(s*n_actions + a)*n_states + s']
  std::vector<double> reward;        // [s*n_actions + a]
  std::vector<double> initial_dist;  // [s]
  std::vector<uint8_t> terminal;     // [s]
  double discount = 0.997;

  double p(int s, int a, int s2) const {
    return transition[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[static_cast<size_t>(s) * n_actions + a]; }
  double& r(int s, int a) { return reward[static_cast<size_t>(s) * n_actions + a]; }

  // Throws std::invalid_argument on a violated invariant: every transition
  // row and the initial distribution sum to 1 within 1e-12, discount in (0,1).
  void validate() const;
};

struct StepResult {
  int next_state;
  double reward;
  bool done;
};

struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<uint8_t> dones;
  std::vector<std::vector<double>> behavior_probs;  // full mu(.|s) per step
  double episode_return = 0.0;                      // undiscounted reward sum
};

// Full action distribution for a state.
using PolicyFn = std::function<std::vector<double>(int state)>;

int sample_discrete(const std::vector<double>& probs, std::mt19937_64& rng);

int reset(const TabularMdp& env, std::mt19937_64& rng);
StepResult step(const TabularMdp& env, int state, int action, std::mt19937_64& rng);
Trajectory rollout(const TabularMdp& env, const PolicyFn& policy, int max_steps,
                   std::mt19937_64& rng);

double discounted_return(const std::vector<double>& rewards, double gamma);

// Exact DP oracles (linear solves). policy is row-major [n_states x n_actions].
std::vector<double> exact_policy_value(const TabularMdp& env,
                                       const std::vector<double>& policy);
std::vector<double> exact_policy_q(const TabularMdp& env,
                                   const std::vector<double>& policy);
std::vector<double> discounted_visitation(const TabularMdp& env,
                                          const std::vector<double>& policy,
                                          const std::vector<double>& start_dist);

// Chain of `length`+1 states. State `length` is terminal and entering it from
// the last interior state pays +10; a small +0.1 self-loop reward on action 0
// at state 0 acts as an exploration distractor. `slip` makes interior
// right-moves fail in place with that probability.
TabularMdp make_chain_env(int length, double slip);
TabularMdp make_grid_env(int width, int height);
TabularMdp make_random_mdp(int n_states, int n_actions, std::mt19937_64& rng);

}  // namespace gdi
