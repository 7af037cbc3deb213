#include "gdi/mdp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace gdi {

namespace {

void check_distribution(const std::vector<double>& p, size_t off, size_t n,
                        const char* what) {
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double v = p[off + i];
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

// Row-stochastic state transition matrix under `policy`.
Eigen::MatrixXd policy_transition(const TabularMdp& env, const std::vector<double>& policy) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(env.n_states, env.n_states);
  for (int s = 0; s < env.n_states; ++s)
    for (int a = 0; a < env.n_actions; ++a) {
      double w = policy[static_cast<size_t>(s) * env.n_actions + a];
      if (w == 0.0) continue;
      for (int s2 = 0; s2 < env.n_states; ++s2) P(s, s2) += w * env.p(s, a, s2);
    }
  return P;
}

}  // namespace

void TabularMdp::validate() const {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("empty MDP");
  if (!(discount > 0.0 && discount < 1.0))
    throw std::invalid_argument("discount must lie in (0,1)");
  if (transition.size() != static_cast<size_t>(n_states) * n_actions * n_states ||
      reward.size() != static_cast<size_t>(n_states) * n_actions ||
      initial_dist.size() != static_cast<size_t>(n_states) ||
      terminal.size() != static_cast<size_t>(n_states))
    throw std::invalid_argument("MDP array shape mismatch");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      check_distribution(transition, (static_cast<size_t>(s) * n_actions + a) * n_states,
                         n_states, "transition row");
  check_distribution(initial_dist, 0, n_states, "initial distribution");
}

int sample_discrete(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // guard against rounding shortfall
  for (size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  throw std::runtime_error("sample_discrete: zero distribution");
}

int reset(const TabularMdp& env, std::mt19937_64& rng) {
  return sample_discrete(env.initial_dist, rng);
}

StepResult step(const TabularMdp& env, int state, int action, std::mt19937_64& rng) {
  if (state < 0 || state >= env.n_states) throw std::invalid_argument("state out of range");
  if (action < 0 || action >= env.n_actions)
    throw std::invalid_argument("action out of range");
  if (env.terminal[state]) throw std::invalid_argument("cannot step a terminal state");
  std::vector<double> row(env.n_states);
  for (int s2 = 0; s2 < env.n_states; ++s2) row[s2] = env.p(state, action, s2);
  int next = sample_discrete(row, rng);
  return {next, env.r(state, action), env.terminal[next] != 0};
}

Trajectory rollout(const TabularMdp& env, const PolicyFn& policy, int max_steps,
                   std::mt19937_64& rng) {
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  Trajectory out;
  int s = reset(env, rng);
  for (int t = 0; t < max_steps; ++t) {
    if (env.terminal[s]) break;
    std::vector<double> mu = policy(s);
    int a = sample_discrete(mu, rng);
    StepResult sr = step(env, s, a, rng);
    out.states.push_back(s);
    out.actions.push_back(a);
    out.rewards.push_back(sr.reward);
    out.dones.push_back(sr.done ? 1 : 0);
    out.behavior_probs.push_back(std::move(mu));
    out.episode_return += sr.reward;
    s = sr.next_state;
    if (sr.done) break;
  }
  return out;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  double g = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) g = rewards[i] + gamma * g;
  return g;
}

std::vector<double> exact_policy_value(const TabularMdp& env,
                                       const std::vector<double>& policy) {
  const int n = env.n_states;
  Eigen::MatrixXd P = policy_transition(env, policy);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    if (env.terminal[s]) continue;  // absorbing, zero reward
    for (int a = 0; a < env.n_actions; ++a)
      r(s) += policy[static_cast<size_t>(s) * env.n_actions + a] * env.r(s, a);
  }
  for (int s = 0; s < n; ++s)
    if (env.terminal[s]) {  // force V(terminal)=0 regardless of stored rewards
      P.row(s).setZero();
      P(s, s) = 1.0;
      r(s) = 0.0;
    }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - env.discount * P;
  Eigen::VectorXd V = A.partialPivLu().solve(r);
  return std::vector<double>(V.data(), V.data() + n);
}

std::vector<double> exact_policy_q(const TabularMdp& env,
                                   const std::vector<double>& policy) {
  std::vector<double> V = exact_policy_value(env, policy);
  std::vector<double> Q(static_cast<size_t>(env.n_states) * env.n_actions, 0.0);
  for (int s = 0; s < env.n_states; ++s)
    for (int a = 0; a < env.n_actions; ++a) {
      if (env.terminal[s]) continue;
      double q = env.r(s, a);
      for (int s2 = 0; s2 < env.n_states; ++s2)
        q += env.discount * env.p(s, a, s2) * V[s2];
      Q[static_cast<size_t>(s) * env.n_actions + a] = q;
    }
  return Q;
}

std::vector<double> discounted_visitation(const TabularMdp& env,
                                          const std::vector<double>& policy,
                                          const std::vector<double>& start_dist) {
  const int n = env.n_states;
  if (start_dist.size() != static_cast<size_t>(n))
    throw std::invalid_argument("start distribution size mismatch");
  Eigen::MatrixXd P = policy_transition(env, policy);
  for (int s = 0; s < n; ++s)
    if (env.terminal[s]) {
      P.row(s).setZero();
      P(s, s) = 1.0;
    }
  Eigen::VectorXd rho(n);
  for (int s = 0; s < n; ++s) rho(s) = start_dist[s];
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - env.discount * P.transpose();
  Eigen::VectorXd d = A.partialPivLu().solve(rho) * (1.0 - env.discount);
  return std::vector<double>(d.data(), d.data() + n);
}

TabularMdp make_chain_env(int length, double slip) {
  if (length < 1) throw std::invalid_argument("chain length must be >= 1");
  if (!(slip >= 0.0 && slip < 1.0)) throw std::invalid_argument("slip must lie in [0,1)");
  TabularMdp env;
  env.n_states = length + 1;
  env.n_actions = 2;  // 0 = left, 1 = right
  env.transition.assign(static_cast<size_t>(env.n_states) * 2 * env.n_states, 0.0);
  env.reward.assign(static_cast<size_t>(env.n_states) * 2, 0.0);
  env.initial_dist.assign(env.n_states, 0.0);
  env.initial_dist[0] = 1.0;
  env.terminal.assign(env.n_states, 0);
  env.terminal[length] = 1;
  for (int s = 0; s < length; ++s) {
    env.p(s, 0, std::max(s - 1, 0)) = 1.0;
    if (s == length - 1) {
      // final approach is sure-footed; the goal reward is paid exactly once
      env.p(s, 1, length) = 1.0;
      env.r(s, 1) = 10.0;
    } else {
      env.p(s, 1, s + 1) = 1.0 - slip;
      env.p(s, 1, s) += slip;
    }
  }
  env.r(0, 0) = 0.1;  // distractor: repeatable small payoff at the start
  // terminal row: absorbing, zero reward
  env.p(length, 0, length) = 1.0;
  env.p(length, 1, length) = 1.0;
  env.validate();
  return env;
}

TabularMdp make_grid_env(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("grid sides must be >= 1");
  TabularMdp env;
  const int n = width * height;
  env.n_states = n;
  env.n_actions = 4;  // 0=up 1=down 2=left 3=right, moves clamp at walls
  env.transition.assign(static_cast<size_t>(n) * 4 * n, 0.0);
  env.reward.assign(static_cast<size_t>(n) * 4, 0.0);
  env.initial_dist.assign(n, 0.0);
  env.initial_dist[0] = 1.0;
  env.terminal.assign(n, 0);
  const int goal = n - 1;
  env.terminal[goal] = 1;
  auto id = [width](int x, int y) { return y * width + x; };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      int s = id(x, y);
      if (s == goal) {
        for (int a = 0; a < 4; ++a) env.p(s, a, s) = 1.0;
        continue;
      }
      const int nx[4] = {x, x, std::max(x - 1, 0), std::min(x + 1, width - 1)};
      const int ny[4] = {std::max(y - 1, 0), std::min(y + 1, height - 1), y, y};
      for (int a = 0; a < 4; ++a) {
        int s2 = id(nx[a], ny[a]);
        env.p(s, a, s2) = 1.0;
        if (s2 == goal) env.r(s, a) = 1.0;
      }
    }
  env.validate();
  return env;
}

TabularMdp make_random_mdp(int n_states, int n_actions, std::mt19937_64& rng) {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("sizes must be >= 1");
  TabularMdp env;
  env.n_states = n_states;
  env.n_actions = n_actions;
  env.discount = 0.95;
  env.transition.assign(static_cast<size_t>(n_states) * n_actions * n_states, 0.0);
  env.reward.assign(static_cast<size_t>(n_states) * n_actions, 0.0);
  env.initial_dist.assign(n_states, 0.0);
  env.terminal.assign(n_states, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // exponential draws give well-spread stochastic rows
  auto fill_dist = [&](double* p, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = -std::log(1.0 - unif(rng));
      sum += p[i];
    }
    for (int i = 0; i < n; ++i) p[i] /= sum;
  };
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      fill_dist(&env.transition[(static_cast<size_t>(s) * n_actions + a) * n_states],
                n_states);
      env.r(s, a) = 2.0 * unif(rng) - 1.0;
    }
  fill_dist(env.initial_dist.data(), n_states);
  env.validate();
  return env;
}

}  // namespace gdi
