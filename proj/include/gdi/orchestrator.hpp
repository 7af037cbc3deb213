#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdi/bandit.hpp"
#include "gdi/learner.hpp"
#include "gdi/mdp.hpp"
#include "gdi/policy.hpp"
#include "gdi/traces.hpp"

namespace gdi {

struct EnvConfig {
  std::string type = "chain";  // chain | grid | random
  int chain_length = 8;
  double chain_slip = 0.0;
  int grid_width = 4;
  int grid_height = 4;
  int random_states = 6;
  int random_actions = 3;
  double discount = 0.997;

  void validate() const;
};

struct LearnerConfig {
  LossWeights weights;
  double step_size = 0.05;
  int replay = 2;  // gradient passes per consumed batch

  void validate() const;
};

struct RunConfig {
  EnvConfig env;
  AlgoMode mode = AlgoMode::gdi_i3;
  int64_t total_frames = 20000;
  int segment_len = 16;
  int batch_size = 8;
  int d_push = 25;  // learner publishes every this many updates
  int d_pull = 64;  // actors refresh their snapshot every this many steps
  int n_actors = 4;
  uint64_t seed = 1;
  int max_episode_steps = 64;
  LearnerConfig learner;
  EnsembleConfig bandit;
  // (1/tau1, 1/tau2, epsilon) used when the controller is disabled.
  double fixed_inv_tau1 = 1.0;
  double fixed_inv_tau2 = 0.0;
  double fixed_epsilon = 1.0;
  bool deterministic = true;  // false runs the threaded actor/learner split

  void validate() const;
};

struct EpisodeRecord {
  int64_t frame = 0;
  int64_t episode = 0;
  int actor_id = 0;
  int64_t param_version = 0;
  double inv_tau1 = 0.0;
  double inv_tau2 = 0.0;
  double epsilon = 1.0;
  double return_raw = 0.0;
  double return_shaped = 0.0;
  double coverage = 0.0;
};

struct UpdateRecord {
  int64_t update = 0;
  int64_t frame = 0;
  int64_t version = 0;
  double total_loss = 0.0;
  double pi_loss = 0.0;
  double v_loss = 0.0;
  double q_loss = 0.0;
};

struct TrainingLog {
  std::vector<EpisodeRecord> episodes;
  std::vector<UpdateRecord> updates;
  int64_t frames_done = 0;
  int n_states = 0;
  std::vector<uint8_t> visited;
};

struct RunResult {
  TrainingLog log;
  PolicyParams final_params;
  double final_window_mean_return = 0.0;  // mean raw return over the last quarter
  double state_coverage = 0.0;
  int64_t frames = 0;
  int64_t episodes = 0;
  int64_t updates = 0;
};

TabularMdp make_env(const EnvConfig& cfg, uint64_t seed);

RunResult run_training(const RunConfig& cfg);

void write_episode_csv(const TrainingLog& log, const std::string& path);
void write_update_csv(const TrainingLog& log, const std::string& path);

}  // namespace gdi
