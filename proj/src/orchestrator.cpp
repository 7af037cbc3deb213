#include "gdi/orchestrator.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>

#include "gdi/rng.hpp"

namespace gdi {

namespace {

double inv_of_tau(double tau) { return std::isinf(tau) ? 0.0 : 1.0 / tau; }

IndexPoint fixed_point_of(const RunConfig& cfg) {
  IndexPoint p;
  p.tau1 = cfg.fixed_inv_tau1 > 0.0 ? 1.0 / cfg.fixed_inv_tau1 : kTauInf;
  p.tau2 = cfg.fixed_inv_tau2 > 0.0 ? 1.0 / cfg.fixed_inv_tau2 : kTauInf;
  p.epsilon = cfg.fixed_epsilon;
  return p;
}

bool uses_controller(AlgoMode m) { return m != AlgoMode::fixed_lambda; }

struct ActorState {
  std::mt19937_64 rng;
  int state = 0;
  bool episode_open = false;
  IndexPoint lambda;
  SampleSegment seg;
  double ep_raw = 0.0;
  double ep_shaped = 0.0;
  int ep_steps = 0;
  int64_t pull_counter = 0;
  std::shared_ptr<const PolicyParams> snap;
};

struct QueuedSegment {
  SampleSegment seg;
  IndexPoint lambda;
};

EpisodeRecord make_episode_record(int64_t frame, int64_t episode, int actor_id,
                                  const ActorState& a, double coverage) {
  EpisodeRecord rec;
  rec.frame = frame;
  rec.episode = episode;
  rec.actor_id = actor_id;
  rec.param_version = a.snap->version;
  rec.inv_tau1 = inv_of_tau(a.lambda.tau1);
  rec.inv_tau2 = inv_of_tau(a.lambda.tau2);
  rec.epsilon = a.lambda.epsilon;
  rec.return_raw = a.ep_raw;
  rec.return_shaped = a.ep_shaped;
  rec.coverage = coverage;
  return rec;
}

double coverage_of(const std::vector<uint8_t>& visited) {
  int64_t seen = 0;
  for (uint8_t v : visited) seen += v;
  return visited.empty() ? 0.0 : static_cast<double>(seen) / visited.size();
}

}  // namespace

void EnvConfig::validate() const {
  if (type != "chain" && type != "grid" && type != "random")
    throw std::invalid_argument("EnvConfig: unknown type '" + type + "'");
  if (type == "chain" && chain_length < 2)
    throw std::invalid_argument("EnvConfig: chain_length must be >= 2");
  if (type == "chain" && (chain_slip < 0.0 || chain_slip >= 1.0))
    throw std::invalid_argument("EnvConfig: chain_slip outside [0,1)");
  if (type == "grid" && (grid_width < 2 || grid_height < 2))
    throw std::invalid_argument("EnvConfig: grid must be at least 2x2");
  if (type == "random" && (random_states < 2 || random_actions < 2))
    throw std::invalid_argument("EnvConfig: random model needs >= 2 states and actions");
  if (!(discount > 0.0) || !(discount < 1.0))
    throw std::invalid_argument("EnvConfig: discount outside (0,1)");
}

void LearnerConfig::validate() const {
  weights.validate();
  if (!(step_size > 0.0)) throw std::invalid_argument("LearnerConfig: step_size must be > 0");
  if (replay < 1) throw std::invalid_argument("LearnerConfig: replay must be >= 1");
}

void RunConfig::validate() const {
  env.validate();
  learner.validate();
  if (total_frames < 1) throw std::invalid_argument("RunConfig: total_frames must be >= 1");
  if (segment_len < 1) throw std::invalid_argument("RunConfig: segment_len must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("RunConfig: batch_size must be >= 1");
  if (d_push < 1 || d_pull < 1)
    throw std::invalid_argument("RunConfig: publish/pull periods must be >= 1");
  if (n_actors < 1) throw std::invalid_argument("RunConfig: n_actors must be >= 1");
  if (max_episode_steps < 1)
    throw std::invalid_argument("RunConfig: max_episode_steps must be >= 1");
  if (fixed_inv_tau1 < 0.0 || fixed_inv_tau2 < 0.0)
    throw std::invalid_argument("RunConfig: inverse temperatures must be >= 0");
  if (fixed_epsilon < 0.0 || fixed_epsilon > 1.0)
    throw std::invalid_argument("RunConfig: epsilon outside [0,1]");
  if (uses_controller(mode)) bandit.validate();
}

TabularMdp make_env(const EnvConfig& cfg, uint64_t seed) {
  cfg.validate();
  TabularMdp env;
  if (cfg.type == "chain") {
    env = make_chain_env(cfg.chain_length, cfg.chain_slip);
  } else if (cfg.type == "grid") {
    env = make_grid_env(cfg.grid_width, cfg.grid_height);
  } else {
    std::mt19937_64 rng = make_stream(seed, Role::env);
    env = make_random_mdp(cfg.random_states, cfg.random_actions, rng);
  }
  env.discount = cfg.discount;
  env.validate();
  return env;
}

namespace {

// Everything one training run owns. The deterministic driver touches it from
// a single context; the threaded driver guards the commented groups.
struct RunState {
  RunConfig cfg;
  TabularMdp env;
  LossWeights weights;
  PolicyParams params;
  SnapshotStore store;
  std::optional<BanditEnsemble> ensemble;
  std::mt19937_64 controller_rng;

  std::deque<QueuedSegment> queue;  // queue_mutex
  TrainingLog log;                  // log_mutex: log, episode_count, ensemble
  int64_t episode_count = 0;
  int64_t update_count = 0;
  std::atomic<int64_t> frames{0};
};

void begin_episode(RunState& rs, ActorState& a) {
  a.state = reset(rs.env, a.rng);
  a.episode_open = true;
  a.ep_raw = 0.0;
  a.ep_shaped = 0.0;
  a.ep_steps = 0;
  a.seg = SampleSegment{};
}

void flush_segment(RunState& rs, ActorState& a, int bootstrap_state) {
  if (a.seg.states.empty()) return;
  a.seg.bootstrap_state = bootstrap_state;
  rs.queue.push_back({std::move(a.seg), a.lambda});
  a.seg = SampleSegment{};
}

// One environment transition for one actor, plus the bookkeeping that hangs
// off it. Returns true when the step closed an episode.
bool actor_one_step(RunState& rs, ActorState& a, int actor_id) {
  if (!a.episode_open) {
    begin_episode(rs, a);
    rs.log.visited[a.state] = 1;
    a.lambda = uses_controller(rs.cfg.mode)
                   ? ensemble_sample_lambda(*rs.ensemble, rs.controller_rng)
                   : fixed_point_of(rs.cfg);
  }
  if (a.pull_counter % rs.cfg.d_pull == 0) a.snap = rs.store.fetch();
  ++a.pull_counter;

  std::vector<double> mu = mixture_policy(*a.snap, a.lambda, a.state);
  int act = sample_discrete(mu, a.rng);
  StepResult sr = step(rs.env, a.state, act, a.rng);
  double shaped = reward_shape_log(sr.reward);

  a.seg.states.push_back(a.state);
  a.seg.actions.push_back(act);
  a.seg.rewards.push_back(shaped);
  a.seg.raw_rewards.push_back(sr.reward);
  a.seg.dones.push_back(sr.done ? 1 : 0);
  a.seg.behavior_probs.push_back(mu[act]);
  a.ep_raw += sr.reward;
  a.ep_shaped += shaped;
  ++a.ep_steps;
  rs.log.visited[sr.next_state] = 1;
  int64_t frame_now = rs.frames.fetch_add(1) + 1;

  bool truncated = !sr.done && a.ep_steps >= rs.cfg.max_episode_steps;
  bool closed = sr.done || truncated;
  if (closed) {
    flush_segment(rs, a, sr.next_state);
    rs.log.episodes.push_back(make_episode_record(frame_now, rs.episode_count, actor_id, a,
                                                  coverage_of(rs.log.visited)));
    ++rs.episode_count;
    if (uses_controller(rs.cfg.mode))
      ensemble_update_lambda(*rs.ensemble, a.lambda, a.ep_raw);
    a.episode_open = false;
  } else if (a.seg.length() == rs.cfg.segment_len) {
    flush_segment(rs, a, sr.next_state);
  }
  a.state = sr.next_state;
  return closed;
}

void learner_consume(RunState& rs, std::vector<QueuedSegment>& batch) {
  for (int pass = 0; pass < rs.cfg.learner.replay; ++pass) {
    Gradients grads = make_gradients(rs.params);
    LossReport sum;
    for (const QueuedSegment& q : batch) {
      Targets t = compute_targets(rs.params, q.seg, q.lambda, rs.cfg.mode, rs.weights);
      LossReport r =
          compute_losses(rs.params, q.seg, q.lambda, t, rs.weights, rs.cfg.mode, &grads);
      sum.total += r.total;
      sum.pi_loss += r.pi_loss;
      sum.v_loss += r.v_loss;
      sum.q_loss += r.q_loss;
    }
    apply_sgd(rs.params, grads, rs.cfg.learner.step_size);
    ++rs.update_count;
    UpdateRecord rec;
    rec.update = rs.update_count;
    rec.frame = rs.frames.load();
    rec.version = rs.params.version;
    rec.total_loss = sum.total;
    rec.pi_loss = sum.pi_loss;
    rec.v_loss = sum.v_loss;
    rec.q_loss = sum.q_loss;
    rs.log.updates.push_back(rec);
    if (rs.update_count % rs.cfg.d_push == 0) rs.store.publish(rs.params);
  }
}

std::vector<QueuedSegment> pop_batch(RunState& rs, size_t n) {
  std::vector<QueuedSegment> batch;
  batch.reserve(n);
  for (size_t i = 0; i < n && !rs.queue.empty(); ++i) {
    batch.push_back(std::move(rs.queue.front()));
    rs.queue.pop_front();
  }
  return batch;
}

void init_run_state(RunState& rs, const RunConfig& cfg) {
  cfg.validate();
  rs.cfg = cfg;
  rs.env = make_env(cfg.env, cfg.seed);
  rs.weights = cfg.learner.weights;
  rs.weights.discount = rs.env.discount;  // one discount per task
  bool iso = cfg.mode != AlgoMode::gdi_h3;
  rs.params = make_params(rs.env.n_states, rs.env.n_actions, iso);
  rs.store.publish(rs.params);
  rs.controller_rng = make_stream(cfg.seed, Role::controller);
  if (uses_controller(cfg.mode)) {
    EnsembleConfig bc = cfg.bandit;
    if (cfg.mode == AlgoMode::gdi_i1) {
      bc.box_l = {0.0};
      bc.box_r = {50.0};
      bc.unit = {1.0};
    }
    rs.ensemble.emplace(bc, rs.controller_rng);
  }
  rs.log.n_states = rs.env.n_states;
  rs.log.visited.assign(rs.env.n_states, 0);
}

RunResult finish_run(RunState& rs) {
  RunResult out;
  out.frames = rs.frames.load();
  out.episodes = rs.episode_count;
  out.updates = rs.update_count;
  out.state_coverage = coverage_of(rs.log.visited);
  rs.log.frames_done = out.frames;

  double window_start = 0.75 * static_cast<double>(out.frames);
  double sum = 0.0;
  int64_t count = 0;
  for (const EpisodeRecord& e : rs.log.episodes) {
    if (static_cast<double>(e.frame) > window_start) {
      sum += e.return_raw;
      ++count;
    }
  }
  if (count == 0) {
    for (const EpisodeRecord& e : rs.log.episodes) {
      sum += e.return_raw;
      ++count;
    }
  }
  out.final_window_mean_return = count > 0 ? sum / count : 0.0;
  out.final_params = rs.params;
  out.log = std::move(rs.log);
  return out;
}

RunResult run_deterministic(const RunConfig& cfg) {
  RunState rs;
  init_run_state(rs, cfg);
  std::vector<ActorState> actors(cfg.n_actors);
  for (int i = 0; i < cfg.n_actors; ++i)
    actors[i].rng = make_stream(cfg.seed, Role::actor, static_cast<uint32_t>(i));

  while (rs.frames.load() < cfg.total_frames) {
    for (int i = 0; i < cfg.n_actors && rs.frames.load() < cfg.total_frames; ++i)
      actor_one_step(rs, actors[i], i);
    while (rs.queue.size() >= static_cast<size_t>(cfg.batch_size)) {
      std::vector<QueuedSegment> batch = pop_batch(rs, cfg.batch_size);
      learner_consume(rs, batch);
    }
  }
  for (int i = 0; i < cfg.n_actors; ++i)
    if (actors[i].episode_open) flush_segment(rs, actors[i], actors[i].state);
  while (rs.queue.size() >= static_cast<size_t>(cfg.batch_size)) {
    std::vector<QueuedSegment> batch = pop_batch(rs, cfg.batch_size);
    learner_consume(rs, batch);
  }
  if (!rs.queue.empty()) {
    std::vector<QueuedSegment> batch = pop_batch(rs, rs.queue.size());
    learner_consume(rs, batch);
  }
  return finish_run(rs);
}

// Threaded driver: actors feed a bounded queue, one learner thread consumes.
// Not bit-compatible with the deterministic driver; it exists to prove the
// pipeline shuts down cleanly under real concurrency. rs.queue acts as a
// per-step staging area under log_mutex; `shared` is the hand-off queue.
RunResult run_threaded(const RunConfig& cfg) {
  RunState rs;
  init_run_state(rs, cfg);

  std::deque<QueuedSegment> shared;
  std::mutex queue_mutex;
  std::condition_variable cv_push, cv_pop;
  std::mutex log_mutex;
  std::atomic<bool> actors_done{false};
  const size_t queue_cap = static_cast<size_t>(cfg.batch_size) * 4;

  auto publish_segments = [&](std::deque<QueuedSegment>& local) {
    for (QueuedSegment& q : local) {
      std::unique_lock<std::mutex> lk(queue_mutex);
      cv_push.wait(lk, [&] { return shared.size() < queue_cap; });
      shared.push_back(std::move(q));
      cv_pop.notify_one();
    }
    local.clear();
  };

  auto actor_body = [&](int actor_id) {
    ActorState a;
    a.rng = make_stream(cfg.seed, Role::actor, static_cast<uint32_t>(actor_id));
    std::deque<QueuedSegment> local;
    while (rs.frames.load() < cfg.total_frames) {
      {
        std::lock_guard<std::mutex> lk(log_mutex);
        actor_one_step(rs, a, actor_id);
        local.swap(rs.queue);
      }
      publish_segments(local);
    }
    {
      std::lock_guard<std::mutex> lk(log_mutex);
      if (a.episode_open) flush_segment(rs, a, a.state);
      local.swap(rs.queue);
    }
    publish_segments(local);
  };

  std::thread learner([&] {
    while (true) {
      std::vector<QueuedSegment> batch;
      {
        std::unique_lock<std::mutex> lk(queue_mutex);
        cv_pop.wait(lk, [&] {
          return shared.size() >= static_cast<size_t>(cfg.batch_size) || actors_done.load();
        });
        if (shared.empty() && actors_done.load()) break;
        size_t take = std::min(shared.size(), static_cast<size_t>(cfg.batch_size));
        for (size_t i = 0; i < take; ++i) {
          batch.push_back(std::move(shared.front()));
          shared.pop_front();
        }
        cv_push.notify_all();
      }
      if (batch.empty()) continue;
      std::lock_guard<std::mutex> lk(log_mutex);
      learner_consume(rs, batch);
    }
  });

  std::vector<std::thread> actor_threads;
  actor_threads.reserve(cfg.n_actors);
  for (int i = 0; i < cfg.n_actors; ++i) actor_threads.emplace_back(actor_body, i);
  for (std::thread& t : actor_threads) t.join();
  {
    std::lock_guard<std::mutex> lk(queue_mutex);
    actors_done.store(true);
  }
  cv_pop.notify_all();
  learner.join();
  return finish_run(rs);
}

}  // namespace

RunResult run_training(const RunConfig& cfg) {
  return cfg.deterministic ? run_deterministic(cfg) : run_threaded(cfg);
}

void write_episode_csv(const TrainingLog& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "frame,episode,actor,version,inv_tau1,inv_tau2,epsilon,return_raw,return_shaped,coverage\n");
  for (const EpisodeRecord& e : log.episodes) {
    std::fprintf(f, "%lld,%lld,%d,%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                 static_cast<long long>(e.frame), static_cast<long long>(e.episode),
                 e.actor_id, static_cast<long long>(e.param_version), e.inv_tau1, e.inv_tau2,
                 e.epsilon, e.return_raw, e.return_shaped, e.coverage);
  }
  std::fclose(f);
}

void write_update_csv(const TrainingLog& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "update,frame,version,total_loss,pi_loss,v_loss,q_loss\n");
  for (const UpdateRecord& u : log.updates) {
    std::fprintf(f, "%lld,%lld,%lld,%.10g,%.10g,%.10g,%.10g\n",
                 static_cast<long long>(u.update), static_cast<long long>(u.frame),
                 static_cast<long long>(u.version), u.total_loss, u.pi_loss, u.v_loss,
                 u.q_loss);
  }
  std::fclose(f);
}

}  // namespace gdi
