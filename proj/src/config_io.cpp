#include "gdi/config_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gdi {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string("config: unknown key '") + it.key() + "' in " +
                                  where);
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
  }
}

void parse_env(const json& j, EnvConfig& env) {
  if (!j.is_object()) throw std::invalid_argument("config: 'env' must be an object");
  check_keys(j, "env",
             {"type", "chain_length", "chain_slip", "grid_width", "grid_height",
              "random_states", "random_actions", "discount"});
  get_to(j, "type", env.type);
  get_to(j, "chain_length", env.chain_length);
  get_to(j, "chain_slip", env.chain_slip);
  get_to(j, "grid_width", env.grid_width);
  get_to(j, "grid_height", env.grid_height);
  get_to(j, "random_states", env.random_states);
  get_to(j, "random_actions", env.random_actions);
  get_to(j, "discount", env.discount);
}

void parse_learner(const json& j, LearnerConfig& lc) {
  if (!j.is_object()) throw std::invalid_argument("config: 'learner' must be an object");
  check_keys(j, "learner",
             {"step_size", "replay", "v_scale", "q_scale", "pi_scale", "is_clip_rho",
              "is_clip_c"});
  get_to(j, "step_size", lc.step_size);
  get_to(j, "replay", lc.replay);
  get_to(j, "v_scale", lc.weights.v_scale);
  get_to(j, "q_scale", lc.weights.q_scale);
  get_to(j, "pi_scale", lc.weights.pi_scale);
  get_to(j, "is_clip_rho", lc.weights.is_clip_rho);
  get_to(j, "is_clip_c", lc.weights.is_clip_c);
}

void parse_bandit(const json& j, EnsembleConfig& bc) {
  if (!j.is_object()) throw std::invalid_argument("config: 'bandit' must be an object");
  check_keys(j, "bandit",
             {"members", "d", "ucb_c", "lr_choices", "ta_choices", "acc_choices", "to_lo",
              "to_hi", "mix_modes"});
  get_to(j, "members", bc.members);
  get_to(j, "d", bc.d);
  get_to(j, "ucb_c", bc.ucb_c);
  get_to(j, "lr_choices", bc.lr_choices);
  get_to(j, "ta_choices", bc.ta_choices);
  get_to(j, "acc_choices", bc.acc_choices);
  get_to(j, "to_lo", bc.to_lo);
  get_to(j, "to_hi", bc.to_hi);
  get_to(j, "mix_modes", bc.mix_modes);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  check_keys(j, "top level",
             {"env", "mode", "total_frames", "segment_len", "batch_size", "d_push", "d_pull",
              "n_actors", "seed", "max_episode_steps", "learner", "bandit", "fixed_lambda",
              "deterministic"});

  RunConfig cfg;
  if (j.contains("env")) parse_env(j.at("env"), cfg.env);
  if (j.contains("mode")) {
    std::string name;
    get_to(j, "mode", name);
    cfg.mode = algo_mode_from_name(name);
  }
  get_to(j, "total_frames", cfg.total_frames);
  get_to(j, "segment_len", cfg.segment_len);
  get_to(j, "batch_size", cfg.batch_size);
  get_to(j, "d_push", cfg.d_push);
  get_to(j, "d_pull", cfg.d_pull);
  get_to(j, "n_actors", cfg.n_actors);
  get_to(j, "seed", cfg.seed);
  get_to(j, "max_episode_steps", cfg.max_episode_steps);
  if (j.contains("learner")) parse_learner(j.at("learner"), cfg.learner);
  if (j.contains("bandit")) parse_bandit(j.at("bandit"), cfg.bandit);
  if (j.contains("fixed_lambda")) {
    std::vector<double> fl;
    get_to(j, "fixed_lambda", fl);
    if (fl.size() != 3)
      throw std::invalid_argument("config: fixed_lambda must be [1/tau1, 1/tau2, epsilon]");
    cfg.fixed_inv_tau1 = fl[0];
    cfg.fixed_inv_tau2 = fl[1];
    cfg.fixed_epsilon = fl[2];
  }
  get_to(j, "deterministic", cfg.deterministic);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

std::string run_summary_json(const RunConfig& cfg, const RunResult& res) {
  json j;
  j["mode"] = algo_mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["env_type"] = cfg.env.type;
  j["discount"] = cfg.env.discount;
  j["total_frames"] = cfg.total_frames;
  j["frames"] = res.frames;
  j["episodes"] = res.episodes;
  j["updates"] = res.updates;
  j["final_window_mean_return"] = res.final_window_mean_return;
  j["state_coverage"] = res.state_coverage;
  j["param_version"] = res.final_params.version;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gdi
