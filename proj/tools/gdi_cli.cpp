#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdi/config_io.hpp"
#include "gdi/metrics.hpp"
#include "gdi/orchestrator.hpp"
#include "gdi/rng.hpp"
#include "gdi/tilt.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t resolve_seed(const std::optional<uint64_t>& cli_seed, uint64_t cfg_seed) {
  if (cli_seed) return *cli_seed;
  if (const char* env = std::getenv("GDI_SEED")) {
    try {
      size_t pos = 0;
      uint64_t v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("GDI_SEED is not a valid integer: ") + env);
    }
  }
  return cfg_seed;
}

void write_run_outputs(const gdi::RunConfig& cfg, const gdi::RunResult& res,
                       const fs::path& dir) {
  fs::create_directories(dir);
  gdi::write_episode_csv(res.log, (dir / "train_log.csv").string());
  gdi::write_update_csv(res.log, (dir / "updates.csv").string());
  gdi::write_text_file((dir / "summary.json").string(), gdi::run_summary_json(cfg, res));
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::optional<uint64_t>& seed) {
  gdi::RunConfig cfg = gdi::load_run_config(config_path);
  cfg.seed = resolve_seed(seed, cfg.seed);
  gdi::RunResult res = gdi::run_training(cfg);
  write_run_outputs(cfg, res, out_dir);
  std::cout << "mode=" << gdi::algo_mode_name(cfg.mode) << " seed=" << cfg.seed
            << " frames=" << res.frames << " episodes=" << res.episodes
            << " mean_return=" << res.final_window_mean_return
            << " coverage=" << res.state_coverage << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir,
               const std::optional<uint64_t>& seed, int runs) {
  if (runs < 1) throw std::invalid_argument("ablate: --runs must be >= 1");
  gdi::RunConfig base = gdi::load_run_config(config_path);
  uint64_t seed0 = resolve_seed(seed, base.seed);
  const gdi::AlgoMode modes[] = {gdi::AlgoMode::gdi_i3, gdi::AlgoMode::gdi_i1,
                                 gdi::AlgoMode::fixed_lambda};

  fs::create_directories(out_dir);
  std::string csv = "mode,seed,frames,episodes,updates,mean_return,coverage\n";
  json per_mode = json::object();
  double i3_mean = 0.0;
  for (gdi::AlgoMode mode : modes) {
    double sum_return = 0.0, sum_cov = 0.0;
    for (int k = 0; k < runs; ++k) {
      gdi::RunConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed0 + static_cast<uint64_t>(k);
      gdi::RunResult res = gdi::run_training(cfg);
      fs::path sub = fs::path(out_dir) / gdi::algo_mode_name(mode) /
                     ("seed_" + std::to_string(cfg.seed));
      write_run_outputs(cfg, res, sub);
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%llu,%lld,%lld,%lld,%.10g,%.10g\n",
                    gdi::algo_mode_name(mode), static_cast<unsigned long long>(cfg.seed),
                    static_cast<long long>(res.frames), static_cast<long long>(res.episodes),
                    static_cast<long long>(res.updates), res.final_window_mean_return,
                    res.state_coverage);
      csv += line;
      sum_return += res.final_window_mean_return;
      sum_cov += res.state_coverage;
    }
    json m;
    m["mean_return"] = sum_return / runs;
    m["mean_coverage"] = sum_cov / runs;
    per_mode[gdi::algo_mode_name(mode)] = m;
    if (mode == gdi::AlgoMode::gdi_i3) i3_mean = sum_return / runs;
  }
  for (auto& [name, m] : per_mode.items())
    m["relative_return"] = i3_mean != 0.0 ? m["mean_return"].get<double>() / i3_mean : 0.0;

  gdi::write_text_file((fs::path(out_dir) / "ablation.csv").string(), csv);
  json summary;
  summary["base_seed"] = seed0;
  summary["runs_per_mode"] = runs;
  summary["modes"] = per_mode;
  gdi::write_text_file((fs::path(out_dir) / "ablation_summary.json").string(),
                       summary.dump(2) + "\n");
  std::cout << csv;
  return 0;
}

std::vector<double> random_measure(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> m(n);
  double z = 0.0;
  for (double& v : m) {
    v = ex(rng) + 1e-12;
    z += v;
  }
  for (double& v : m) v /= z;
  return m;
}

int cmd_verify_theory(const std::string& out_dir, uint64_t seed) {
  std::mt19937_64 rng = gdi::make_stream(seed, gdi::Role::harness);
  std::uniform_int_distribution<int> size_pick(1, 12);
  std::uniform_real_distribution<double> score_draw(-3.0, 3.0);
  std::uniform_real_distribution<double> eta_draw(0.0, 2.0);
  std::uniform_real_distribution<double> coef_draw(0.0, 2.0);

  json report;
  bool ok = true;

  {
    int n_checks = 200, bad = 0;
    double worst_marginal = 0.0, worst_downward = 0.0, worst_negative = 0.0;
    for (int k = 0; k < n_checks; ++k) {
      int n = size_pick(rng);
      std::vector<double> mass = random_measure(rng, n);
      std::vector<double> g(n);
      for (double& v : g) v = score_draw(rng);
      double eta = eta_draw(rng);
      gdi::CouplingMatrix plan = gdi::uttc_coupling(mass, g, eta);
      gdi::CouplingCheck chk = gdi::verify_coupling(mass, g, eta, plan);
      double marg = std::max(chk.max_row_residual, chk.max_col_residual);
      worst_marginal = std::max(worst_marginal, marg);
      worst_downward = std::max(worst_downward, chk.downward_mass);
      worst_negative = std::max(worst_negative, -chk.min_entry);
      if (marg > 1e-9 || chk.downward_mass > 1e-12 || chk.min_entry < -1e-12) ++bad;
    }
    report["coupling"] = {{"checks", n_checks},
                          {"violations", bad},
                          {"worst_marginal_residual", worst_marginal},
                          {"worst_downward_mass", worst_downward},
                          {"worst_negative_entry", worst_negative}};
    ok = ok && bad == 0;
  }

  {
    int n_checks = 500, bad = 0;
    double worst = 0.0;
    for (int k = 0; k < n_checks; ++k) {
      int n = size_pick(rng);
      std::vector<double> mass = random_measure(rng, n);
      std::vector<double> g(n);
      for (double& v : g) v = score_draw(rng);
      double e1 = eta_draw(rng), e2 = eta_draw(rng);
      std::vector<double> two_step = gdi::exp_tilt(gdi::exp_tilt(mass, g, e1), g, e2);
      std::vector<double> one_step = gdi::exp_tilt(mass, g, e1 + e2);
      double diff = 0.0;
      for (int i = 0; i < n; ++i) diff = std::max(diff, std::fabs(two_step[i] - one_step[i]));
      worst = std::max(worst, diff);
      if (diff > 1e-9) ++bad;
    }
    report["tilt_semigroup"] = {{"checks", n_checks}, {"violations", bad}, {"worst_gap", worst}};
    ok = ok && bad == 0;
  }

  {
    int n_checks = 500, bad = 0;
    double worst = 0.0;
    for (int k = 0; k < n_checks; ++k) {
      int n = size_pick(rng);
      std::vector<double> mass = random_measure(rng, n);
      std::vector<double> g(n), f(n);
      double a = coef_draw(rng), b = coef_draw(rng);
      for (int i = 0; i < n; ++i) {
        g[i] = score_draw(rng);
        f[i] = a * g[i] + b * g[i] * g[i] * g[i];
      }
      double gap = gdi::tilt_inequality_gap(mass, g, f, eta_draw(rng));
      worst = std::min(worst, gap);
      if (gap < -1e-12) ++bad;
    }
    report["monotone_improvement"] = {
        {"checks", n_checks}, {"violations", bad}, {"worst_gap", worst}};
    ok = ok && bad == 0;
  }

  {
    int n_checks = 100, bad = 0;
    double worst = 0.0;
    std::normal_distribution<double> logit(0.0, 1.0);
    for (int k = 0; k < n_checks; ++k) {
      gdi::TabularMdp mdp = gdi::make_random_mdp(5, 3, rng);
      auto random_policy = [&] {
        std::vector<double> pol(15);
        for (int s = 0; s < 5; ++s) {
          std::vector<double> logits(3);
          for (double& v : logits) v = logit(rng);
          std::vector<double> p = gdi::tempered_softmax(logits, 1.0);
          for (int a2 = 0; a2 < 3; ++a2) pol[s * 3 + a2] = p[a2];
        }
        return pol;
      };
      double resid = gdi::perf_diff_residual(mdp, random_policy(), random_policy());
      worst = std::max(worst, resid);
      if (resid > 1e-8) ++bad;
    }
    report["value_gap_decomposition"] = {
        {"checks", n_checks}, {"violations", bad}, {"worst_residual", worst}};
    ok = ok && bad == 0;
  }

  report["seed"] = seed;
  report["all_passed"] = ok;
  fs::create_directories(out_dir);
  gdi::write_text_file((fs::path(out_dir) / "theory_report.json").string(),
                       report.dump(2) + "\n");
  for (auto& [name, body] : report.items()) {
    if (!body.is_object() || !body.contains("violations")) continue;
    std::cout << name << ": "
              << (body["violations"].get<int>() == 0 ? "PASS" : "FAIL") << " ("
              << body["checks"].get<int>() << " checks)\n";
  }
  if (!ok) {
    std::cerr << "theory verification failed\n";
    return 2;
  }
  return 0;
}

int cmd_metrics(const std::string& table_path, const std::string& out_dir, double frames) {
  std::vector<gdi::ScoreRow> rows = gdi::load_score_table(table_path);
  std::string csv = "game,score,hns,hwrns,saber\n";
  std::vector<std::optional<double>> hns_col, hwrns_col, saber_col;
  char line[512];
  for (const gdi::ScoreRow& r : rows) {
    if (r.score) {
      double h = gdi::hns(*r.score, r.random_score, r.human_avg);
      double w = gdi::hwrns(*r.score, r.random_score, r.hwr);
      double s = gdi::saber(*r.score, r.random_score, r.hwr);
      hns_col.emplace_back(h);
      hwrns_col.emplace_back(w);
      saber_col.emplace_back(s);
      std::snprintf(line, sizeof(line), "%s,%.10g,%.10g,%.10g,%.10g\n", r.game.c_str(),
                    *r.score, h, w, s);
    } else {
      hns_col.emplace_back(std::nullopt);
      hwrns_col.emplace_back(std::nullopt);
      saber_col.emplace_back(std::nullopt);
      std::snprintf(line, sizeof(line), "%s,NA,NA,NA,NA\n", r.game.c_str());
    }
    csv += line;
  }
  gdi::Aggregate agg_hns = gdi::aggregate(hns_col);
  gdi::Aggregate agg_hwrns = gdi::aggregate(hwrns_col);
  gdi::Aggregate agg_saber = gdi::aggregate(saber_col);

  json summary;
  summary["games"] = rows.size();
  summary["mean_hns"] = agg_hns.mean;
  summary["median_hns"] = agg_hns.median;
  summary["mean_hwrns"] = agg_hwrns.mean;
  summary["median_hwrns"] = agg_hwrns.median;
  summary["mean_saber"] = agg_saber.mean;
  summary["median_saber"] = agg_saber.median;
  summary["hwrb"] = gdi::hwrb(hwrns_col);
  summary["frames"] = frames;
  summary["playtime_days"] = gdi::playtime_days(frames);
  summary["learning_efficiency"] = {
      {"mean_hns", gdi::learning_efficiency(agg_hns.mean, frames)},
      {"median_hns", gdi::learning_efficiency(agg_hns.median, frames)},
      {"mean_hwrns", gdi::learning_efficiency(agg_hwrns.mean, frames)},
      {"median_hwrns", gdi::learning_efficiency(agg_hwrns.median, frames)}};

  fs::create_directories(out_dir);
  gdi::write_text_file((fs::path(out_dir) / "metrics.csv").string(), csv);
  gdi::write_text_file((fs::path(out_dir) / "metrics_summary.json").string(),
                       summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  if (run_dirs.empty()) throw std::invalid_argument("report: no run directories given");
  json merged = json::array();
  for (const std::string& dir : run_dirs) {
    fs::path p = fs::path(dir) / "summary.json";
    json j = json::parse(gdi::read_text_file(p.string()));
    j["run_dir"] = dir;
    merged.push_back(j);
  }
  json out;
  out["runs"] = merged;
  double best = -std::numeric_limits<double>::infinity();
  std::string best_dir;
  for (const json& j : merged) {
    double v = j.value("final_window_mean_return", 0.0);
    if (v > best) {
      best = v;
      best_dir = j.value("run_dir", "");
    }
  }
  out["best_run"] = best_dir;
  out["best_mean_return"] = best;
  std::string text = out.dump(2) + "\n";
  if (!out_path.empty()) gdi::write_text_file(out_path, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular actor-learner trainer with adaptive behavior-policy selection"};
  app.require_subcommand(1);

  std::optional<uint64_t> seed_opt;
  std::string config_path, out_dir = "out";

  CLI::App* train = app.add_subcommand("train", "Run one training configuration");
  train->add_option("--config", config_path, "JSON run configuration")->required();
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--seed", seed_opt, "Override the run seed (beats GDI_SEED and config)");

  int runs = 3;
  CLI::App* ablate = app.add_subcommand("ablate", "Compare controller variants on one task");
  ablate->add_option("--config", config_path, "JSON run configuration")->required();
  ablate->add_option("--out", out_dir, "Output directory");
  ablate->add_option("--seed", seed_opt, "Base seed for the sweep");
  ablate->add_option("--runs", runs, "Seeds per variant");

  uint64_t theory_seed = 90210;
  CLI::App* verify = app.add_subcommand("verify-theory", "Run randomized checks of the transport and decomposition identities");
  verify->add_option("--out", out_dir, "Output directory");
  verify->add_option("--seed", theory_seed, "Seed for the randomized checks");

  std::string table_path;
  double frames = 2e8;
  CLI::App* metrics = app.add_subcommand("metrics", "Normalize a score table");
  metrics->add_option("--table", table_path, "Score table CSV")->required();
  metrics->add_option("--out", out_dir, "Output directory");
  metrics->add_option("--frames", frames, "Frame budget for the efficiency columns");

  std::vector<std::string> run_dirs;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Merge run summaries");
  report->add_option("dirs", run_dirs, "Run directories containing summary.json");
  report->add_option("--out", report_out, "Optional merged report path");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(config_path, out_dir, seed_opt);
    if (ablate->parsed()) return cmd_ablate(config_path, out_dir, seed_opt, runs);
    if (verify->parsed()) return cmd_verify_theory(out_dir, theory_seed);
    if (metrics->parsed()) return cmd_metrics(table_path, out_dir, frames);
    if (report->parsed()) return cmd_report(run_dirs, report_out);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
