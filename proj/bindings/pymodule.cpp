#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "gdi/config_io.hpp"
#include "gdi/learner.hpp"
#include "gdi/metrics.hpp"
#include "gdi/orchestrator.hpp"
#include "gdi/policy.hpp"
#include "gdi/tilt.hpp"
#include "gdi/traces.hpp"

namespace py = pybind11;

namespace {

std::vector<uint8_t> to_flags(const std::vector<int>& dones) {
  std::vector<uint8_t> out(dones.size());
  for (size_t i = 0; i < dones.size(); ++i) {
    if (dones[i] != 0 && dones[i] != 1) throw std::invalid_argument("done flags must be 0/1");
    out[i] = static_cast<uint8_t>(dones[i]);
  }
  return out;
}

gdi::LossWeights weights_of(double rho_bar, double c_bar, double discount) {
  gdi::LossWeights w;
  w.is_clip_rho = rho_bar;
  w.is_clip_c = c_bar;
  w.discount = discount;
  return w;
}

}  // namespace

PYBIND11_MODULE(gdi_core, m) {
  m.doc() = "Tabular actor-learner core: policies, trace targets, transport checks, metrics";

  m.def("tempered_softmax", &gdi::tempered_softmax, py::arg("logits"), py::arg("tau"),
        "Softmax of logits/tau; tau=inf gives the uniform distribution");

  m.def(
      "index_to_search",
      [](double tau1, double tau2, double epsilon) {
        gdi::SearchCoordinates c = gdi::index_to_search({tau1, tau2, epsilon});
        return py::make_tuple(c.x1, c.x2, c.x3);
      },
      py::arg("tau1"), py::arg("tau2"), py::arg("epsilon"));
  m.def(
      "search_to_index",
      [](double x1, double x2, double x3) {
        gdi::IndexPoint p = gdi::search_to_index({x1, x2, x3});
        return py::make_tuple(p.tau1, p.tau2, p.epsilon);
      },
      py::arg("x1"), py::arg("x2"), py::arg("x3"));

  m.def("reward_shape_log", &gdi::reward_shape_log, py::arg("r"));
  m.def("reward_shape_pow", &gdi::reward_shape_pow, py::arg("r"));

  m.def("vtrace_target_policy", &gdi::vtrace_target_policy, py::arg("pi"), py::arg("mu"),
        py::arg("rho_bar"));

  m.def(
      "vtrace",
      [](const std::vector<double>& pi_taken, const std::vector<double>& mu_taken,
         const std::vector<double>& rewards, const std::vector<int>& dones,
         const std::vector<double>& step_values, double bootstrap_value, double rho_bar,
         double c_bar, double discount) {
        gdi::VtraceOut out =
            gdi::vtrace_from_arrays(pi_taken, mu_taken, rewards, to_flags(dones), step_values,
                                    bootstrap_value, weights_of(rho_bar, c_bar, discount));
        return py::make_tuple(out.v_targets, out.advantages);
      },
      py::arg("pi_taken"), py::arg("mu_taken"), py::arg("rewards"), py::arg("dones"),
      py::arg("step_values"), py::arg("bootstrap_value"), py::arg("rho_bar") = 1.05,
      py::arg("c_bar") = 1.05, py::arg("discount") = 0.997,
      "Clipped importance-weighted value targets and advantages; returns (v_targets, advantages)");

  m.def(
      "retrace",
      [](const std::vector<double>& pi_taken, const std::vector<double>& mu_taken,
         const std::vector<double>& rewards, const std::vector<int>& dones,
         const std::vector<double>& q_taken, double c_bar, double discount) {
        gdi::RetraceOut out = gdi::retrace_from_arrays(pi_taken, mu_taken, rewards,
                                                       to_flags(dones), q_taken,
                                                       weights_of(c_bar + 0.0, c_bar, discount));
        return py::make_tuple(out.q_targets, out.n_valid);
      },
      py::arg("pi_taken"), py::arg("mu_taken"), py::arg("rewards"), py::arg("dones"),
      py::arg("q_taken"), py::arg("c_bar") = 1.05, py::arg("discount") = 0.997,
      "Safe multi-step action-value targets; returns (q_targets, n_valid)");

  m.def("hns", &gdi::hns, py::arg("raw"), py::arg("random_score"), py::arg("human_avg"));
  m.def("hwrns", &gdi::hwrns, py::arg("raw"), py::arg("random_score"), py::arg("hwr"));
  m.def("saber", &gdi::saber, py::arg("raw"), py::arg("random_score"), py::arg("hwr"));
  m.def(
      "aggregate",
      [](const std::vector<std::optional<double>>& values) {
        gdi::Aggregate a = gdi::aggregate(values);
        return py::make_tuple(a.mean, a.median);
      },
      py::arg("values"), "Mean and median over the non-None entries");
  m.def("hwrb", &gdi::hwrb, py::arg("hwrns_values"));
  m.def("playtime_days", &gdi::playtime_days, py::arg("frames"));

  m.def("exp_tilt", &gdi::exp_tilt, py::arg("mass"), py::arg("g"), py::arg("eta"));
  m.def("uttc_coupling", &gdi::uttc_coupling, py::arg("mass"), py::arg("g"), py::arg("eta"));
  m.def(
      "verify_coupling",
      [](const std::vector<double>& mass, const std::vector<double>& g, double eta,
         const gdi::CouplingMatrix& plan) {
        gdi::CouplingCheck c = gdi::verify_coupling(mass, g, eta, plan);
        py::dict d;
        d["max_row_residual"] = c.max_row_residual;
        d["max_col_residual"] = c.max_col_residual;
        d["downward_mass"] = c.downward_mass;
        d["min_entry"] = c.min_entry;
        return d;
      },
      py::arg("mass"), py::arg("g"), py::arg("eta"), py::arg("plan"));
  m.def("superior_target", &gdi::superior_target, py::arg("mass"), py::arg("scores"),
        py::arg("f"), py::arg("eta"));

  m.def(
      "run_train",
      [](const std::string& config_json, std::optional<uint64_t> seed) {
        gdi::RunConfig cfg = gdi::parse_run_config(config_json);
        if (seed) cfg.seed = *seed;
        gdi::RunResult res = gdi::run_training(cfg);
        py::dict d;
        d["mode"] = gdi::algo_mode_name(cfg.mode);
        d["seed"] = cfg.seed;
        d["frames"] = res.frames;
        d["episodes"] = res.episodes;
        d["updates"] = res.updates;
        d["final_window_mean_return"] = res.final_window_mean_return;
        d["state_coverage"] = res.state_coverage;
        d["param_version"] = res.final_params.version;
        return d;
      },
      py::arg("config_json"), py::arg("seed") = std::nullopt,
      "Run one training configuration from a JSON string; returns the summary");
}
