#pragma once

#include <vector>

#include "gdi/policy.hpp"
#include "gdi/traces.hpp"

namespace gdi {

enum class AlgoMode { gdi_i3, gdi_h3, gdi_i1, fixed_lambda };

const char* algo_mode_name(AlgoMode m);
AlgoMode algo_mode_from_name(const std::string& name);

// Signed compressive shaping of the raw payoff stream.
double reward_shape_log(double r);
double reward_shape_pow(double r);

// One head's stop-gradient targets for a slice, under frozen parameters.
struct HeadTargets {
  std::vector<double> shaped;  // the reward stream this head trains on
  VtraceOut vt;
  RetraceOut rt;
};

struct Targets {
  std::vector<HeadTargets> heads;
};

// Builds per-head reward streams and trace targets. Heterogeneous mode trains
// head 0 on the log stream and head 1 on the power stream, each against its
// own unit-temperature softmax; the other modes train one head on the log
// stream against the mixture policy at `lambda`.
Targets compute_targets(const PolicyParams& frozen, const SampleSegment& seg,
                        const IndexPoint& lambda, AlgoMode mode, const LossWeights& w);

struct Gradients {
  std::vector<double> a1, v1;
  std::vector<double> a2, v2;
};

Gradients make_gradients(const PolicyParams& p);

struct LossReport {
  double total = 0.0;
  double pi_loss = 0.0;  // scaled policy-gradient term
  double v_loss = 0.0;   // scaled value regression
  double q_loss = 0.0;   // scaled action-value regression
};

// Evaluates the scaled loss on one slice against precomputed targets. When
// `out` is non-null the analytic gradient is accumulated into it (caller
// zeroes). Isomorphic parameter layouts accumulate everything into a1/v1.
LossReport compute_losses(const PolicyParams& params, const SampleSegment& seg,
                          const IndexPoint& lambda, const Targets& targets,
                          const LossWeights& w, AlgoMode mode, Gradients* out);

// Plain gradient step; bumps the parameter version. Throws on non-finite
// gradient entries.
void apply_sgd(PolicyParams& params, const Gradients& g, double step);

}  // namespace gdi
