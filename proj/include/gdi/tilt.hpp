#pragma once

#include <vector>

#include "gdi/mdp.hpp"

namespace gdi {

// Exponentially reweights a discrete distribution toward higher scores:
// out_i proportional to mass_i * exp(eta * g_i).
std::vector<double> exp_tilt(const std::vector<double>& mass, const std::vector<double>& g,
                             double eta);

using CouplingMatrix = std::vector<std::vector<double>>;

// Monotone transport plan between a distribution and its tilt, built by the
// inductive tail-splitting construction. Rows sum to the base measure,
// columns to the tilted one, and no mass lands on a strictly lower score.
CouplingMatrix uttc_coupling(const std::vector<double>& mass, const std::vector<double>& g,
                             double eta);

struct CouplingCheck {
  double max_row_residual = 0.0;
  double max_col_residual = 0.0;
  double downward_mass = 0.0;  // mass placed where the score strictly drops
  double min_entry = 0.0;
};

CouplingCheck verify_coupling(const std::vector<double>& mass, const std::vector<double>& g,
                              double eta, const CouplingMatrix& plan);

// E[f] under the tilt minus E[f] under the base. Requires f and g co-monotone
// (checked pairwise; support capped at 200 points). Nonnegative for eta >= 0.
double tilt_inequality_gap(const std::vector<double>& mass, const std::vector<double>& g,
                           const std::vector<double>& f, double eta);

// Expectation of f after tilting the distribution by eta * scores.
double superior_target(const std::vector<double>& mass, const std::vector<double>& scores,
                       const std::vector<double>& f, double eta);

// Residual of the exact decomposition of a policy-value gap into the
// visitation-weighted advantage form, from the model's initial distribution.
// Policies are row-major [n_states x n_actions].
double perf_diff_residual(const TabularMdp& mdp, const std::vector<double>& pi_new,
                          const std::vector<double>& pi_old);

}  // namespace gdi
