#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stacklab/core_model.hpp"
#include "stacklab/gaussian.hpp"

namespace stacklab {

// ---------------------------------------------------------------------------
// The all-followers game: leader-optimal coefficients, incentive gain, limits,
// and the incentive-energy divergence analysis.
// ---------------------------------------------------------------------------

struct PnSolution {
    double alpha0 = 0.0;  // leader coefficient on y0
    double alpha = 0.0;   // leader coefficient on the mean follower observation
    double beta = 0.0;    // symmetric follower coefficient on yi
    std::optional<double> gain;  // incentive gain Q_N
    double energy = 0.0;         // gain^2 (affine incentive => constant derivative)
    int n = 0;
};

struct PnLimits {
    double alpha0_inf = 0.0;
    double beta_inf = 0.0;
    double alpha_inf = 0.0;
};

// Closed-form leader-optimal (team) coefficients. The leader's stationarity
// conditions on y0..yN and each follower-channel condition on yi hold exactly.
PnSolution pn_leader_optimal(const PnGameSpec& spec);

// Incentive gain from the follower stationarity under the announced policy
//   u0 = alpha0 y0 + alpha ybar + Q (ubar - beta ybar).
// Throws degenerate_gain_error when the stationarity denominator vanishes.
double pn_gain(const PnGameSpec& spec, const PnSolution& sol);

// Convenience: leader-optimal plus gain and energy.
PnSolution pn_solve(const PnGameSpec& spec);

// Coefficient limits as n grows without bound.
PnLimits pn_limits(const PnGameSpec& spec);

// |Q_N| / N converges to this constant for the incentive-gain sequence.
double pn_asymptotic_gain_ratio(const PnGameSpec& spec);

// Full profile (leader incentive, symmetric followers) for a solved game.
Profile pn_profile(const PnGameSpec& spec, const PnSolution& sol);

// Leader-optimal coefficients via the generic stationarity assembler;
// cross-checks the closed forms.
PnSolution pn_leader_optimal_assembled(const PnGameSpec& spec, double* condition_out = nullptr);
double pn_gain_assembled(const PnGameSpec& spec, const PnSolution& sol);

// ---------------------------------------------------------------------------
// Divergence analysis: energy per grid point, log-log fit of |Q_N| against N,
// and the finite-energy verdict.
// ---------------------------------------------------------------------------

struct GainGridPoint {
    int n = 0;
    double gain = 0.0;
    double energy = 0.0;
};

struct DivergenceReport {
    std::vector<GainGridPoint> points;
    double slope = 0.0;       // least-squares slope of log|gain| vs log n
    double intercept = 0.0;
    bool divergent = false;   // slope >= 0.9
    double asymptotic_ratio = 0.0;  // |gain|/n at the largest grid point
};

// Requires a strictly increasing grid of at least 3 points.
DivergenceReport pn_divergence_report(const PnGameSpec& spec, const std::vector<int>& n_grid);

// Same fit machinery applied to an externally supplied gain sequence
// (used to contrast the convergent major-follower gains).
DivergenceReport divergence_fit(const std::vector<GainGridPoint>& points);

// Sweep rows: `n,alpha0,alpha,beta,gain,energy`.
std::string pn_sweep_csv(const PnGameSpec& spec, const std::vector<int>& n_grid);

// Per-player residual norms at the solved profile (for EquilibriumSolution).
EquilibriumSolution pn_solution_view(const PnGameSpec& spec, const PnSolution& sol);

} // namespace stacklab
