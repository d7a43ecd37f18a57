#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stacklab/core_model.hpp"
#include "stacklab/gaussian.hpp"

namespace stacklab {

// ---------------------------------------------------------------------------
// The major/minor game: minor Nash response, leader-major-optimal system,
// incentive gain, mean-field limits, leader-optimal (hat) system, the
// performance loss, and the shared-observation zero-loss example.
// ---------------------------------------------------------------------------

struct MinorResponse {
    double alpha = 0.0;   // coefficient on yi
    double alphaM = 0.0;  // coefficient on yM
};

struct MajSolution {
    double theta = 0.0;   // leader on y0
    double thetaM = 0.0;  // leader on yM
    double beta = 0.0;    // major on yM
    double alpha = 0.0;   // minor on yi
    double alphaM = 0.0;  // minor on yM
    std::optional<double> gain;  // incentive gain Q_N
    double L = 0.0;       // major tracking coefficient E[u0+uM+ubar+omega0 | yM]
    double rprime = 0.0;  // r n/(n+1)
    double D = 0.0;       // 1 - q/(rprime + 2q), the minors' reaction discount
    int n = 0;
};

struct MajLimits {
    double theta = 0.0;
    double thetaM = 0.0;
    double beta = 0.0;
    double alpha = 0.0;
    double alphaM = 0.0;
    double gain = 0.0;
    double L = 0.0;
};

struct MajHatSolution {
    double theta_hat = 0.0;
    double thetaM_hat = 0.0;
    double beta_hat = 0.0;
    double alpha_hat = 0.0;
    double alphaM_hat = 0.0;
    int n = 0;
};

struct MajLoss {
    double loss = 0.0;
    double j_leader_major = 0.0;
    double j_leader_opt = 0.0;
};

struct ZeroLossSolution {
    double theta = 0.0;
    double thetaM = 0.0;
    double beta = 0.0;
    std::optional<double> gain;  // absent when the gain channel degenerates
    int n = 0;
};

// Minor followers' symmetric Nash response to a major policy uM = beta yM.
MinorResponse maj_minor_response(const MajGameSpec& spec, double beta);

// Slope of alphaM in beta; the leader internalizes this reaction.
double maj_response_slope(const MajGameSpec& spec);

// Leader-major-optimal coefficients: leader and major stationarity with the
// minors' response substituted, solved as one linear system.
MajSolution maj_leader_major_optimal(const MajGameSpec& spec);

// Incentive gain from the major's stationarity under
//   u0 = theta y0 + thetaM yM + Q (uM - beta yM).
// Throws degenerate_gain_error when |L| < 1e-12.
struct MajGain {
    double gain = 0.0;
    double L = 0.0;
};
MajGain maj_gain(const MajGameSpec& spec, const MajSolution& sol);

MajSolution maj_solve(const MajGameSpec& spec);

// Mean-field limit of the leader-major-optimal system and its gain.
MajLimits maj_limits(const MajGameSpec& spec);

// Leader-optimal (hat) coefficients: the full team stationarity system.
// Requires q0 > 0; throws unsupported_parameterization_error otherwise.
MajHatSolution maj_leader_optimal(const MajGameSpec& spec);

// Exact leader-cost gap between the leader-major-optimal and leader-optimal
// profiles; nonnegative by construction.
MajLoss maj_loss(const MajGameSpec& spec);

// Shared-observation zero-loss example. Requires spec.shared_obs and q0 > 0.
ZeroLossSolution zero_loss_solve(const MajGameSpec& spec);

// Profiles for solved games.
Profile maj_profile(const MajGameSpec& spec, const MajSolution& sol);
Profile maj_hat_profile(const MajGameSpec& spec, const MajHatSolution& sol);
Profile zero_loss_profile(const MajGameSpec& spec, const ZeroLossSolution& sol);

// Assembler cross-checks.
MajSolution maj_leader_major_optimal_assembled(const MajGameSpec& spec, double* condition_out = nullptr);
MajHatSolution maj_leader_optimal_assembled(const MajGameSpec& spec, double* condition_out = nullptr);
MinorResponse maj_minor_response_assembled(const MajGameSpec& spec, double beta);
double maj_gain_assembled(const MajGameSpec& spec, const MajSolution& sol);

// Loss-curve rows: `n,j_leader_opt,j_leader_major,loss`.
std::string maj_loss_csv(const MajGameSpec& spec, const std::vector<int>& n_grid);

// Gain sweep rows: `n,theta,thetaM,beta,alpha,alphaM,gain,L`.
std::string maj_sweep_csv(const MajGameSpec& spec, const std::vector<int>& n_grid);

EquilibriumSolution maj_solution_view(const MajGameSpec& spec, const MajSolution& sol);
EquilibriumSolution maj_hat_solution_view(const MajGameSpec& spec, const MajHatSolution& sol);

// Minimize expected cost over selected profile coefficients (exact quadratic
// probing); independent oracle for the team solvers and the zero-loss check.
struct TeamMinimum {
    std::vector<double> x;
    double value = 0.0;
};
TeamMinimum minimize_expected_cost(const QuadraticCostSpec& cost, const Profile& base,
                                   const std::vector<std::function<void(Profile&, double)>>& slots,
                                   const GameContext& ctx);

} // namespace stacklab
