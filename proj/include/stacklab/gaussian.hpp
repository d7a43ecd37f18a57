#pragma once

#include <array>
#include <functional>
#include <vector>

#include "stacklab/core_model.hpp"

namespace stacklab {

// Everything here is a pure function over immutable inputs; concurrent calls
// need no coordination.

// ---------------------------------------------------------------------------
// Source basis.
//
// Every random quantity in the game is a linear form over five independent
// Gaussian sources:
//   omega0    common state,                              var 1
//   w_leader  leader observation noise,                  var 1
//   w_major   major observation noise (or the shared y), var 1
//   w_own     distinguished follower's noise,            var 1
//   w_others  mean of the other n-1 followers' noises,   var 1/(n-1)
// ---------------------------------------------------------------------------

enum Source : int { src_omega0 = 0, src_w_leader, src_w_major, src_w_own, src_w_others };
constexpr int n_sources = 5;

struct SourceVec {
    std::array<double, n_sources> c{};

    SourceVec& operator+=(const SourceVec& o) {
        for (int k = 0; k < n_sources; ++k) c[k] += o.c[k];
        return *this;
    }
    SourceVec& operator-=(const SourceVec& o) {
        for (int k = 0; k < n_sources; ++k) c[k] -= o.c[k];
        return *this;
    }
    SourceVec& operator*=(double s) {
        for (int k = 0; k < n_sources; ++k) c[k] *= s;
        return *this;
    }
    friend SourceVec operator+(SourceVec a, const SourceVec& b) { return a += b; }
    friend SourceVec operator-(SourceVec a, const SourceVec& b) { return a -= b; }
    friend SourceVec operator*(double s, SourceVec a) { return a *= s; }
};

double source_variance(int k, const GameContext& ctx);
double covariance(const SourceVec& a, const SourceVec& b, const GameContext& ctx);

// Observation channels as source vectors.
SourceVec obs_vector(Obs o, const GameContext& ctx);

// Sum of all n member observations of the follower family (pop conditioning).
SourceVec follower_family_sum(const GameContext& ctx);

// ---------------------------------------------------------------------------
// Profile composition: realized action of every Act channel as a source form.
// Incentive policies are composed by substituting the monitored action.
// ---------------------------------------------------------------------------

struct ActionVectors {
    std::array<SourceVec, n_act_channels> v;

    const SourceVec& at(Act a) const { return v[static_cast<int>(a)]; }
    SourceVec& at(Act a) { return v[static_cast<int>(a)]; }
};

ActionVectors compose_profile(const Profile& p, const GameContext& ctx);

// Exact expected cost of a profile: sum over terms of weight * E[(combo . z)^2].
double expected_cost(const QuadraticCostSpec& cost, const ActionVectors& av, const GameContext& ctx);
double expected_cost(const QuadraticCostSpec& cost, const Profile& p, const GameContext& ctx);

// E[omega0 | k distinct unit-noise observations] puts 1/(k+1) on each of them.
double conditional_mean_coeff(int k);

// ---------------------------------------------------------------------------
// Stationarity residuals.
//
// sens.d[channel] is the derivative of that cost channel with respect to the
// deviating player's action. The residual of `cost` for that player is
//   E[ d(cost)/d(action) | conditioning observations ]
// expressed as a linear form over the conditioning channels; it is the zero
// form exactly when every coefficient vanishes.
// ---------------------------------------------------------------------------

struct Sensitivity {
    std::array<double, n_act_channels> d{};

    double& at(Act a) { return d[static_cast<int>(a)]; }
    double at(Act a) const { return d[static_cast<int>(a)]; }
};

// Unilateral-deviation sensitivities at a profile (includes the incentive
// chain through the leader's monitored action).
Sensitivity deviation_sensitivity(Role role, const Profile& p, const GameContext& ctx);

// Conditioning channel with a multiplicity (the leader in the all-followers
// game conditions on all n follower observations at once).
struct CondChannel {
    Obs obs;
    int mult = 1;
};

struct ResidualForm {
    std::vector<Obs> channels;   // deduplicated conditioning channels
    std::vector<double> coeff;   // coefficient on each channel

    double max_abs() const;
    bool is_zero(double tol = 1e-10) const { return max_abs() <= tol; }
};

ResidualForm stationarity_residual(const QuadraticCostSpec& cost, const ActionVectors& av,
                                   const Sensitivity& sens, const std::vector<CondChannel>& info,
                                   const GameContext& ctx);

// Convenience: residual of `role`'s own cost under unilateral deviation,
// conditioned on that role's information set.
ResidualForm stationarity_residual(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                   const GameContext& ctx);

std::vector<CondChannel> conditioning_for(Role role, const GameContext& ctx);

// ---------------------------------------------------------------------------
// Quadratic view of a player's unilateral re-optimization.
//
// J(delta) = j0 + g.delta + 0.5 delta' H delta over deviations of the
// player's policy coefficients on `channels`. g is also the exact parametric
// gradient of expected_cost in those coefficients.
// ---------------------------------------------------------------------------

struct QuadObjective {
    int dim = 0;
    std::vector<double> h;   // row-major dim x dim
    std::vector<double> g;
    double j0 = 0.0;
};

QuadObjective deviation_objective(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                  const std::vector<Obs>& channels, const GameContext& ctx);

// Exact parametric gradient of expected_cost in the profile's policy
// coefficients. Unlike deviation_objective (which moves one minor follower
// unilaterally), perturbing the shared minor policy moves the whole
// population.
std::vector<double> policy_gradient(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                    const std::vector<Obs>& channels, const GameContext& ctx);

// Information-set channels with exact observation duplicates removed (the
// shared-observation variant collapses own onto the major signal).
std::vector<Obs> distinct_channels(Role role, const GameContext& ctx);

// ---------------------------------------------------------------------------
// Generic stationarity-system assembler.
//
// Each equation contributes one row per conditioning channel; the rows are
// affine in the unknown coefficients, so stacking them yields a square linear
// system. Serves as the independent cross-check for every closed-form solver.
// ---------------------------------------------------------------------------

struct StationarityEq {
    const QuadraticCostSpec* cost = nullptr;
    Sensitivity sens;
    std::vector<CondChannel> info;
    bool deviation_sens = false;  // recompute sens from the profile for this role
    Role role = Role::minor;      // used when deviation_sens is set
};

// apply(x) writes the k unknowns into a copy of `base`; returns the solved
// unknown vector. Throws degenerate_game_error when the stacked system is
// singular (naming the offending pivot) or not square.
std::vector<double> solve_linear_policies(
    const GameContext& ctx, const std::vector<StationarityEq>& eqs, const Profile& base,
    const std::function<void(Profile&, const double*)>& apply, int k,
    double* condition_out = nullptr);

} // namespace stacklab
