#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "stacklab/core_model.hpp"
#include "stacklab/gaussian.hpp"
#include "stacklab/major_solver.hpp"
#include "stacklab/pn_solver.hpp"

namespace stacklab {

// Monte Carlo batches run on seeds derived from (seed, batch index), so the
// estimate is independent of scheduling; all entry points are pure and safe
// to invoke concurrently.

// ---------------------------------------------------------------------------
// Seeded Monte Carlo estimation.
// ---------------------------------------------------------------------------

struct MonteCarloConfig {
    long long samples = 1000000;
    uint64_t seed = 1;
    int batches = 64;

    void validate() const;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long long samples_used = 0;
    std::string backend;     // "scalar" or "avx2"
    std::string sampling;    // "per_follower" or "reduced"
};

// Batch-mean estimate of the expected cost by simulating the game: individual
// follower noises are drawn per sample up to n = 2048, beyond which the
// exchangeable mean-noise reduction is sampled instead.
McEstimate mc_expected_cost(const QuadraticCostSpec& cost, const Profile& p,
                            const GameContext& ctx, const MonteCarloConfig& cfg);

// ---------------------------------------------------------------------------
// Exact best-response improvement: re-optimize one player's linear-policy
// coefficients with everyone else fixed; current cost minus optimal cost.
// ---------------------------------------------------------------------------

double best_response_improvement(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                 const GameContext& ctx);

// Largest pointwise gap between a player's policy action and the conditional
// optimum of her cost, over `realizations` sampled observation draws.
double pointwise_deviation(const QuadraticCostSpec& cost, const Profile& p, Role role,
                           const GameContext& ctx, int realizations, uint64_t seed);

// ---------------------------------------------------------------------------
// Certification per the equilibrium definitions. The verdict follows the
// optimistic convention (response sets here are singletons).
// ---------------------------------------------------------------------------

struct CertificationReport {
    bool pass = false;
    std::string flavor = "optimistic";
    std::map<std::string, double> per_player_improvement;
    double leader_gap = 0.0;           // realized leader cost - optimal leader cost
    double reference_mismatch = 0.0;   // on-path incentive action vs base action
    double pointwise_max_dev = 0.0;
    double exact_cost = 0.0;
    McEstimate mc;
    double mc_sigmas = 0.0;            // |mc - exact| in standard errors
    double eps_leader = 0.0;
    double eps_follower = 0.0;
    double tol_exact = 1e-10;
    uint64_t seed = 0;

    std::string to_json() const;
};

struct CertifyOptions {
    double eps_leader = 0.0;
    double eps_follower = 0.0;
    MonteCarloConfig mc;
    bool zero_gain = false;  // overwrite the incentive gain with 0 (negative control)
};

CertificationReport certify_incentive(const PnGameSpec& spec, const PnSolution& sol,
                                      const CertifyOptions& opt);
CertificationReport certify_incentive(const MajGameSpec& spec, const MajSolution& sol,
                                      const CertifyOptions& opt);

// Zero-loss variant: certifies that the minors' response set is the singleton
// symmetric profile and that the loss vanishes.
CertificationReport certify_zero_loss(const MajGameSpec& spec, const ZeroLossSolution& sol,
                                      const CertifyOptions& opt);

} // namespace stacklab
