#include "stacklab/verifier.hpp"

#include <cmath>

#include <json.hpp>

#include "stacklab/kernels.hpp"
#include "stacklab/linsolve.hpp"

namespace stacklab {

namespace {

constexpr int k_per_follower_cap = 2048;
constexpr double k_exact_tol = 1e-10;

} // namespace

void MonteCarloConfig::validate() const {
    if (samples < 10000) throw std::invalid_argument("MonteCarloConfig: samples must be >= 10^4");
    if (batches < 1) throw std::invalid_argument("MonteCarloConfig: batches must be >= 1");
}

McEstimate mc_expected_cost(const QuadraticCostSpec& cost, const Profile& p,
                            const GameContext& ctx, const MonteCarloConfig& cfg) {
    cfg.validate();
    const bool per_follower = ctx.n <= k_per_follower_cap;
    const auto prog = kernels::compile_program(cost, p, ctx, per_follower);
    const auto fn = kernels::select_backend();

    const long long per_batch = std::max<long long>(1, cfg.samples / cfg.batches);
    const long long used = per_batch * cfg.batches;

    double mean_sum = 0.0;
    std::vector<double> batch_means(cfg.batches);
    double within_var = 0.0;
    for (int b = 0; b < cfg.batches; ++b) {
        const auto key = kernels::batch_key(cfg.seed, static_cast<uint64_t>(b));
        const auto m = kernels::run_batch(prog, key, per_batch, fn);
        batch_means[b] = m.sum / per_batch;
        mean_sum += batch_means[b];
        if (cfg.batches == 1 && per_batch > 1)
            within_var = (m.sum_sq - m.sum * m.sum / per_batch) / (per_batch - 1);
    }

    McEstimate out;
    out.samples_used = used;
    out.backend = kernels::backend_name();
    out.sampling = per_follower ? "per_follower" : "reduced";
    out.estimate = mean_sum / cfg.batches;
    if (cfg.batches >= 2) {
        double ss = 0.0;
        for (double m : batch_means) {
            const double d = m - out.estimate;
            ss += d * d;
        }
        out.std_error = std::sqrt(ss / (cfg.batches * (cfg.batches - 1.0)));
    } else {
        out.std_error = std::sqrt(within_var / per_batch);
    }
    return out;
}

double best_response_improvement(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                 const GameContext& ctx) {
    const auto channels = distinct_channels(role, ctx);
    const auto q = deviation_objective(cost, p, role, channels, ctx);

    // Strict convexity of the player's own problem.
    for (int i = 0; i < q.dim; ++i)
        if (q.h[i * q.dim + i] <= 0.0)
            throw degenerate_game_error("best_response_improvement: non-strict own curvature");

    std::vector<double> neg_g(q.dim);
    for (int i = 0; i < q.dim; ++i) neg_g[i] = -q.g[i];
    auto solved = lu_solve(q.h, neg_g, q.dim);
    if (solved.singular)
        throw degenerate_game_error("best_response_improvement: singular curvature matrix");

    // J(0) - J(delta*) = -0.5 g . delta*, nonnegative up to rounding
    double imp = 0.0;
    for (int i = 0; i < q.dim; ++i) imp += q.g[i] * solved.x[i];
    return std::max(0.0, -0.5 * imp);
}

double pointwise_deviation(const QuadraticCostSpec& cost, const Profile& p, Role role,
                           const GameContext& ctx, int realizations, uint64_t seed) {
    const auto av = compose_profile(p, ctx);
    const auto sens = deviation_sensitivity(role, p, ctx);
    const auto info = conditioning_for(role, ctx);
    const auto rf = stationarity_residual(cost, av, sens, info, ctx);

    double curvature = 0.0;
    for (const auto& t : cost.terms) {
        double d = 0.0;
        for (int c = 0; c < n_act_channels; ++c) d += t.combo[c] * sens.d[c];
        curvature += 2.0 * t.weight * d * d;
    }
    if (curvature <= 0.0)
        throw degenerate_game_error("pointwise_deviation: zero own-action curvature");

    // The conditional optimum offsets the policy action by -residual(obs)/curvature;
    // sample the observation channels and take the largest offset.
    const auto key = kernels::batch_key(seed, 0x706f696e74ULL);
    double worst = 0.0;
    for (int i = 0; i < realizations; ++i) {
        double z[n_sources];
        for (int k = 0; k < n_sources; ++k)
            z[k] = kernels::normal_draw(key, static_cast<uint64_t>(i), k) *
                   std::sqrt(source_variance(k, ctx));
        double resid = 0.0;
        for (size_t c = 0; c < rf.channels.size(); ++c) {
            const auto v = obs_vector(rf.channels[c], ctx);
            double obs = 0.0;
            for (int k = 0; k < n_sources; ++k) obs += v.c[k] * z[k];
            resid += rf.coeff[c] * obs;
        }
        worst = std::max(worst, std::fabs(resid / curvature));
    }
    return worst;
}

std::string CertificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["verdict"] = pass ? "pass" : "fail";
    j["flavor"] = flavor;
    nlohmann::ordered_json imp;
    for (const auto& [k, v] : per_player_improvement) imp[k] = v;
    j["per_player_improvement"] = imp;
    j["leader_gap"] = leader_gap;
    j["reference_mismatch"] = reference_mismatch;
    j["pointwise_max_dev"] = pointwise_max_dev;
    j["exact_cost"] = exact_cost;
    j["mc"] = {{"estimate", mc.estimate},
               {"std_error", mc.std_error},
               {"samples", mc.samples_used},
               {"backend", mc.backend},
               {"sampling", mc.sampling}};
    j["mc_sigmas"] = mc_sigmas;
    j["tolerances"] = {{"exact", tol_exact},
                       {"eps_leader", eps_leader},
                       {"eps_follower", eps_follower},
                       {"mc_sigmas", 4.0}};
    j["seed"] = seed;
    return j.dump(2);
}

namespace {

// On-path consistency of the incentive policy: the realized leader action must
// equal the base action, i.e. the monitored vector matches the reference.
double reference_mismatch(const Profile& p, const GameContext& ctx) {
    if (p.leader.gain == 0.0) return 0.0;
    const auto av = compose_profile(p, ctx);
    Profile base_only = p;
    base_only.leader.gain = 0.0;
    const auto av0 = compose_profile(base_only, ctx);
    const SourceVec diff = av.at(Act::leader) - av0.at(Act::leader);
    return std::sqrt(covariance(diff, diff, ctx));
}

CertificationReport certify_common(const QuadraticCostSpec& leader_cost, const Profile& p,
                                   const GameContext& ctx, double j_optimal,
                                   const std::vector<std::pair<std::string, double>>& improvements,
                                   double pointwise, const CertifyOptions& opt) {
    CertificationReport rep;
    rep.seed = opt.mc.seed;
    rep.eps_leader = opt.eps_leader;
    rep.eps_follower = opt.eps_follower;
    rep.tol_exact = k_exact_tol;

    rep.exact_cost = expected_cost(leader_cost, p, ctx);
    rep.leader_gap = rep.exact_cost - j_optimal;
    rep.reference_mismatch = reference_mismatch(p, ctx);
    rep.pointwise_max_dev = pointwise;
    for (const auto& [k, v] : improvements) rep.per_player_improvement[k] = v;

    rep.mc = mc_expected_cost(leader_cost, p, ctx, opt.mc);
    rep.mc_sigmas = rep.mc.std_error > 0.0
                        ? std::fabs(rep.mc.estimate - rep.exact_cost) / rep.mc.std_error
                        : 0.0;

    bool ok = rep.leader_gap <= opt.eps_leader + k_exact_tol;
    ok = ok && rep.reference_mismatch <= k_exact_tol;
    ok = ok && rep.pointwise_max_dev <= std::max(1e-7, 10.0 * opt.eps_follower);
    for (const auto& [k, v] : rep.per_player_improvement)
        ok = ok && v <= opt.eps_follower + k_exact_tol;
    ok = ok && rep.mc_sigmas <= 4.0;
    rep.pass = ok;
    return rep;
}

} // namespace

CertificationReport certify_incentive(const PnGameSpec& spec, const PnSolution& sol,
                                      const CertifyOptions& opt) {
    if (sol.n != spec.n) throw contract_violation("certify_incentive: solution/spec n mismatch");
    const GameContext ctx = make_context(spec);
    const PnCosts costs = build_pn_costs(spec);

    Profile p = pn_profile(spec, sol);
    if (opt.zero_gain) p.leader.gain = 0.0;

    // Leader-optimal benchmark: the leader cost at the team coefficients.
    const Profile team = pn_profile(spec, pn_leader_optimal(spec));
    const double j_opt = expected_cost(costs.leader, team, ctx);

    std::vector<std::pair<std::string, double>> improvements;
    improvements.emplace_back("follower",
                              best_response_improvement(costs.follower, p, Role::minor, ctx));
    const double pw = pointwise_deviation(costs.follower, p, Role::minor, ctx, 1000, opt.mc.seed);
    return certify_common(costs.leader, p, ctx, j_opt, improvements, pw, opt);
}

CertificationReport certify_incentive(const MajGameSpec& spec, const MajSolution& sol,
                                      const CertifyOptions& opt) {
    if (sol.n != spec.n) throw contract_violation("certify_incentive: solution/spec n mismatch");
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);

    Profile p = maj_profile(spec, sol);
    if (opt.zero_gain) p.leader.gain = 0.0;

    // Leader-major-optimal benchmark, re-solved rather than trusted from `sol`.
    const Profile opt_profile = maj_profile(spec, maj_leader_major_optimal(spec));
    const double j_opt = expected_cost(costs.leader, opt_profile, ctx);

    std::vector<std::pair<std::string, double>> improvements;
    improvements.emplace_back("major",
                              best_response_improvement(costs.major, p, Role::major, ctx));
    improvements.emplace_back("minor",
                              best_response_improvement(costs.minor, p, Role::minor, ctx));
    const double pw = std::max(
        pointwise_deviation(costs.major, p, Role::major, ctx, 1000, opt.mc.seed),
        pointwise_deviation(costs.minor, p, Role::minor, ctx, 1000, opt.mc.seed));
    return certify_common(costs.leader, p, ctx, j_opt, improvements, pw, opt);
}

CertificationReport certify_zero_loss(const MajGameSpec& spec, const ZeroLossSolution& sol,
                                      const CertifyOptions& opt) {
    if (sol.n != spec.n) throw contract_violation("certify_zero_loss: solution/spec n mismatch");
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);

    Profile p = zero_loss_profile(spec, sol);
    if (opt.zero_gain) p.leader.gain = 0.0;

    const MajLoss loss = maj_loss(spec);

    std::vector<std::pair<std::string, double>> improvements;
    improvements.emplace_back("minor",
                              best_response_improvement(costs.minor, p, Role::minor, ctx));
    if (p.leader.gain != 0.0)
        improvements.emplace_back("major",
                                  best_response_improvement(costs.major, p, Role::major, ctx));
    improvements.emplace_back("loss", std::max(loss.loss, 0.0));
    const double pw = pointwise_deviation(costs.minor, p, Role::minor, ctx, 1000, opt.mc.seed);
    return certify_common(costs.leader, p, ctx, loss.j_leader_opt, improvements, pw, opt);
}

} // namespace stacklab
