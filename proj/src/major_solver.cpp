#include "stacklab/major_solver.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "stacklab/linsolve.hpp"

namespace stacklab {

namespace {

constexpr double k_gain_denom_tol = 1e-12;

double rprime_of(const MajGameSpec& spec) { return spec.r * spec.n / (spec.n + 1.0); }

void warn_if_ill_conditioned(double condition, const char* what) {
    if (condition > 1e8)
        std::fprintf(stderr, "stacklab: %s condition estimate %.3e exceeds 1e8\n", what,
                     condition);
}

void require_plain(const MajGameSpec& spec, const char* who) {
    if (spec.shared_obs) {
        std::ostringstream msg;
        msg << who << ": shared-observation variant is handled by zero_loss_solve";
        throw contract_violation(msg.str());
    }
}

} // namespace

MinorResponse maj_minor_response(const MajGameSpec& spec, double beta) {
    spec.validate();
    const double n = spec.n;
    const double rp = rprime_of(spec);
    MinorResponse m;
    if (spec.q == 0.0) return m;  // minors ignore everyone
    m.alpha = -spec.q / (3.0 * rp + 2.0 * spec.q * (2.0 * n + 1.0) / n);
    const double rho = spec.q / (rp + 2.0 * spec.q);
    m.alphaM = -rho * (beta + (1.0 + (n - 1.0) / n * m.alpha) / 3.0);
    return m;
}

double maj_response_slope(const MajGameSpec& spec) {
    return spec.q / (rprime_of(spec) + 2.0 * spec.q);
}

MajSolution maj_leader_major_optimal(const MajGameSpec& spec) {
    spec.validate();
    require_plain(spec, "maj_leader_major_optimal");
    const double n = spec.n;
    const double q0 = spec.q0, qh = spec.qhat0, r0 = spec.r0;
    const double A = r0 + q0 + qh;

    MajSolution s;
    s.n = spec.n;
    s.rprime = rprime_of(spec);
    const double rho = maj_response_slope(spec);
    s.D = 1.0 - rho;
    s.alpha = maj_minor_response(spec, 0.0).alpha;
    s.theta = -q0 * (1.0 + s.alpha) / (3.0 * A);

    // Unknowns (thetaM, beta, alphaM):
    //   leader yM channel, response-aware major stationarity, minor yM channel.
    const double c1 = q0 * (1.0 + s.alpha) / 3.0;
    std::vector<double> mat = {
        A, q0 + qh, q0,
        q0 * s.D + qh, q0 * s.D + qh, q0 * s.D,
        0.0, rho, 1.0,
    };
    std::vector<double> rhs = {
        -c1,
        -(q0 * s.D + qh) * s.theta / 2.0 - q0 * s.D * (1.0 + s.alpha) / 2.0,
        -rho * (1.0 + (n - 1.0) / n * s.alpha) / 3.0,
    };
    auto solved = lu_solve(mat, rhs, 3);
    if (solved.singular)
        throw degenerate_game_error(
            "maj_leader_major_optimal: degenerate leader/major system (tracking weights vanish)");
    warn_if_ill_conditioned(solved.condition, "leader-major system");
    s.thetaM = solved.x[0];
    s.beta = solved.x[1];
    s.alphaM = solved.x[2];
    s.L = s.theta / 2.0 + s.thetaM + s.beta + (1.0 + s.alpha) / 2.0 + s.alphaM;
    return s;
}

MajGain maj_gain(const MajGameSpec& spec, const MajSolution& sol) {
    spec.validate();
    MajGain g;
    g.L = sol.theta / 2.0 + sol.thetaM + sol.beta + (1.0 + sol.alpha) / 2.0 + sol.alphaM;
    if (std::fabs(g.L) < k_gain_denom_tol)
        throw degenerate_gain_error(
            "maj_gain: major tracking coefficient L vanishes; the leader cannot "
            "incentivize through this channel");
    g.gain = -1.0 - spec.rM * sol.beta / (spec.qM * g.L);
    return g;
}

MajSolution maj_solve(const MajGameSpec& spec) {
    MajSolution s = maj_leader_major_optimal(spec);
    const MajGain g = maj_gain(spec, s);
    s.gain = g.gain;
    s.L = g.L;
    return s;
}

MajLimits maj_limits(const MajGameSpec& spec) {
    spec.validate();
    require_plain(spec, "maj_limits");
    const double q0 = spec.q0, qh = spec.qhat0, r0 = spec.r0, q = spec.q, r = spec.r;
    const double A = r0 + q0 + qh;

    MajLimits l;
    l.alpha = q == 0.0 ? 0.0 : -q / (3.0 * r + 4.0 * q);
    l.theta = -q0 * (1.0 + l.alpha) / (3.0 * A);
    const double rho = q == 0.0 ? 0.0 : q / (r + 2.0 * q);
    const double D = 1.0 - rho;

    std::vector<double> mat = {
        A, q0 + qh, q0,
        q0 * D + qh, q0 * D + qh, q0 * D,
        0.0, rho, 1.0,
    };
    std::vector<double> rhs = {
        -q0 * (1.0 + l.alpha) / 3.0,
        -(q0 * D + qh) * l.theta / 2.0 - q0 * D * (1.0 + l.alpha) / 2.0,
        -rho * (1.0 + l.alpha) / 3.0,
    };
    auto solved = lu_solve(mat, rhs, 3);
    if (solved.singular)
        throw degenerate_limit_error("maj_limits: degenerate limit system");
    warn_if_ill_conditioned(solved.condition, "limit system");
    l.thetaM = solved.x[0];
    l.beta = solved.x[1];
    l.alphaM = solved.x[2];
    l.L = l.theta / 2.0 + l.thetaM + l.beta + (1.0 + l.alpha) / 2.0 + l.alphaM;
    if (std::fabs(l.L) < k_gain_denom_tol)
        throw degenerate_limit_error("maj_limits: limit tracking coefficient vanishes");
    l.gain = -1.0 - spec.rM * l.beta / (spec.qM * l.L);
    return l;
}

MajHatSolution maj_leader_optimal(const MajGameSpec& spec) {
    spec.validate();
    require_plain(spec, "maj_leader_optimal");
    if (spec.q0 <= 0.0)
        throw unsupported_parameterization_error(
            "maj_leader_optimal: q0 > 0 required (the minors' team stationarity "
            "degenerates at q0 = 0)");
    const double n = spec.n;
    const double q0 = spec.q0, qh = spec.qhat0;
    const double A = spec.r0 + q0 + qh;

    // Unknowns (theta, thetaM, beta, alpha, alphaM).
    std::vector<double> mat = {
        A, 0.0, 0.0, q0 / 3.0, 0.0,
        0.0, A, q0 + qh, q0 / 3.0, q0,
        (q0 + qh) / 2.0, q0 + qh, q0 + qh, q0 / 2.0, q0,
        n, 0.0, 0.0, n + 2.0, 0.0,
        1.0 / 3.0, 1.0, 1.0, (n - 1.0) / (3.0 * n), 1.0,
    };
    std::vector<double> rhs = {-q0 / 3.0, -q0 / 3.0, -q0 / 2.0, -n, -1.0 / 3.0};
    auto solved = lu_solve(mat, rhs, 5);
    if (solved.singular)
        throw degenerate_game_error("maj_leader_optimal: singular team system");
    warn_if_ill_conditioned(solved.condition, "leader-optimal system");
    MajHatSolution h;
    h.n = spec.n;
    h.theta_hat = solved.x[0];
    h.thetaM_hat = solved.x[1];
    h.beta_hat = solved.x[2];
    h.alpha_hat = solved.x[3];
    h.alphaM_hat = solved.x[4];
    return h;
}

Profile maj_profile(const MajGameSpec& spec, const MajSolution& sol) {
    (void)spec;
    Profile p;
    p.leader.base.set(Obs::leader, sol.theta);
    p.leader.base.set(Obs::major, sol.thetaM);
    p.leader.monitored = Monitored::major_action;
    p.leader.reference = LinearPolicy::single(Obs::major, sol.beta);
    p.leader.gain = sol.gain.value_or(0.0);
    p.major = LinearPolicy::single(Obs::major, sol.beta);
    p.minor.set(Obs::own, sol.alpha);
    p.minor.set(Obs::major, sol.alphaM);
    return p;
}

Profile maj_hat_profile(const MajGameSpec& spec, const MajHatSolution& sol) {
    (void)spec;
    Profile p;
    p.leader.base.set(Obs::leader, sol.theta_hat);
    p.leader.base.set(Obs::major, sol.thetaM_hat);
    p.major = LinearPolicy::single(Obs::major, sol.beta_hat);
    p.minor.set(Obs::own, sol.alpha_hat);
    p.minor.set(Obs::major, sol.alphaM_hat);
    return p;
}

Profile zero_loss_profile(const MajGameSpec& spec, const ZeroLossSolution& sol) {
    (void)spec;
    Profile p;
    p.leader.base.set(Obs::leader, sol.theta);
    p.leader.base.set(Obs::major, sol.thetaM);
    p.leader.monitored = Monitored::major_action;
    p.leader.reference = LinearPolicy::single(Obs::major, sol.beta);
    p.leader.gain = sol.gain.value_or(0.0);
    p.major = LinearPolicy::single(Obs::major, sol.beta);
    p.minor.set(Obs::own, sol.beta);
    return p;
}

TeamMinimum minimize_expected_cost(const QuadraticCostSpec& cost, const Profile& base,
                                   const std::vector<std::function<void(Profile&, double)>>& slots,
                                   const GameContext& ctx) {
    const int k = static_cast<int>(slots.size());
    auto eval = [&](const std::vector<double>& x) {
        Profile p = base;
        for (int i = 0; i < k; ++i) slots[i](p, x[i]);
        return expected_cost(cost, p, ctx);
    };
    const double j0 = eval(std::vector<double>(k, 0.0));
    std::vector<double> g(k), h(k * k);
    for (int i = 0; i < k; ++i) {
        std::vector<double> xp(k, 0.0), xm(k, 0.0);
        xp[i] = 1.0;
        xm[i] = -1.0;
        const double jp = eval(xp), jm = eval(xm);
        g[i] = (jp - jm) / 2.0;
        h[i * k + i] = jp + jm - 2.0 * j0;
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            std::vector<double> x(k, 0.0);
            x[i] = 1.0;
            x[j] = 1.0;
            const double jij = eval(x);
            const double hij = jij - j0 - g[i] - g[j] - 0.5 * h[i * k + i] - 0.5 * h[j * k + j];
            h[i * k + j] = hij;
            h[j * k + i] = hij;
        }
    }
    std::vector<double> neg_g(k);
    for (int i = 0; i < k; ++i) neg_g[i] = -g[i];
    auto solved = lu_solve(h, neg_g, k);
    if (solved.singular)
        throw degenerate_game_error("minimize_expected_cost: flat objective direction");
    TeamMinimum out;
    out.x = solved.x;
    out.value = eval(solved.x);
    return out;
}

MajLoss maj_loss(const MajGameSpec& spec) {
    spec.validate();
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);
    MajLoss out;
    if (spec.shared_obs) {
        const ZeroLossSolution z = zero_loss_solve(spec);
        out.j_leader_major = expected_cost(costs.leader, zero_loss_profile(spec, z), ctx);
        // Team optimum over (theta, thetaM, s); the major and minor shared-signal
        // channels act on the leader cost only through s = m/n + b.
        Profile base;
        std::vector<std::function<void(Profile&, double)>> slots = {
            [](Profile& p, double v) { p.leader.base.set(Obs::leader, v); },
            [](Profile& p, double v) { p.leader.base.set(Obs::major, v); },
            [](Profile& p, double v) { p.minor.set(Obs::own, v); },
        };
        out.j_leader_opt = minimize_expected_cost(costs.leader, base, slots, ctx).value;
    } else {
        const MajSolution s = maj_leader_major_optimal(spec);
        const MajHatSolution h = maj_leader_optimal(spec);
        out.j_leader_major = expected_cost(costs.leader, maj_profile(spec, s), ctx);
        out.j_leader_opt = expected_cost(costs.leader, maj_hat_profile(spec, h), ctx);
    }
    out.loss = out.j_leader_major - out.j_leader_opt;
    return out;
}

ZeroLossSolution zero_loss_solve(const MajGameSpec& spec) {
    spec.validate();
    if (!spec.shared_obs)
        throw contract_violation("zero_loss_solve: spec must use the shared observation variant");
    if (spec.q0 <= 0.0)
        throw unsupported_parameterization_error("zero_loss_solve: q0 > 0 required");
    const double n = spec.n;
    ZeroLossSolution z;
    z.n = spec.n;
    z.theta = -spec.q0 / (3.0 * (spec.q0 + spec.r0));
    z.thetaM = spec.q0 * (3.0 * z.theta + 1.0) / (6.0 * spec.r0);
    z.beta = -n / (2.0 * (n + 1.0));
    // Major stationarity denominator: E[u0 + uM + ubar + omega0 | y].
    const double G = z.theta / 2.0 + z.thetaM + 2.0 * z.beta + 0.5;
    if (std::fabs(G) >= k_gain_denom_tol)
        z.gain = -1.0 - spec.rM * z.beta / (spec.qM * G);
    return z;
}

// --- assembler cross-checks --------------------------------------------------

MinorResponse maj_minor_response_assembled(const MajGameSpec& spec, double beta) {
    spec.validate();
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);

    Profile base;
    base.major = LinearPolicy::single(Obs::major, beta);

    Sensitivity minor;
    minor.at(Act::own) = 1.0;
    minor.at(Act::pop_mean) = 1.0 / ctx.n;

    std::vector<StationarityEq> eqs;
    eqs.push_back({&costs.minor, minor, {{Obs::own, 1}, {Obs::major, 1}}});
    auto apply = [](Profile& p, const double* x) {
        p.minor.set(Obs::own, x[0]);
        p.minor.set(Obs::major, x[1]);
    };
    const auto x = solve_linear_policies(ctx, eqs, base, apply, 2);
    return MinorResponse{x[0], x[1]};
}

MajSolution maj_leader_major_optimal_assembled(const MajGameSpec& spec, double* condition_out) {
    spec.validate();
    require_plain(spec, "maj_leader_major_optimal_assembled");
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);

    // Minors' reaction slope measured from the assembled response itself.
    const double a0 = maj_minor_response_assembled(spec, 0.0).alphaM;
    const double a1 = maj_minor_response_assembled(spec, 1.0).alphaM;
    const double rho = -(a1 - a0);

    Profile base;
    base.leader.monitored = Monitored::major_action;

    Sensitivity lead;
    lead.at(Act::leader) = 1.0;
    Sensitivity minor;
    minor.at(Act::own) = 1.0;
    minor.at(Act::pop_mean) = 1.0 / ctx.n;
    Sensitivity major_aware;
    major_aware.at(Act::major) = 1.0;
    major_aware.at(Act::pop_mean) = -rho;
    major_aware.at(Act::own) = -rho;

    std::vector<StationarityEq> eqs;
    eqs.push_back({&costs.minor, minor, {{Obs::own, 1}, {Obs::major, 1}}});
    eqs.push_back({&costs.leader, lead, {{Obs::leader, 1}, {Obs::major, 1}}});
    eqs.push_back({&costs.leader, major_aware, {{Obs::major, 1}}});

    auto apply = [](Profile& p, const double* x) {
        p.minor.set(Obs::own, x[0]);
        p.minor.set(Obs::major, x[1]);
        p.leader.base.set(Obs::leader, x[2]);
        p.leader.base.set(Obs::major, x[3]);
        p.major.set(Obs::major, x[4]);
    };
    const auto x = solve_linear_policies(ctx, eqs, base, apply, 5, condition_out);

    MajSolution s;
    s.n = spec.n;
    s.alpha = x[0];
    s.alphaM = x[1];
    s.theta = x[2];
    s.thetaM = x[3];
    s.beta = x[4];
    s.rprime = rprime_of(spec);
    s.D = 1.0 - rho;
    s.L = s.theta / 2.0 + s.thetaM + s.beta + (1.0 + s.alpha) / 2.0 + s.alphaM;
    return s;
}

MajHatSolution maj_leader_optimal_assembled(const MajGameSpec& spec, double* condition_out) {
    spec.validate();
    require_plain(spec, "maj_leader_optimal_assembled");
    if (spec.q0 <= 0.0)
        throw unsupported_parameterization_error(
            "maj_leader_optimal_assembled: q0 > 0 required");
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);

    Profile base;
    Sensitivity lead;
    lead.at(Act::leader) = 1.0;
    Sensitivity major_team;
    major_team.at(Act::major) = 1.0;
    Sensitivity minor_team;
    minor_team.at(Act::own) = 1.0;
    minor_team.at(Act::pop_mean) = 1.0 / ctx.n;

    std::vector<StationarityEq> eqs;
    eqs.push_back({&costs.leader, lead, {{Obs::leader, 1}, {Obs::major, 1}}});
    eqs.push_back({&costs.leader, major_team, {{Obs::major, 1}}});
    eqs.push_back({&costs.leader, minor_team, {{Obs::own, 1}, {Obs::major, 1}}});

    auto apply = [](Profile& p, const double* x) {
        p.leader.base.set(Obs::leader, x[0]);
        p.leader.base.set(Obs::major, x[1]);
        p.major.set(Obs::major, x[2]);
        p.minor.set(Obs::own, x[3]);
        p.minor.set(Obs::major, x[4]);
    };
    const auto x = solve_linear_policies(ctx, eqs, base, apply, 5, condition_out);

    MajHatSolution h;
    h.n = spec.n;
    h.theta_hat = x[0];
    h.thetaM_hat = x[1];
    h.beta_hat = x[2];
    h.alpha_hat = x[3];
    h.alphaM_hat = x[4];
    return h;
}

double maj_gain_assembled(const MajGameSpec& spec, const MajSolution& sol) {
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);
    Profile base = maj_profile(spec, sol);
    base.leader.gain = 0.0;

    std::vector<StationarityEq> eqs;
    StationarityEq eq;
    eq.cost = &costs.major;
    eq.info = {{Obs::major, 1}};
    eq.deviation_sens = true;
    eq.role = Role::major;
    eqs.push_back(eq);

    auto apply = [](Profile& p, const double* x) { p.leader.gain = x[0]; };
    return solve_linear_policies(ctx, eqs, base, apply, 1)[0];
}

// --- sweeps and views ---------------------------------------------------------

std::string maj_loss_csv(const MajGameSpec& spec, const std::vector<int>& n_grid) {
    std::ostringstream out;
    out << "n,j_leader_opt,j_leader_major,loss\n";
    out.precision(17);
    for (int n : n_grid) {
        MajGameSpec s = spec;
        s.n = n;
        const MajLoss l = maj_loss(s);
        out << n << ',' << l.j_leader_opt << ',' << l.j_leader_major << ',' << l.loss << '\n';
    }
    return out.str();
}

std::string maj_sweep_csv(const MajGameSpec& spec, const std::vector<int>& n_grid) {
    std::ostringstream out;
    out << "n,theta,thetaM,beta,alpha,alphaM,gain,L\n";
    out.precision(17);
    for (int n : n_grid) {
        MajGameSpec s = spec;
        s.n = n;
        const MajSolution sol = maj_solve(s);
        out << n << ',' << sol.theta << ',' << sol.thetaM << ',' << sol.beta << ',' << sol.alpha
            << ',' << sol.alphaM << ',' << *sol.gain << ',' << sol.L << '\n';
    }
    return out.str();
}

EquilibriumSolution maj_solution_view(const MajGameSpec& spec, const MajSolution& sol) {
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);
    const Profile p = maj_profile(spec, sol);
    const auto av = compose_profile(p, ctx);

    Sensitivity lead;
    lead.at(Act::leader) = 1.0;
    const double rho = 1.0 - sol.D;
    Sensitivity major_aware;
    major_aware.at(Act::major) = 1.0;
    major_aware.at(Act::pop_mean) = -rho;
    major_aware.at(Act::own) = -rho;

    EquilibriumSolution view;
    view.n = spec.n;
    view.params["theta"] = sol.theta;
    view.params["thetaM"] = sol.thetaM;
    view.params["beta"] = sol.beta;
    view.params["alpha"] = sol.alpha;
    view.params["alphaM"] = sol.alphaM;
    view.params["L"] = sol.L;
    view.params["rprime"] = sol.rprime;
    view.params["D"] = sol.D;
    if (sol.gain) view.params["gain"] = *sol.gain;
    view.residuals["leader"] =
        stationarity_residual(costs.leader, av, lead, conditioning_for(Role::leader, ctx), ctx)
            .max_abs();
    view.residuals["major_aware"] =
        stationarity_residual(costs.leader, av, major_aware, {{Obs::major, 1}}, ctx).max_abs();
    view.residuals["minor"] = stationarity_residual(costs.minor, p, Role::minor, ctx).max_abs();
    if (sol.gain)
        view.residuals["major_incentive"] =
            stationarity_residual(costs.major, p, Role::major, ctx).max_abs();
    return view;
}

EquilibriumSolution maj_hat_solution_view(const MajGameSpec& spec, const MajHatSolution& sol) {
    const GameContext ctx = make_context(spec);
    const MajCosts costs = build_maj_costs(spec);
    const Profile p = maj_hat_profile(spec, sol);
    const auto av = compose_profile(p, ctx);

    Sensitivity lead;
    lead.at(Act::leader) = 1.0;
    Sensitivity major_team;
    major_team.at(Act::major) = 1.0;
    Sensitivity minor_team;
    minor_team.at(Act::own) = 1.0;
    minor_team.at(Act::pop_mean) = 1.0 / ctx.n;

    EquilibriumSolution view;
    view.n = spec.n;
    view.params["theta_hat"] = sol.theta_hat;
    view.params["thetaM_hat"] = sol.thetaM_hat;
    view.params["beta_hat"] = sol.beta_hat;
    view.params["alpha_hat"] = sol.alpha_hat;
    view.params["alphaM_hat"] = sol.alphaM_hat;
    view.residuals["leader"] =
        stationarity_residual(costs.leader, av, lead, conditioning_for(Role::leader, ctx), ctx)
            .max_abs();
    view.residuals["major_team"] =
        stationarity_residual(costs.leader, av, major_team, {{Obs::major, 1}}, ctx).max_abs();
    view.residuals["minor_team"] =
        stationarity_residual(costs.leader, av, minor_team, {{Obs::own, 1}, {Obs::major, 1}}, ctx)
            .max_abs();
    return view;
}

} // namespace stacklab
