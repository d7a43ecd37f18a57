#include "stacklab/pn_solver.hpp"

#include <cmath>
#include <sstream>

namespace stacklab {

namespace {

constexpr double k_gain_denom_tol = 1e-12;

// Conditional coefficient of E[ui + u0 + omega0 + ubar | yi] at a symmetric
// profile; the follower stationarity denominator. Equals beta at the
// leader-optimal coefficients.
double follower_tracking_coeff(const PnSolution& s) {
    const double n = s.n;
    return 0.5 * (1.0 + s.alpha0) + (n + 1.0) / (2.0 * n) * s.alpha +
           (3.0 * n + 1.0) / (2.0 * n) * s.beta;
}

} // namespace

PnSolution pn_leader_optimal(const PnGameSpec& spec) {
    spec.validate();
    const double n = spec.n;
    PnSolution s;
    s.n = spec.n;
    s.alpha0 = -spec.q0 / ((spec.r0 + spec.q0) * (n + 2.0));
    s.beta = -(n * (1.0 + s.alpha0) * (spec.r0 + spec.q0) / (n + 1.0) -
               spec.q0 * n / (n + 2.0)) /
             spec.r0;
    s.alpha = -(spec.q0 / (spec.r0 + spec.q0)) * (s.beta + n / (n + 2.0));
    return s;
}

double pn_gain(const PnGameSpec& spec, const PnSolution& sol) {
    spec.validate();
    const double n = sol.n;
    const double denom = follower_tracking_coeff(sol);
    if (std::fabs(denom) < k_gain_denom_tol)
        throw degenerate_gain_error("pn_gain: follower stationarity denominator vanishes");
    // r*beta + q*denom*(1 + (1+Q)/n) = 0 solved for Q.
    return -(n * spec.r * sol.beta / (spec.q * denom) + n + 1.0);
}

PnSolution pn_solve(const PnGameSpec& spec) {
    PnSolution s = pn_leader_optimal(spec);
    s.gain = pn_gain(spec, s);
    s.energy = *s.gain * *s.gain;
    return s;
}

PnLimits pn_limits(const PnGameSpec& spec) {
    spec.validate();
    PnLimits l;
    l.alpha0_inf = 0.0;
    l.beta_inf = -((1.0 + l.alpha0_inf) * (spec.r0 + spec.q0) - spec.q0) / spec.r0;
    l.alpha_inf = -(spec.q0 / (spec.r0 + spec.q0)) * (l.beta_inf + 1.0);
    return l;
}

double pn_asymptotic_gain_ratio(const PnGameSpec& spec) {
    spec.validate();
    // At the leader-optimal coefficients the tracking coefficient collapses to
    // beta, so Q_N = -(n (r+q)/q + 1).
    return (spec.r + spec.q) / spec.q;
}

Profile pn_profile(const PnGameSpec& spec, const PnSolution& sol) {
    Profile p;
    p.minor = LinearPolicy::single(Obs::own, sol.beta);
    p.leader.base.set(Obs::leader, sol.alpha0);
    p.leader.base.set(Obs::pop_mean, sol.alpha);
    p.leader.monitored = Monitored::pop_mean_action;
    p.leader.reference = LinearPolicy::single(Obs::pop_mean, sol.beta);
    p.leader.gain = sol.gain.value_or(0.0);
    (void)spec;
    return p;
}

PnSolution pn_leader_optimal_assembled(const PnGameSpec& spec, double* condition_out) {
    spec.validate();
    const GameContext ctx = make_context(spec);
    const PnCosts costs = build_pn_costs(spec);

    Profile base;
    base.leader.monitored = Monitored::pop_mean_action;

    Sensitivity lead;
    lead.at(Act::leader) = 1.0;
    Sensitivity follower_team;
    follower_team.at(Act::own) = 1.0;
    follower_team.at(Act::pop_mean) = 1.0 / ctx.n;

    std::vector<StationarityEq> eqs;
    eqs.push_back({&costs.leader, lead, {{Obs::leader, 1}, {Obs::own, ctx.n}}});
    eqs.push_back({&costs.leader, follower_team, {{Obs::own, 1}}});

    auto apply = [](Profile& p, const double* x) {
        p.leader.base.set(Obs::leader, x[0]);
        p.leader.base.set(Obs::pop_mean, x[1]);
        p.minor.set(Obs::own, x[2]);
    };
    const auto x = solve_linear_policies(ctx, eqs, base, apply, 3, condition_out);

    PnSolution s;
    s.n = spec.n;
    s.alpha0 = x[0];
    s.alpha = x[1];
    s.beta = x[2];
    return s;
}

double pn_gain_assembled(const PnGameSpec& spec, const PnSolution& sol) {
    const GameContext ctx = make_context(spec);
    const PnCosts costs = build_pn_costs(spec);
    Profile base = pn_profile(spec, sol);
    base.leader.gain = 0.0;

    std::vector<StationarityEq> eqs;
    StationarityEq eq;
    eq.cost = &costs.follower;
    eq.info = {{Obs::own, 1}};
    eq.deviation_sens = true;
    eq.role = Role::minor;
    eqs.push_back(eq);

    auto apply = [](Profile& p, const double* x) { p.leader.gain = x[0]; };
    return solve_linear_policies(ctx, eqs, base, apply, 1)[0];
}

DivergenceReport divergence_fit(const std::vector<GainGridPoint>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("divergence fit needs at least 3 grid points");
    for (size_t i = 1; i < points.size(); ++i)
        if (points[i].n <= points[i - 1].n)
            throw std::invalid_argument("divergence grid must be strictly increasing");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(points.size());
    for (const auto& p : points) {
        const double x = std::log(static_cast<double>(p.n));
        const double y = std::log(std::max(std::fabs(p.gain), 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    DivergenceReport rep;
    rep.points = points;
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.intercept = (sy - rep.slope * sx) / m;
    rep.divergent = rep.slope >= 0.9;
    rep.asymptotic_ratio = std::fabs(points.back().gain) / points.back().n;
    return rep;
}

DivergenceReport pn_divergence_report(const PnGameSpec& spec, const std::vector<int>& n_grid) {
    std::vector<GainGridPoint> pts;
    pts.reserve(n_grid.size());
    for (int n : n_grid) {
        PnGameSpec s = spec;
        s.n = n;
        const PnSolution sol = pn_solve(s);
        pts.push_back({n, *sol.gain, sol.energy});
    }
    return divergence_fit(pts);
}

std::string pn_sweep_csv(const PnGameSpec& spec, const std::vector<int>& n_grid) {
    std::ostringstream out;
    out << "n,alpha0,alpha,beta,gain,energy\n";
    out.precision(17);
    for (int n : n_grid) {
        PnGameSpec s = spec;
        s.n = n;
        const PnSolution sol = pn_solve(s);
        out << n << ',' << sol.alpha0 << ',' << sol.alpha << ',' << sol.beta << ',' << *sol.gain
            << ',' << sol.energy << '\n';
    }
    return out.str();
}

EquilibriumSolution pn_solution_view(const PnGameSpec& spec, const PnSolution& sol) {
    const GameContext ctx = make_context(spec);
    const PnCosts costs = build_pn_costs(spec);
    const Profile p = pn_profile(spec, sol);
    const auto av = compose_profile(p, ctx);

    Sensitivity lead;
    lead.at(Act::leader) = 1.0;
    Sensitivity follower_team;
    follower_team.at(Act::own) = 1.0;
    follower_team.at(Act::pop_mean) = 1.0 / ctx.n;

    EquilibriumSolution view;
    view.n = spec.n;
    view.params["alpha0"] = sol.alpha0;
    view.params["alpha"] = sol.alpha;
    view.params["beta"] = sol.beta;
    if (sol.gain) {
        view.params["gain"] = *sol.gain;
        view.params["energy"] = sol.energy;
    }
    view.residuals["leader"] =
        stationarity_residual(costs.leader, av, lead, conditioning_for(Role::leader, ctx), ctx)
            .max_abs();
    view.residuals["follower_team"] =
        stationarity_residual(costs.leader, av, follower_team, {{Obs::own, 1}}, ctx).max_abs();
    view.residuals["follower"] =
        stationarity_residual(costs.follower, p, Role::minor, ctx).max_abs();
    return view;
}

} // namespace stacklab
