#include "stacklab/gaussian.hpp"

#include <cmath>
#include <sstream>

#include "stacklab/linsolve.hpp"

namespace stacklab {

double source_variance(int k, const GameContext& ctx) {
    if (k == src_w_others) return ctx.n > 1 ? 1.0 / (ctx.n - 1) : 0.0;
    return 1.0;
}

double covariance(const SourceVec& a, const SourceVec& b, const GameContext& ctx) {
    double s = 0.0;
    for (int k = 0; k < n_sources; ++k) s += a.c[k] * b.c[k] * source_variance(k, ctx);
    return s;
}

SourceVec obs_vector(Obs o, const GameContext& ctx) {
    SourceVec v;
    v.c[src_omega0] = 1.0;
    switch (o) {
        case Obs::leader:
            v.c[src_w_leader] = 1.0;
            break;
        case Obs::major:
            v.c[src_w_major] = 1.0;
            break;
        case Obs::own:
            if (ctx.shared_obs)
                v.c[src_w_major] = 1.0;
            else
                v.c[src_w_own] = 1.0;
            break;
        case Obs::pop_mean:
            if (ctx.shared_obs) {
                v.c[src_w_major] = 1.0;
            } else {
                v.c[src_w_own] = 1.0 / ctx.n;
                v.c[src_w_others] = double(ctx.n - 1) / ctx.n;
            }
            break;
    }
    return v;
}

SourceVec follower_family_sum(const GameContext& ctx) {
    SourceVec v;
    if (ctx.shared_obs) {
        v.c[src_omega0] = ctx.n;
        v.c[src_w_major] = ctx.n;
    } else {
        v.c[src_omega0] = ctx.n;
        v.c[src_w_own] = 1.0;
        v.c[src_w_others] = ctx.n - 1;
    }
    return v;
}

ActionVectors compose_profile(const Profile& p, const GameContext& ctx) {
    check_profile(p, ctx);
    ActionVectors av;

    av.at(Act::omega0).c[src_omega0] = 1.0;

    auto apply_linear = [&](const LinearPolicy& pol, Obs own_obs) {
        SourceVec v;
        for (int c = 0; c < n_obs_channels; ++c) {
            if (pol.coeff[c] == 0.0) continue;
            Obs o = static_cast<Obs>(c);
            // The symmetric population policy evaluated on the mean observation.
            if (own_obs == Obs::pop_mean && o == Obs::own) o = Obs::pop_mean;
            v += pol.coeff[c] * obs_vector(o, ctx);
        }
        return v;
    };

    av.at(Act::own) = apply_linear(p.minor, Obs::own);
    av.at(Act::pop_mean) = apply_linear(p.minor, Obs::pop_mean);
    if (ctx.has_major) av.at(Act::major) = apply_linear(p.major, Obs::major);

    SourceVec leader = apply_linear(p.leader.base, Obs::leader);
    if (p.leader.gain != 0.0) {
        const SourceVec monitored = p.leader.monitored == Monitored::major_action
                                        ? av.at(Act::major)
                                        : av.at(Act::pop_mean);
        const SourceVec reference = apply_linear(p.leader.reference, Obs::leader);
        leader += p.leader.gain * (monitored - reference);
    }
    av.at(Act::leader) = leader;
    return av;
}

double expected_cost(const QuadraticCostSpec& cost, const ActionVectors& av, const GameContext& ctx) {
    double total = 0.0;
    for (const auto& t : cost.terms) {
        SourceVec lin;
        for (int c = 0; c < n_act_channels; ++c)
            if (t.combo[c] != 0.0) lin += t.combo[c] * av.v[c];
        total += t.weight * covariance(lin, lin, ctx);
    }
    return total;
}

double expected_cost(const QuadraticCostSpec& cost, const Profile& p, const GameContext& ctx) {
    return expected_cost(cost, compose_profile(p, ctx), ctx);
}

double conditional_mean_coeff(int k) {
    if (k < 1) throw std::invalid_argument("conditional_mean_coeff: k must be >= 1");
    return 1.0 / (k + 1);
}

Sensitivity deviation_sensitivity(Role role, const Profile& p, const GameContext& ctx) {
    Sensitivity s;
    switch (role) {
        case Role::leader:
            s.at(Act::leader) = 1.0;
            break;
        case Role::major:
            if (!ctx.has_major) throw contract_violation("no major follower in this game");
            s.at(Act::major) = 1.0;
            if (p.leader.gain != 0.0 && p.leader.monitored == Monitored::major_action)
                s.at(Act::leader) = p.leader.gain;
            break;
        case Role::minor:
            s.at(Act::own) = 1.0;
            s.at(Act::pop_mean) = 1.0 / ctx.n;
            if (p.leader.gain != 0.0 && p.leader.monitored == Monitored::pop_mean_action)
                s.at(Act::leader) = p.leader.gain / ctx.n;
            break;
    }
    return s;
}

std::vector<CondChannel> conditioning_for(Role role, const GameContext& ctx) {
    switch (role) {
        case Role::leader:
            if (ctx.has_major) return {{Obs::leader, 1}, {Obs::major, 1}};
            return {{Obs::leader, 1}, {Obs::own, ctx.n}};
        case Role::major:
            return {{Obs::major, 1}};
        case Role::minor:
            if (ctx.has_major) return {{Obs::own, 1}, {Obs::major, 1}};
            return {{Obs::own, 1}};
    }
    return {};
}

double ResidualForm::max_abs() const {
    double m = 0.0;
    for (double v : coeff) m = std::max(m, std::fabs(v));
    return m;
}

namespace {

struct CondFamily {
    Obs obs;
    SourceVec rep;
    SourceVec sum;
};

// Representative + member-sum per conditioning family, with exact duplicates
// removed (the shared-observation variant collapses own and major channels).
std::vector<CondFamily> build_families(const std::vector<CondChannel>& info, const GameContext& ctx) {
    std::vector<CondFamily> fams;
    for (const auto& ch : info) {
        CondFamily f;
        f.obs = ch.obs;
        f.rep = obs_vector(ch.obs, ctx);
        if (ch.mult == 1) {
            f.sum = f.rep;
        } else if (ch.obs == Obs::own && ch.mult == ctx.n) {
            f.sum = follower_family_sum(ctx);
        } else {
            throw contract_violation("conditioning multiplicity must be 1 or the population size");
        }
        bool dup = false;
        for (const auto& e : fams) {
            double diff = 0.0;
            for (int k = 0; k < n_sources; ++k) diff += std::fabs(e.rep.c[k] - f.rep.c[k]);
            if (diff == 0.0) {
                dup = true;
                break;
            }
        }
        if (!dup) fams.push_back(f);
    }
    return fams;
}

} // namespace

ResidualForm stationarity_residual(const QuadraticCostSpec& cost, const ActionVectors& av,
                                   const Sensitivity& sens, const std::vector<CondChannel>& info,
                                   const GameContext& ctx) {
    // Gradient direction: d(cost)/d(action) = sum_t 2 w_t d_t (v_t . z).
    SourceVec grad;
    for (const auto& t : cost.terms) {
        double d = 0.0;
        for (int c = 0; c < n_act_channels; ++c) d += t.combo[c] * sens.d[c];
        if (d == 0.0) continue;
        SourceVec lin;
        for (int c = 0; c < n_act_channels; ++c)
            if (t.combo[c] != 0.0) lin += t.combo[c] * av.v[c];
        grad += (2.0 * t.weight * d) * lin;
    }

    const auto fams = build_families(info, ctx);
    const int dim = static_cast<int>(fams.size());

    // Project grad onto the span of the conditioning observations:
    // for each family a, Cov(rep_a, grad) = sum_b coeff_b Cov(rep_a, sum_b).
    std::vector<double> gram(dim * dim), rhs(dim);
    for (int a = 0; a < dim; ++a) {
        rhs[a] = covariance(fams[a].rep, grad, ctx);
        for (int b = 0; b < dim; ++b) gram[a * dim + b] = covariance(fams[a].rep, fams[b].sum, ctx);
    }
    auto solved = lu_solve(gram, rhs, dim);
    if (solved.singular)
        throw degenerate_game_error("stationarity_residual: degenerate conditioning set");

    ResidualForm out;
    for (int a = 0; a < dim; ++a) {
        out.channels.push_back(fams[a].obs);
        out.coeff.push_back(solved.x[a]);
    }
    return out;
}

ResidualForm stationarity_residual(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                   const GameContext& ctx) {
    const auto av = compose_profile(p, ctx);
    const Sensitivity sens = deviation_sensitivity(role, p, ctx);
    double curvature = 0.0;
    for (const auto& t : cost.terms) {
        double d = 0.0;
        for (int c = 0; c < n_act_channels; ++c) d += t.combo[c] * sens.d[c];
        curvature += 2.0 * t.weight * d * d;
    }
    if (curvature <= 0.0)
        throw degenerate_game_error("stationarity_residual: zero own-action curvature");
    return stationarity_residual(cost, av, sens, conditioning_for(role, ctx), ctx);
}

QuadObjective deviation_objective(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                  const std::vector<Obs>& channels, const GameContext& ctx) {
    const auto av = compose_profile(p, ctx);
    const auto sens = deviation_sensitivity(role, p, ctx);

    // Changing the coefficient on channel o shifts the player's action by
    // delta * y_o, which moves every cost channel through sens.
    std::vector<SourceVec> dev;
    dev.reserve(channels.size());
    for (Obs o : channels) dev.push_back(obs_vector(o, ctx));

    QuadObjective q;
    q.dim = static_cast<int>(channels.size());
    q.h.assign(q.dim * q.dim, 0.0);
    q.g.assign(q.dim, 0.0);
    q.j0 = expected_cost(cost, av, ctx);

    for (const auto& t : cost.terms) {
        double d = 0.0;
        for (int c = 0; c < n_act_channels; ++c) d += t.combo[c] * sens.d[c];
        SourceVec lin;
        for (int c = 0; c < n_act_channels; ++c)
            if (t.combo[c] != 0.0) lin += t.combo[c] * av.v[c];
        for (int j = 0; j < q.dim; ++j) {
            if (d == 0.0) continue;
            q.g[j] += 2.0 * t.weight * d * covariance(lin, dev[j], ctx);
            for (int k = 0; k < q.dim; ++k)
                q.h[j * q.dim + k] += 2.0 * t.weight * d * d * covariance(dev[j], dev[k], ctx);
        }
    }
    return q;
}

std::vector<double> policy_gradient(const QuadraticCostSpec& cost, const Profile& p, Role role,
                                    const std::vector<Obs>& channels, const GameContext& ctx) {
    const auto av = compose_profile(p, ctx);
    const bool pop_gain =
        p.leader.gain != 0.0 && p.leader.monitored == Monitored::pop_mean_action;
    const bool major_gain =
        p.leader.gain != 0.0 && p.leader.monitored == Monitored::major_action;

    std::vector<double> g(channels.size(), 0.0);
    for (size_t j = 0; j < channels.size(); ++j) {
        const Obs o = channels[j];
        // Derivative of each realized cost channel in the coefficient.
        std::array<SourceVec, n_act_channels> dch{};
        switch (role) {
            case Role::leader:
                dch[static_cast<int>(Act::leader)] = obs_vector(o, ctx);
                break;
            case Role::major: {
                const SourceVec ym = obs_vector(o, ctx);
                dch[static_cast<int>(Act::major)] = ym;
                if (major_gain) dch[static_cast<int>(Act::leader)] = p.leader.gain * ym;
                break;
            }
            case Role::minor: {
                dch[static_cast<int>(Act::own)] = obs_vector(o, ctx);
                const SourceVec pop = obs_vector(o == Obs::own ? Obs::pop_mean : o, ctx);
                dch[static_cast<int>(Act::pop_mean)] = pop;
                if (pop_gain) dch[static_cast<int>(Act::leader)] = p.leader.gain * pop;
                break;
            }
        }
        for (const auto& t : cost.terms) {
            SourceVec lin, dlin;
            for (int c = 0; c < n_act_channels; ++c) {
                if (t.combo[c] == 0.0) continue;
                lin += t.combo[c] * av.v[c];
                dlin += t.combo[c] * dch[c];
            }
            g[j] += 2.0 * t.weight * covariance(lin, dlin, ctx);
        }
    }
    return g;
}

std::vector<Obs> distinct_channels(Role role, const GameContext& ctx) {
    std::vector<Obs> out;
    std::vector<SourceVec> seen;
    for (Obs o : information_set(role, ctx)) {
        const SourceVec v = obs_vector(o, ctx);
        bool dup = false;
        for (const auto& e : seen) {
            double diff = 0.0;
            for (int k = 0; k < n_sources; ++k) diff += std::fabs(e.c[k] - v.c[k]);
            if (diff == 0.0) {
                dup = true;
                break;
            }
        }
        if (!dup) {
            out.push_back(o);
            seen.push_back(v);
        }
    }
    return out;
}

std::vector<double> solve_linear_policies(
    const GameContext& ctx, const std::vector<StationarityEq>& eqs, const Profile& base,
    const std::function<void(Profile&, const double*)>& apply, int k, double* condition_out) {
    auto residual_rows = [&](const std::vector<double>& x) {
        Profile p = base;
        apply(p, x.data());
        const auto av = compose_profile(p, ctx);
        std::vector<double> rows;
        for (const auto& eq : eqs) {
            const Sensitivity sens =
                eq.deviation_sens ? deviation_sensitivity(eq.role, p, ctx) : eq.sens;
            const auto rf = stationarity_residual(*eq.cost, av, sens, eq.info, ctx);
            rows.insert(rows.end(), rf.coeff.begin(), rf.coeff.end());
        }
        return rows;
    };

    std::vector<double> x0(k, 0.0);
    const auto b = residual_rows(x0);
    const int rows = static_cast<int>(b.size());
    if (rows != k) {
        std::ostringstream msg;
        msg << "solve_linear_policies: system is not square (" << rows << " rows, " << k
            << " unknowns)";
        throw degenerate_game_error(msg.str());
    }

    std::vector<double> a(k * k);
    for (int j = 0; j < k; ++j) {
        std::vector<double> xj(k, 0.0);
        xj[j] = 1.0;
        const auto col = residual_rows(xj);
        for (int i = 0; i < k; ++i) a[i * k + j] = col[i] - b[i];
    }
    std::vector<double> neg_b(k);
    for (int i = 0; i < k; ++i) neg_b[i] = -b[i];

    auto solved = lu_solve(a, neg_b, k);
    if (solved.singular) {
        std::ostringstream msg;
        msg << "solve_linear_policies: singular stationarity system at pivot " << solved.pivot;
        throw degenerate_game_error(msg.str());
    }
    if (condition_out) *condition_out = solved.condition;
    return solved.x;
}

} // namespace stacklab
