#include "stacklab/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace stacklab {

const char* obs_name(Obs o) {
    switch (o) {
        case Obs::leader: return "y0";
        case Obs::major: return "yM";
        case Obs::own: return "yi";
        case Obs::pop_mean: return "ybar";
    }
    return "?";
}

const char* act_name(Act a) {
    switch (a) {
        case Act::leader: return "u0";
        case Act::major: return "uM";
        case Act::own: return "ui";
        case Act::pop_mean: return "ubar";
        case Act::omega0: return "omega0";
    }
    return "?";
}

void PnGameSpec::validate() const {
    if (!(r0 > 0.0) || !(q0 > 0.0) || !(r > 0.0) || !(q > 0.0))
        throw std::invalid_argument("PnGameSpec: r0, q0, r, q must be > 0");
    if (n < 1) throw std::invalid_argument("PnGameSpec: n must be >= 1");
}

void MajGameSpec::validate() const {
    if (!(r0 > 0.0) || !(rM > 0.0) || !(r > 0.0) || !(qM > 0.0))
        throw std::invalid_argument("MajGameSpec: r0, rM, r, qM must be > 0");
    if (q0 < 0.0 || q < 0.0 || qhat0 < 0.0)
        throw std::invalid_argument("MajGameSpec: q0, q, qhat0 must be >= 0");
    if (n < 1) throw std::invalid_argument("MajGameSpec: n must be >= 1");
}

void IncentivePolicy::validate() const {
    if (monitored == Monitored::major_action) {
        for (int c = 0; c < n_obs_channels; ++c) {
            if (c != static_cast<int>(Obs::major) && reference.coeff[c] != 0.0)
                throw contract_violation("incentive reference on the major action may only use yM");
        }
    }
    if (reference.get(Obs::own) != 0.0)
        throw contract_violation("incentive reference may not use a follower's private signal");
}

GameContext make_context(const PnGameSpec& s) {
    return GameContext{s.n, /*has_major=*/false, /*shared_obs=*/false};
}

GameContext make_context(const MajGameSpec& s) {
    return GameContext{s.n, /*has_major=*/true, s.shared_obs};
}

std::vector<Obs> information_set(Role role, const GameContext& ctx) {
    switch (role) {
        case Role::leader:
            if (ctx.has_major) return {Obs::leader, Obs::major};
            return {Obs::leader, Obs::pop_mean};
        case Role::major:
            return {Obs::major};
        case Role::minor:
            if (ctx.has_major) return {Obs::own, Obs::major};
            return {Obs::own};
    }
    return {};
}

void check_information_set(const LinearPolicy& p, Role role, const GameContext& ctx) {
    const auto allowed = information_set(role, ctx);
    for (int c = 0; c < n_obs_channels; ++c) {
        if (p.coeff[c] == 0.0) continue;
        const Obs o = static_cast<Obs>(c);
        if (std::find(allowed.begin(), allowed.end(), o) == allowed.end()) {
            std::ostringstream msg;
            msg << "policy coefficient on " << obs_name(o) << " is outside the "
                << (role == Role::leader ? "leader" : role == Role::major ? "major" : "minor")
                << " information set";
            throw contract_violation(msg.str());
        }
    }
}

void check_profile(const Profile& p, const GameContext& ctx) {
    p.leader.validate();
    check_information_set(p.leader.base, Role::leader, ctx);
    check_information_set(p.minor, Role::minor, ctx);
    if (ctx.has_major) check_information_set(p.major, Role::major, ctx);
}

double QuadraticCostSpec::evaluate(const std::array<double, n_act_channels>& values) const {
    double total = 0.0;
    for (const auto& t : terms) {
        double lin = 0.0;
        for (int c = 0; c < n_act_channels; ++c) lin += t.combo[c] * values[c];
        total += t.weight * lin * lin;
    }
    return total;
}

namespace {

CostTerm term(double weight, std::initializer_list<std::pair<Act, double>> entries) {
    CostTerm t;
    t.weight = weight;
    for (auto& [act, v] : entries) t.at(act) = v;
    return t;
}

void push_term(QuadraticCostSpec& c, const CostTerm& t) {
    if (t.weight != 0.0) c.terms.push_back(t);
}

} // namespace

PnCosts build_pn_costs(const PnGameSpec& spec) {
    spec.validate();
    PnCosts out;
    push_term(out.leader, term(spec.r0, {{Act::leader, 1.0}}));
    push_term(out.leader, term(spec.q0, {{Act::leader, 1.0}, {Act::omega0, 1.0}, {Act::pop_mean, 1.0}}));
    push_term(out.follower, term(spec.r, {{Act::own, 1.0}}));
    push_term(out.follower,
              term(spec.q, {{Act::own, 1.0}, {Act::leader, 1.0}, {Act::omega0, 1.0}, {Act::pop_mean, 1.0}}));
    return out;
}

MajCosts build_maj_costs(const MajGameSpec& spec) {
    spec.validate();
    MajCosts out;
    if (spec.shared_obs) {
        // zero-loss variant
        push_term(out.leader, term(spec.r0, {{Act::leader, 1.0}}));
        push_term(out.leader, term(spec.q0, {{Act::leader, 1.0},
                                             {Act::major, 1.0 / spec.n},
                                             {Act::pop_mean, 1.0},
                                             {Act::omega0, 1.0}}));
        push_term(out.minor, term(1.0, {{Act::own, 1.0}, {Act::pop_mean, -1.0}}));
        push_term(out.minor, term(1.0, {{Act::own, 1.0}, {Act::major, -1.0}}));
    } else {
        push_term(out.leader, term(spec.r0, {{Act::leader, 1.0}}));
        push_term(out.leader, term(spec.q0, {{Act::leader, 1.0}, {Act::major, 1.0},
                                             {Act::pop_mean, 1.0}, {Act::omega0, 1.0}}));
        push_term(out.leader, term(spec.qhat0, {{Act::leader, 1.0}, {Act::major, 1.0}}));
        push_term(out.minor, term(spec.r, {{Act::own, 1.0}}));
        push_term(out.minor, term(spec.q, {{Act::own, 1.0}, {Act::major, 1.0},
                                           {Act::pop_mean, 1.0}, {Act::omega0, 1.0}}));
    }
    push_term(out.major, term(spec.rM, {{Act::major, 1.0}}));
    push_term(out.major, term(spec.qM, {{Act::leader, 1.0}, {Act::major, 1.0},
                                        {Act::pop_mean, 1.0}, {Act::omega0, 1.0}}));
    return out;
}

// --- JSON -------------------------------------------------------------------

std::string to_json(const PnGameSpec& s) {
    nlohmann::ordered_json j;
    j["r0"] = s.r0;
    j["q0"] = s.q0;
    j["r"] = s.r;
    j["q"] = s.q;
    j["n"] = s.n;
    return j.dump();
}

std::string to_json(const MajGameSpec& s) {
    nlohmann::ordered_json j;
    j["r0"] = s.r0;
    j["q0"] = s.q0;
    j["qhat0"] = s.qhat0;
    j["r"] = s.r;
    j["q"] = s.q;
    j["rM"] = s.rM;
    j["qM"] = s.qM;
    j["n"] = s.n;
    if (s.shared_obs) j["shared_obs"] = true;
    return j.dump();
}

namespace {

nlohmann::json spec_node(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    if (j.contains("spec")) return j["spec"];
    return j;
}

} // namespace

PnGameSpec pn_spec_from_json(const std::string& text) {
    const auto j = spec_node(text);
    PnGameSpec s;
    s.r0 = j.at("r0").get<double>();
    s.q0 = j.at("q0").get<double>();
    s.r = j.at("r").get<double>();
    s.q = j.at("q").get<double>();
    if (j.contains("n")) s.n = j.at("n").get<int>();
    s.validate();
    return s;
}

MajGameSpec maj_spec_from_json(const std::string& text) {
    const auto j = spec_node(text);
    MajGameSpec s;
    s.r0 = j.at("r0").get<double>();
    s.q0 = j.value("q0", 0.0);
    s.qhat0 = j.value("qhat0", 0.0);
    s.r = j.at("r").get<double>();
    s.q = j.value("q", 0.0);
    s.rM = j.at("rM").get<double>();
    s.qM = j.at("qM").get<double>();
    if (j.contains("n")) s.n = j.at("n").get<int>();
    s.shared_obs = j.value("shared_obs", false);
    s.validate();
    return s;
}

} // namespace stacklab
