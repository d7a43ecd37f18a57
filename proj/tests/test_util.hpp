#pragma once

#include <cstdint>

#include "stacklab/core_model.hpp"
#include "stacklab/kernels.hpp"

namespace stacklab::testutil {

// Deterministic generator for property tests.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state = kernels::mix64(state);
        return state;
    }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (double(next() >> 11) * 0x1.0p-53);
    }
    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
    }
};

inline PnGameSpec random_pn_spec(Rng& rng, int n) {
    PnGameSpec s;
    s.r0 = rng.uniform(0.2, 3.0);
    s.q0 = rng.uniform(0.2, 3.0);
    s.r = rng.uniform(0.2, 3.0);
    s.q = rng.uniform(0.2, 3.0);
    s.n = n;
    return s;
}

inline MajGameSpec random_maj_spec(Rng& rng, int n, bool strict_tracking = true) {
    MajGameSpec s;
    s.r0 = rng.uniform(0.2, 3.0);
    s.rM = rng.uniform(0.2, 3.0);
    s.r = rng.uniform(0.2, 3.0);
    s.qM = rng.uniform(0.2, 3.0);
    s.q0 = strict_tracking ? rng.uniform(0.2, 3.0) : rng.uniform(0.0, 3.0);
    s.qhat0 = strict_tracking ? rng.uniform(0.2, 3.0) : rng.uniform(0.0, 3.0);
    s.q = strict_tracking ? rng.uniform(0.2, 3.0) : rng.uniform(0.0, 3.0);
    s.n = n;
    return s;
}

inline Profile random_profile(Rng& rng, const GameContext& ctx, bool with_incentive = false) {
    Profile p;
    for (Obs o : information_set(Role::leader, ctx))
        p.leader.base.set(o, rng.uniform(-1.0, 1.0));
    for (Obs o : information_set(Role::minor, ctx)) p.minor.set(o, rng.uniform(-1.0, 1.0));
    if (ctx.has_major) p.major.set(Obs::major, rng.uniform(-1.0, 1.0));
    if (with_incentive) {
        p.leader.gain = rng.uniform(-1.0, 1.0);
        if (ctx.has_major) {
            p.leader.monitored = Monitored::major_action;
            p.leader.reference = LinearPolicy::single(Obs::major, rng.uniform(-1.0, 1.0));
        } else {
            p.leader.monitored = Monitored::pop_mean_action;
            p.leader.reference = LinearPolicy::single(Obs::pop_mean, rng.uniform(-1.0, 1.0));
        }
    }
    return p;
}

} // namespace stacklab::testutil
