#include "stacklab/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "stacklab/gaussian.hpp"

namespace stacklab::kernels {

uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t batch_key(uint64_t seed, uint64_t batch) {
    return mix64(seed ^ mix64(batch ^ 0x517cc1b727220a95ULL));
}

namespace {
inline double u01(uint64_t x) {
    // strictly inside (0,1) so log() is safe
    return double(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}
} // namespace

double normal_draw(uint64_t key, uint64_t sample, uint64_t source) {
    const uint64_t h = mix64(key ^ mix64(sample * 0x2545f4914f6cdd1dULL + source));
    const double u1 = u01(h);
    const double u2 = u01(mix64(h ^ 0xda942042e4dd58b5ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

McProgram compile_program(const QuadraticCostSpec& cost, const Profile& p, const GameContext& ctx,
                          bool per_follower) {
    check_profile(p, ctx);
    if (static_cast<int>(cost.terms.size()) > max_cost_terms)
        throw contract_violation("compile_program: too many cost terms");

    McProgram prog;
    prog.n = ctx.n;
    prog.shared_obs = ctx.shared_obs;
    prog.per_follower = per_follower;
    prog.others_std = ctx.n > 1 ? std::sqrt(1.0 / (ctx.n - 1)) : 0.0;

    prog.th_leader = p.leader.base.get(Obs::leader);
    prog.th_major = p.leader.base.get(Obs::major);
    prog.th_mean = p.leader.base.get(Obs::pop_mean);
    prog.gain = p.leader.gain;
    prog.monitor_major = p.leader.monitored == Monitored::major_action;
    prog.ref_major = p.leader.reference.get(Obs::major);
    prog.ref_mean = p.leader.reference.get(Obs::pop_mean);
    prog.beta_major = p.major.get(Obs::major);
    prog.a_own = p.minor.get(Obs::own);
    prog.a_major = p.minor.get(Obs::major);

    prog.n_terms = static_cast<int>(cost.terms.size());
    for (int t = 0; t < prog.n_terms; ++t) {
        prog.weight[t] = cost.terms[t].weight;
        for (int c = 0; c < n_act_channels; ++c) prog.combo[t][c] = cost.terms[t].combo[c];
    }
    return prog;
}

void fill_normals(const McProgram& prog, uint64_t key, int64_t first_sample, int count,
                  double* buffer) {
    const int rows = prog.source_rows();
    const bool reduced = !prog.per_follower && !prog.shared_obs;
    for (int r = 0; r < rows; ++r) {
        double* row = buffer + static_cast<size_t>(r) * count;
        const double scale = (reduced && r == 4) ? prog.others_std : 1.0;
        for (int j = 0; j < count; ++j)
            row[j] = scale * normal_draw(key, static_cast<uint64_t>(first_sample + j), r);
    }
}

void accumulate_scalar(const McProgram& prog, const double* buffer, int count, double lanes[4],
                       double lanes_sq[4]) {
    for (int s = 0; s < count; ++s) {
        const double c = mc_sample_cost(prog, buffer, count, s);
        lanes[s & 3] += c;
        lanes_sq[s & 3] += c * c;
    }
}

accumulate_fn select_backend() {
    const char* env = std::getenv("STACKLAB_KERNEL");
#if defined(__x86_64__)
    if (env) {
        if (std::string(env) == "avx2" && avx2_available()) return accumulate_avx2;
        return accumulate_scalar;
    }
    if (avx2_available()) return accumulate_avx2;
#else
    (void)env;
#endif
    return accumulate_scalar;
}

bool avx2_available() {
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

std::string backend_name() {
#if defined(__x86_64__)
    return select_backend() == accumulate_scalar ? "scalar" : "avx2";
#else
    return "scalar";
#endif
}

BatchMoments run_batch(const McProgram& prog, uint64_t key, int64_t samples, accumulate_fn fn) {
    constexpr int chunk = 1024;
    const int rows = prog.source_rows();
    std::vector<double> buffer(static_cast<size_t>(rows) * chunk);

    double lanes[4] = {0, 0, 0, 0};
    double lanes_sq[4] = {0, 0, 0, 0};
    for (int64_t first = 0; first < samples; first += chunk) {
        const int cnt = static_cast<int>(std::min<int64_t>(chunk, samples - first));
        fill_normals(prog, key, first, cnt, buffer.data());
        fn(prog, buffer.data(), cnt, lanes, lanes_sq);
    }
    BatchMoments m;
    m.sum = combine_lanes(lanes);
    m.sum_sq = combine_lanes(lanes_sq);
    return m;
}

} // namespace stacklab::kernels
