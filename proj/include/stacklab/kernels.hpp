#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stacklab/core_model.hpp"

namespace stacklab::kernels {

// ---------------------------------------------------------------------------
// Deterministic counter-based sampling.
//
// Every normal draw is a pure function of (batch key, sample index, source
// row), so the estimate depends only on (seed, samples, batches) and neither
// chunking nor the backend changes the stream.
// ---------------------------------------------------------------------------

uint64_t mix64(uint64_t z);
uint64_t batch_key(uint64_t seed, uint64_t batch);
double normal_draw(uint64_t key, uint64_t sample, uint64_t source);

// ---------------------------------------------------------------------------
// Compiled sampling program for one game profile.
//
// Source rows: 0 omega0, 1 leader noise, 2 major/shared noise, then either the
// n individual follower noises (per-follower mode) or two reduced rows (own
// noise, scaled mean-of-others noise).
// ---------------------------------------------------------------------------

constexpr int max_cost_terms = 8;

struct McProgram {
    int n = 1;
    bool shared_obs = false;
    bool per_follower = true;
    double others_std = 0.0;  // reduced mode: std of the mean-of-others row

    double th_leader = 0.0;   // leader base on y0
    double th_major = 0.0;    // leader base on yM
    double th_mean = 0.0;     // leader base on the mean follower observation
    double gain = 0.0;
    bool monitor_major = false;
    double ref_major = 0.0;   // reference on yM
    double ref_mean = 0.0;    // reference on the mean observation
    double beta_major = 0.0;  // major on yM
    double a_own = 0.0;       // minor on yi
    double a_major = 0.0;     // minor on yM

    int n_terms = 0;
    double weight[max_cost_terms] = {};
    double combo[max_cost_terms][n_act_channels] = {};

    int source_rows() const {
        if (shared_obs) return 3;  // the shared signal reuses the major row
        return 3 + (per_follower ? n : 2);
    }
};

McProgram compile_program(const QuadraticCostSpec& cost, const Profile& p, const GameContext& ctx,
                          bool per_follower);

// Fill one chunk of normals: buffer is row-major [source_rows][count], sample
// indices first_sample .. first_sample+count-1 within the batch.
void fill_normals(const McProgram& prog, uint64_t key, int64_t first_sample, int count,
                  double* buffer);

// Accumulate per-sample costs (and squared costs) into four interleaved lanes;
// lane = local sample index mod 4. The scalar kernel is the reference
// semantics; variants must match it bit for bit.
using accumulate_fn = void (*)(const McProgram&, const double* buffer, int count,
                               double lanes[4], double lanes_sq[4]);

void accumulate_scalar(const McProgram& prog, const double* buffer, int count, double lanes[4],
                       double lanes_sq[4]);
#if defined(__x86_64__)
void accumulate_avx2(const McProgram& prog, const double* buffer, int count, double lanes[4],
                     double lanes_sq[4]);
#endif

// Runtime-selected backend. STACKLAB_KERNEL=scalar|avx2 overrides detection.
accumulate_fn select_backend();
std::string backend_name();
bool avx2_available();

// Combine lanes in the fixed order both kernels share.
inline double combine_lanes(const double lanes[4]) {
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

// Reference per-sample evaluation; the vector kernels replicate these exact
// operations lane-wise and reuse this function for their tails.
inline double mc_sample_cost(const McProgram& prog, const double* z, int count, int s) {
    const double dn = static_cast<double>(prog.n);
    const size_t stride = static_cast<size_t>(count);

    const double om = z[0 * stride + s];
    const double y0 = om + z[1 * stride + s];
    const double yM = om + z[2 * stride + s];

    double ymean, u1, umean;
    if (prog.shared_obs) {
        ymean = yM;
        u1 = prog.a_own * yM + prog.a_major * yM;
        umean = u1;
    } else if (prog.per_follower) {
        double sw = 0.0;
        for (int p = 0; p < prog.n; ++p) sw += z[(3 + p) * stride + s];
        ymean = om + sw / dn;
        u1 = prog.a_own * (om + z[3 * stride + s]) + prog.a_major * yM;
        umean = prog.a_own * ymean + prog.a_major * yM;
    } else {
        const double wo = z[3 * stride + s];
        const double woth = z[4 * stride + s];
        ymean = om + (wo + (dn - 1.0) * woth) / dn;
        u1 = prog.a_own * (om + wo) + prog.a_major * yM;
        umean = prog.a_own * ymean + prog.a_major * yM;
    }

    const double uM = prog.beta_major * yM;
    const double base = prog.th_leader * y0 + prog.th_major * yM + prog.th_mean * ymean;
    const double mon = prog.monitor_major ? uM : umean;
    const double ref = prog.ref_major * yM + prog.ref_mean * ymean;
    const double u0 = base + prog.gain * (mon - ref);

    const double vals[n_act_channels] = {u0, uM, u1, umean, om};
    double c = 0.0;
    for (int t = 0; t < prog.n_terms; ++t) {
        double lin = 0.0;
        for (int k = 0; k < n_act_channels; ++k)
            if (prog.combo[t][k] != 0.0) lin += prog.combo[t][k] * vals[k];
        c += prog.weight[t] * (lin * lin);
    }
    return c;
}

struct BatchMoments {
    double sum = 0.0;
    double sum_sq = 0.0;
};

// Run one batch of `samples` draws with the given backend.
BatchMoments run_batch(const McProgram& prog, uint64_t key, int64_t samples, accumulate_fn fn);

} // namespace stacklab::kernels
