#if defined(__x86_64__)

#include <immintrin.h>

#include "stacklab/kernels.hpp"

namespace stacklab::kernels {

// Four samples per iteration, one lane per sample. Arithmetic mirrors
// mc_sample_cost operation for operation (mul/add only, no FMA) so lane sums
// are bit-identical to the scalar kernel.
void accumulate_avx2(const McProgram& prog, const double* buffer, int count, double lanes[4],
                     double lanes_sq[4]) {
    const size_t stride = static_cast<size_t>(count);
    const __m256d dn = _mm256_set1_pd(static_cast<double>(prog.n));
    const __m256d a_own = _mm256_set1_pd(prog.a_own);
    const __m256d a_major = _mm256_set1_pd(prog.a_major);
    const __m256d beta_major = _mm256_set1_pd(prog.beta_major);
    const __m256d th_leader = _mm256_set1_pd(prog.th_leader);
    const __m256d th_major = _mm256_set1_pd(prog.th_major);
    const __m256d th_mean = _mm256_set1_pd(prog.th_mean);
    const __m256d ref_major = _mm256_set1_pd(prog.ref_major);
    const __m256d ref_mean = _mm256_set1_pd(prog.ref_mean);
    const __m256d gain = _mm256_set1_pd(prog.gain);
    const __m256d one = _mm256_set1_pd(1.0);

    // Continue the running lane sums so the fold order matches the scalar
    // kernel across chunk boundaries.
    __m256d vacc = _mm256_loadu_pd(lanes);
    __m256d vacc_sq = _mm256_loadu_pd(lanes_sq);

    const int count4 = count & ~3;
    for (int s = 0; s < count4; s += 4) {
        const __m256d om = _mm256_loadu_pd(buffer + 0 * stride + s);
        const __m256d y0 = _mm256_add_pd(om, _mm256_loadu_pd(buffer + 1 * stride + s));
        const __m256d yM = _mm256_add_pd(om, _mm256_loadu_pd(buffer + 2 * stride + s));

        __m256d ymean, u1, umean;
        if (prog.shared_obs) {
            ymean = yM;
            u1 = _mm256_add_pd(_mm256_mul_pd(a_own, yM), _mm256_mul_pd(a_major, yM));
            umean = u1;
        } else if (prog.per_follower) {
            __m256d sw = _mm256_setzero_pd();
            for (int p = 0; p < prog.n; ++p)
                sw = _mm256_add_pd(sw, _mm256_loadu_pd(buffer + (3 + p) * stride + s));
            ymean = _mm256_add_pd(om, _mm256_div_pd(sw, dn));
            const __m256d y1 = _mm256_add_pd(om, _mm256_loadu_pd(buffer + 3 * stride + s));
            u1 = _mm256_add_pd(_mm256_mul_pd(a_own, y1), _mm256_mul_pd(a_major, yM));
            umean = _mm256_add_pd(_mm256_mul_pd(a_own, ymean), _mm256_mul_pd(a_major, yM));
        } else {
            const __m256d wo = _mm256_loadu_pd(buffer + 3 * stride + s);
            const __m256d woth = _mm256_loadu_pd(buffer + 4 * stride + s);
            const __m256d dn_m1 = _mm256_sub_pd(dn, one);
            ymean = _mm256_add_pd(
                om, _mm256_div_pd(_mm256_add_pd(wo, _mm256_mul_pd(dn_m1, woth)), dn));
            const __m256d y1 = _mm256_add_pd(om, wo);
            u1 = _mm256_add_pd(_mm256_mul_pd(a_own, y1), _mm256_mul_pd(a_major, yM));
            umean = _mm256_add_pd(_mm256_mul_pd(a_own, ymean), _mm256_mul_pd(a_major, yM));
        }

        const __m256d uM = _mm256_mul_pd(beta_major, yM);
        const __m256d base = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(th_leader, y0), _mm256_mul_pd(th_major, yM)),
            _mm256_mul_pd(th_mean, ymean));
        const __m256d mon = prog.monitor_major ? uM : umean;
        const __m256d ref =
            _mm256_add_pd(_mm256_mul_pd(ref_major, yM), _mm256_mul_pd(ref_mean, ymean));
        const __m256d u0 = _mm256_add_pd(base, _mm256_mul_pd(gain, _mm256_sub_pd(mon, ref)));

        const __m256d vals[n_act_channels] = {u0, uM, u1, umean, om};
        __m256d c = _mm256_setzero_pd();
        for (int t = 0; t < prog.n_terms; ++t) {
            __m256d lin = _mm256_setzero_pd();
            for (int k = 0; k < n_act_channels; ++k)
                if (prog.combo[t][k] != 0.0)
                    lin = _mm256_add_pd(lin,
                                        _mm256_mul_pd(_mm256_set1_pd(prog.combo[t][k]), vals[k]));
            c = _mm256_add_pd(c, _mm256_mul_pd(_mm256_set1_pd(prog.weight[t]),
                                               _mm256_mul_pd(lin, lin)));
        }
        vacc = _mm256_add_pd(vacc, c);
        vacc_sq = _mm256_add_pd(vacc_sq, _mm256_mul_pd(c, c));
    }

    _mm256_storeu_pd(lanes, vacc);
    _mm256_storeu_pd(lanes_sq, vacc_sq);

    for (int s = count4; s < count; ++s) {
        const double c = mc_sample_cost(prog, buffer, count, s);
        lanes[s & 3] += c;
        lanes_sq[s & 3] += c * c;
    }
}

} // namespace stacklab::kernels

#endif // __x86_64__
