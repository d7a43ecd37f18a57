#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "stacklab/kernels.hpp"
#include "stacklab/verifier.hpp"
#include "test_util.hpp"

using namespace stacklab;
using namespace stacklab::kernels;
using testutil::Rng;

namespace {

McProgram random_program(Rng& rng, bool has_major, bool shared, bool per_follower) {
    GameContext ctx{rng.uniform_int(1, 12), has_major, shared};
    QuadraticCostSpec cost;
    const int nterms = rng.uniform_int(1, 4);
    for (int k = 0; k < nterms; ++k) {
        CostTerm t;
        t.weight = rng.uniform(0.1, 2.0);
        for (int c = 0; c < n_act_channels; ++c) t.combo[c] = rng.uniform(-1.0, 1.0);
        cost.terms.push_back(t);
    }
    const Profile p = testutil::random_profile(rng, ctx, /*with_incentive=*/true);
    return compile_program(cost, p, ctx, per_follower);
}

} // namespace

TEST_CASE("counter rng basics") {
    // distinct keys and draws
    CHECK(batch_key(1, 0) != batch_key(1, 1));
    CHECK(batch_key(1, 0) != batch_key(2, 0));
    CHECK(normal_draw(batch_key(1, 0), 0, 0) != normal_draw(batch_key(1, 0), 1, 0));
    CHECK(normal_draw(batch_key(1, 0), 0, 0) == normal_draw(batch_key(1, 0), 0, 0));

    // sample moments of the standard normal
    const uint64_t key = batch_key(99, 0);
    const int m = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < m; ++i) {
        const double z = normal_draw(key, i, 0);
        sum += z;
        sum_sq += z * z;
        CHECK(std::isfinite(z));
    }
    CHECK(std::fabs(sum / m) < 4.0 / std::sqrt(double(m)));
    CHECK(std::fabs(sum_sq / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
}

TEST_CASE("scalar and avx2 kernels are bit-identical") {
    if (!avx2_available()) {
        MESSAGE("AVX2 not available on this host; skipping equivalence checks");
        return;
    }
    Rng rng(0xbeefcafe);
    for (int it = 0; it < 12; ++it) {
        const bool has_major = it % 2 == 0;
        const bool shared = it % 4 == 3;
        const bool per_follower = it % 3 != 0;
        const McProgram prog = random_program(rng, has_major, shared && has_major, per_follower);
        const uint64_t key = batch_key(rng.next(), it);
        // odd sample count exercises the scalar tail inside the vector kernel
        const int64_t samples = 4096 + 3 + it;

        const BatchMoments a = run_batch(prog, key, samples, accumulate_scalar);
        const BatchMoments b = run_batch(prog, key, samples, accumulate_avx2);
        CHECK(std::memcmp(&a.sum, &b.sum, sizeof(double)) == 0);
        CHECK(std::memcmp(&a.sum_sq, &b.sum_sq, sizeof(double)) == 0);
    }
}

TEST_CASE("backend selection honors the environment override") {
    setenv("STACKLAB_KERNEL", "scalar", 1);
    CHECK(select_backend() == accumulate_scalar);
    CHECK(backend_name() == "scalar");
    unsetenv("STACKLAB_KERNEL");
    if (avx2_available()) CHECK(backend_name() == "avx2");
}

TEST_CASE("estimates are backend-independent end to end") {
    if (!avx2_available()) {
        MESSAGE("AVX2 not available on this host; skipping");
        return;
    }
    PnGameSpec spec{2.0, 1.0, 2.0, 1.0, 6};
    const GameContext ctx = make_context(spec);
    const PnCosts costs = build_pn_costs(spec);
    const Profile p = pn_profile(spec, pn_solve(spec));
    MonteCarloConfig cfg;
    cfg.samples = 120000;
    cfg.seed = 99;

    setenv("STACKLAB_KERNEL", "scalar", 1);
    const McEstimate a = mc_expected_cost(costs.leader, p, ctx, cfg);
    setenv("STACKLAB_KERNEL", "avx2", 1);
    const McEstimate b = mc_expected_cost(costs.leader, p, ctx, cfg);
    unsetenv("STACKLAB_KERNEL");

    CHECK(a.backend == "scalar");
    CHECK(b.backend == "avx2");
    CHECK(std::memcmp(&a.estimate, &b.estimate, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.std_error, &b.std_error, sizeof(double)) == 0);
}

TEST_CASE("program compilation rejects oversized costs") {
    GameContext ctx{2, false, false};
    QuadraticCostSpec cost;
    for (int i = 0; i < max_cost_terms + 1; ++i) {
        CostTerm t;
        t.weight = 1.0;
        t.at(Act::omega0) = 1.0;
        cost.terms.push_back(t);
    }
    Profile p;
    CHECK_THROWS_AS(compile_program(cost, p, ctx, true), contract_violation);
}

TEST_CASE("chunking does not change the batch moments") {
    // run_batch fixes the chunk size internally, so two sample counts whose
    // work splits differently across chunks must still agree with a single
    // scalar pass over the same draws.
    Rng rng(0x1010);
    const McProgram prog = random_program(rng, true, false, true);
    const uint64_t key = batch_key(5, 0);
    const int64_t samples = 2500;  // spans three chunks

    const BatchMoments m = run_batch(prog, key, samples, accumulate_scalar);

    const int rows = prog.source_rows();
    std::vector<double> buf(static_cast<size_t>(rows) * samples);
    fill_normals(prog, key, 0, static_cast<int>(samples), buf.data());
    double total = 0.0;
    for (int s = 0; s < samples; ++s) total += mc_sample_cost(prog, buf.data(), samples, s);
    CHECK(m.sum == doctest::Approx(total).epsilon(1e-12));
}
