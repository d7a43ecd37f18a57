#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stacklab/major_solver.hpp"
#include "stacklab/verifier.hpp"
#include "test_util.hpp"

using namespace stacklab;
using testutil::Rng;

namespace {

MajGameSpec fig1_spec(int n) {
    MajGameSpec s;
    s.q0 = s.qhat0 = s.q = 1.0;
    s.r0 = s.r = 2.0;
    s.rM = s.qM = 1.0;
    s.n = n;
    return s;
}

MajGameSpec zero_loss_spec(int n) {
    MajGameSpec s;
    s.r0 = 2.0;
    s.q0 = 1.0;
    s.r = 2.0;
    s.rM = 1.0;
    s.qM = 1.0;
    s.n = n;
    s.shared_obs = true;
    return s;
}

} // namespace

TEST_CASE("minor response") {
    MajGameSpec s = fig1_spec(5);

    SUBCASE("zero coupling weight") {
        s.q = 0.0;
        const MinorResponse m = maj_minor_response(s, 0.7);
        CHECK(m.alpha == 0.0);
        CHECK(m.alphaM == 0.0);
    }

    SUBCASE("limit coefficient on the own observation") {
        s.n = 1000000;
        const MinorResponse m = maj_minor_response(s, -0.1);
        CHECK(m.alpha == doctest::Approx(-0.1).epsilon(1e-5));
    }

    SUBCASE("stationarity holds for any major coefficient") {
        Rng rng(0xabc1);
        const GameContext ctx = make_context(s);
        const MajCosts costs = build_maj_costs(s);
        for (int it = 0; it < 10; ++it) {
            const double beta = rng.uniform(-2.0, 2.0);
            const MinorResponse m = maj_minor_response(s, beta);
            Profile p;
            p.major = LinearPolicy::single(Obs::major, beta);
            p.minor.set(Obs::own, m.alpha);
            p.minor.set(Obs::major, m.alphaM);
            CHECK(stationarity_residual(costs.minor, p, Role::minor, ctx).max_abs() < 1e-12);
        }
    }

    SUBCASE("assembled response agrees") {
        Rng rng(0xabc2);
        for (int it = 0; it < 10; ++it) {
            const MajGameSpec spec = testutil::random_maj_spec(rng, rng.uniform_int(1, 30));
            const double beta = rng.uniform(-2.0, 2.0);
            const MinorResponse a = maj_minor_response(spec, beta);
            const MinorResponse b = maj_minor_response_assembled(spec, beta);
            CHECK(std::fabs(a.alpha - b.alpha) < 1e-12);
            CHECK(std::fabs(a.alphaM - b.alphaM) < 1e-12);
        }
    }
}

TEST_CASE("leader-major-optimal at n=1 (hand-solved)") {
    const MajSolution s = maj_solve(fig1_spec(1));
    CHECK(s.theta == doctest::Approx(-2.0 / 27).epsilon(1e-13));
    CHECK(s.thetaM == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(std::fabs(s.thetaM) < 1e-13);
    CHECK(s.beta == doctest::Approx(-1.0 / 9).epsilon(1e-13));
    CHECK(s.alpha == doctest::Approx(-1.0 / 9).epsilon(1e-13));
    CHECK(s.alphaM == doctest::Approx(-2.0 / 27).epsilon(1e-13));
    CHECK(s.L == doctest::Approx(2.0 / 9).epsilon(1e-13));
    CHECK(*s.gain == doctest::Approx(-0.5).epsilon(1e-13));
    CHECK(s.rprime == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.D == doctest::Approx(2.0 / 3).epsilon(1e-15));
}

TEST_CASE("closed system matches the generic assembler") {
    Rng rng(0x4433);
    for (int it = 0; it < 20; ++it) {
        for (int n : {1, 2, 5, 10, 100}) {
            const MajGameSpec spec = testutil::random_maj_spec(rng, n);
            const MajSolution a = maj_leader_major_optimal(spec);
            const MajSolution b = maj_leader_major_optimal_assembled(spec);
            CHECK(std::fabs(a.theta - b.theta) < 1e-10);
            CHECK(std::fabs(a.thetaM - b.thetaM) < 1e-10);
            CHECK(std::fabs(a.beta - b.beta) < 1e-10);
            CHECK(std::fabs(a.alpha - b.alpha) < 1e-10);
            CHECK(std::fabs(a.alphaM - b.alphaM) < 1e-10);
            CHECK(std::fabs(maj_gain(spec, a).gain - maj_gain_assembled(spec, a)) < 1e-10);
        }
    }
}

TEST_CASE("leader-major system matches a response-substituted minimization") {
    // Independent oracle: J(theta, thetaM, beta) with the minors' Nash response
    // substituted is a quadratic; recover its minimizer by exact probing.
    Rng rng(0x77e1);
    for (int it = 0; it < 6; ++it) {
        const MajGameSpec spec = testutil::random_maj_spec(rng, rng.uniform_int(1, 20));
        const GameContext ctx = make_context(spec);
        const MajCosts costs = build_maj_costs(spec);

        auto j_of = [&](const std::array<double, 3>& x) {
            const MinorResponse m = maj_minor_response(spec, x[2]);
            Profile p;
            p.leader.base.set(Obs::leader, x[0]);
            p.leader.base.set(Obs::major, x[1]);
            p.major = LinearPolicy::single(Obs::major, x[2]);
            p.minor.set(Obs::own, m.alpha);
            p.minor.set(Obs::major, m.alphaM);
            return expected_cost(costs.leader, p, ctx);
        };

        const double j0 = j_of({0, 0, 0});
        std::array<double, 3> g{};
        std::array<std::array<double, 3>, 3> h{};
        for (int i = 0; i < 3; ++i) {
            std::array<double, 3> xp{}, xm{};
            xp[i] = 1.0;
            xm[i] = -1.0;
            g[i] = (j_of(xp) - j_of(xm)) / 2.0;
            h[i][i] = j_of(xp) + j_of(xm) - 2.0 * j0;
        }
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                std::array<double, 3> x{};
                x[i] = 1.0;
                x[j] = 1.0;
                h[i][j] = h[j][i] =
                    j_of(x) - j0 - g[i] - g[j] - 0.5 * h[i][i] - 0.5 * h[j][j];
            }
        // solve 3x3 H x = -g by Cramer's rule
        auto det3 = [](const std::array<std::array<double, 3>, 3>& m) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double d = det3(h);
        REQUIRE(std::fabs(d) > 1e-12);
        std::array<double, 3> x{};
        for (int col = 0; col < 3; ++col) {
            auto hc = h;
            for (int row = 0; row < 3; ++row) hc[row][col] = -g[row];
            x[col] = det3(hc) / d;
        }

        const MajSolution sol = maj_leader_major_optimal(spec);
        CHECK(x[0] == doctest::Approx(sol.theta).epsilon(1e-8));
        CHECK(x[1] == doctest::Approx(sol.thetaM).epsilon(1e-8));
        CHECK(x[2] == doctest::Approx(sol.beta).epsilon(1e-8));
    }
}

TEST_CASE("residuals vanish at the solved profile") {
    Rng rng(0x8899);
    for (int it = 0; it < 10; ++it) {
        const MajGameSpec spec = testutil::random_maj_spec(rng, rng.uniform_int(1, 50));
        const MajSolution sol = maj_solve(spec);
        const auto view = maj_solution_view(spec, sol);
        for (const auto& [name, value] : view.residuals) {
            INFO(name);
            CHECK(value <= 1e-10);
        }
    }
}

TEST_CASE("gain formula properties") {
    const MajGameSpec spec = fig1_spec(7);

    SUBCASE("beta = 0 gives Q = -1") {
        MajSolution s = maj_leader_major_optimal(spec);
        s.beta = 0.0;
        CHECK(maj_gain(spec, s).gain == doctest::Approx(-1.0).epsilon(1e-13));
    }

    SUBCASE("vanishing cross-term weight degenerates the channel") {
        // With qhat0 = 0 the major stationarity forces L = 0 at the optimum.
        MajGameSpec s = spec;
        s.qhat0 = 0.0;
        const MajSolution sol = maj_leader_major_optimal(s);
        CHECK(std::fabs(sol.L) < 1e-12);
        CHECK_THROWS_AS(maj_gain(s, sol), degenerate_gain_error);
    }
}

TEST_CASE("limits at the reference weights (hand-solved)") {
    const MajLimits l = maj_limits(fig1_spec(1));
    CHECK(l.alpha == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(l.theta == doctest::Approx(-3.0 / 40).epsilon(1e-13));
    CHECK(l.thetaM == doctest::Approx(11.0 / 1360).epsilon(1e-12));
    CHECK(l.beta == doctest::Approx(-5.0 / 34).epsilon(1e-13));
    CHECK(l.alphaM == doctest::Approx(-13.0 / 340).epsilon(1e-13));
    CHECK(l.L == doctest::Approx(4.0 / 17).epsilon(1e-13));
    CHECK(l.gain == doctest::Approx(-3.0 / 8).epsilon(1e-13));
}

TEST_CASE("finite-n solution converges to the limit") {
    const MajLimits l = maj_limits(fig1_spec(1));
    const MajSolution big = maj_solve(fig1_spec(1000000));
    CHECK(std::fabs(big.theta - l.theta) < 1e-6);
    CHECK(std::fabs(big.thetaM - l.thetaM) < 1e-6);
    CHECK(std::fabs(big.beta - l.beta) < 1e-6);
    CHECK(std::fabs(big.alpha - l.alpha) < 1e-6);
    CHECK(std::fabs(big.alphaM - l.alphaM) < 1e-6);
    CHECK(std::fabs(*big.gain - l.gain) < 1e-6);

    // Cauchy differences shrink along the dyadic grid.
    double prev_diff = 1e9;
    for (int n : {25, 50, 100, 200, 400}) {
        const double g = *maj_solve(fig1_spec(n)).gain;
        const double diff = std::fabs(g - l.gain);
        CHECK(diff < prev_diff);
        prev_diff = diff;
    }

    // finite |Q_inf| across random specs
    Rng rng(0xf00d);
    for (int it = 0; it < 20; ++it) {
        const MajLimits lim = maj_limits(testutil::random_maj_spec(rng, 1));
        CHECK(std::isfinite(lim.gain));
    }
}

TEST_CASE("limit coefficients are an approximate equilibrium at large n") {
    // Plugging the mean-field coefficients into a large finite game leaves the
    // followers' best-response improvements at the O(1/n^2) level and the
    // leader's optimality gap at O(1/n).
    const MajLimits l = maj_limits(fig1_spec(1));
    auto gap_at = [&](int n) {
        const MajGameSpec spec = fig1_spec(n);
        const GameContext ctx = make_context(spec);
        const MajCosts costs = build_maj_costs(spec);
        MajSolution as_solution;
        as_solution.n = n;
        as_solution.theta = l.theta;
        as_solution.thetaM = l.thetaM;
        as_solution.beta = l.beta;
        as_solution.alpha = l.alpha;
        as_solution.alphaM = l.alphaM;
        as_solution.gain = l.gain;
        const Profile p = maj_profile(spec, as_solution);
        CHECK(best_response_improvement(costs.major, p, Role::major, ctx) < 1e2 / double(n) / n);
        CHECK(best_response_improvement(costs.minor, p, Role::minor, ctx) < 1e2 / double(n) / n);
        const double j_limit = expected_cost(costs.leader, p, ctx);
        const double j_opt = expected_cost(
            costs.leader, maj_profile(spec, maj_leader_major_optimal(spec)), ctx);
        CHECK(j_limit - j_opt >= -1e-12);
        return j_limit - j_opt;
    };
    const double g3 = gap_at(1000);
    const double g4 = gap_at(10000);
    CHECK(g4 < 1e-5);
    CHECK(g4 < g3 / 5.0);  // shrinking at least like 1/n
}

TEST_CASE("leader-optimal (hat) system") {
    SUBCASE("hand-solved n=1") {
        const MajHatSolution h = maj_leader_optimal(fig1_spec(1));
        CHECK(h.theta_hat == doctest::Approx(-2.0 / 35).epsilon(1e-13));
        CHECK(h.thetaM_hat == doctest::Approx(1.0 / 35).epsilon(1e-13));
        CHECK(std::fabs(h.beta_hat) < 1e-13);
        CHECK(h.alpha_hat == doctest::Approx(-11.0 / 35).epsilon(1e-13));
        CHECK(h.alphaM_hat == doctest::Approx(-12.0 / 35).epsilon(1e-13));
    }

    SUBCASE("assembler agreement") {
        Rng rng(0x1bb1);
        for (int it = 0; it < 10; ++it) {
            const MajGameSpec spec = testutil::random_maj_spec(rng, rng.uniform_int(1, 30));
            const MajHatSolution a = maj_leader_optimal(spec);
            const MajHatSolution b = maj_leader_optimal_assembled(spec);
            CHECK(std::fabs(a.theta_hat - b.theta_hat) < 1e-10);
            CHECK(std::fabs(a.thetaM_hat - b.thetaM_hat) < 1e-10);
            CHECK(std::fabs(a.beta_hat - b.beta_hat) < 1e-10);
            CHECK(std::fabs(a.alpha_hat - b.alpha_hat) < 1e-10);
            CHECK(std::fabs(a.alphaM_hat - b.alphaM_hat) < 1e-10);
        }
    }

    SUBCASE("team-minimizer oracle agreement") {
        const MajGameSpec spec = fig1_spec(3);
        const GameContext ctx = make_context(spec);
        const MajCosts costs = build_maj_costs(spec);
        Profile base;
        const std::vector<std::function<void(Profile&, double)>> slots = {
            [](Profile& p, double v) { p.leader.base.set(Obs::leader, v); },
            [](Profile& p, double v) { p.leader.base.set(Obs::major, v); },
            [](Profile& p, double v) { p.major.set(Obs::major, v); },
            [](Profile& p, double v) { p.minor.set(Obs::own, v); },
            [](Profile& p, double v) { p.minor.set(Obs::major, v); },
        };
        const TeamMinimum tm = minimize_expected_cost(costs.leader, base, slots, ctx);
        const MajHatSolution h = maj_leader_optimal(spec);
        CHECK(tm.x[0] == doctest::Approx(h.theta_hat).epsilon(1e-9));
        CHECK(tm.x[1] == doctest::Approx(h.thetaM_hat).epsilon(1e-9));
        CHECK(tm.x[2] == doctest::Approx(h.beta_hat).epsilon(1e-9));
        CHECK(tm.x[3] == doctest::Approx(h.alpha_hat).epsilon(1e-9));
        CHECK(tm.x[4] == doctest::Approx(h.alphaM_hat).epsilon(1e-9));
        CHECK(tm.value ==
              doctest::Approx(expected_cost(costs.leader, maj_hat_profile(spec, h), ctx))
                  .epsilon(1e-12));
    }

    SUBCASE("q0 = 0 is rejected") {
        MajGameSpec s = fig1_spec(3);
        s.q0 = 0.0;
        CHECK_THROWS_AS(maj_leader_optimal(s), unsupported_parameterization_error);
    }

    SUBCASE("coefficients vanish in the large-population limit") {
        const MajHatSolution h = maj_leader_optimal(fig1_spec(1000000));
        CHECK(std::fabs(h.theta_hat) < 1e-4);
        CHECK(std::fabs(h.thetaM_hat) < 1e-4);
        CHECK(std::fabs(h.beta_hat) < 1e-4);
        CHECK(h.alpha_hat == doctest::Approx(-1.0).epsilon(1e-4));
    }
}

TEST_CASE("performance loss") {
    SUBCASE("reference curve: positive loss, monotone branches") {
        double prev_opt = 1e18, prev_maj = -1e18;
        for (int n = 1; n <= 50; ++n) {
            const MajLoss l = maj_loss(fig1_spec(n));
            CHECK(l.loss > 0.0);
            CHECK(l.j_leader_opt <= prev_opt + 1e-12);
            CHECK(l.j_leader_major >= prev_maj - 1e-12);
            prev_opt = l.j_leader_opt;
            prev_maj = l.j_leader_major;
        }
    }

    SUBCASE("nonnegative on random specs") {
        Rng rng(0xd00d);
        for (int it = 0; it < 100; ++it) {
            const MajGameSpec spec = testutil::random_maj_spec(rng, rng.uniform_int(1, 25));
            CHECK(maj_loss(spec).loss >= -1e-10);
        }
    }

    SUBCASE("loss CSV header") {
        const std::string csv = maj_loss_csv(fig1_spec(1), {1, 2, 3});
        CHECK(csv.rfind("n,j_leader_opt,j_leader_major,loss\n", 0) == 0);
    }
}

TEST_CASE("zero-loss example") {
    SUBCASE("closed coefficients") {
        const ZeroLossSolution z = zero_loss_solve(zero_loss_spec(5));
        CHECK(z.theta == doctest::Approx(-1.0 / 9).epsilon(1e-13));
        CHECK(z.thetaM == doctest::Approx(1.0 / 18).epsilon(1e-13));
        CHECK(z.beta == doctest::Approx(-5.0 / 12).epsilon(1e-13));
        REQUIRE(z.gain.has_value());
        CHECK(*z.gain == doctest::Approx(-9.0 / 4).epsilon(1e-12));
    }

    SUBCASE("loss vanishes for every tested population") {
        for (int n : {1, 5, 50}) {
            const MajLoss l = maj_loss(zero_loss_spec(n));
            CHECK(std::fabs(l.loss) <= 1e-10);
        }
    }

    SUBCASE("minor response set is the singleton symmetric profile") {
        const MajGameSpec spec = zero_loss_spec(5);
        const GameContext ctx = make_context(spec);
        const MajCosts costs = build_maj_costs(spec);
        const ZeroLossSolution z = zero_loss_solve(spec);
        const Profile p = zero_loss_profile(spec, z);
        CHECK(stationarity_residual(costs.minor, p, Role::minor, ctx).max_abs() < 1e-12);
    }

    SUBCASE("gain channel degenerates at n=1") {
        const ZeroLossSolution z = zero_loss_solve(zero_loss_spec(1));
        CHECK_FALSE(z.gain.has_value());
    }

    SUBCASE("plain-spec rejection") {
        MajGameSpec plain = zero_loss_spec(5);
        plain.shared_obs = false;
        CHECK_THROWS_AS(zero_loss_solve(plain), contract_violation);
    }

    SUBCASE("team coefficients stay regular near r0 + q0 = 1") {
        MajGameSpec s = zero_loss_spec(5);
        s.r0 = 0.5;
        s.q0 = 0.5;
        const ZeroLossSolution z = zero_loss_solve(s);
        CHECK(std::isfinite(z.theta));
        CHECK(std::fabs(maj_loss(s).loss) <= 1e-10);
    }
}

TEST_CASE("degenerate all-zero tracking weights are flagged") {
    MajGameSpec s = fig1_spec(3);
    s.q0 = 0.0;
    s.qhat0 = 0.0;
    CHECK_THROWS_AS(maj_leader_major_optimal(s), degenerate_game_error);
}

TEST_CASE("decoupled minors (q = 0) still solve") {
    MajGameSpec s = fig1_spec(6);
    s.q = 0.0;
    const MajSolution sol = maj_solve(s);
    CHECK(sol.alpha == 0.0);
    CHECK(sol.alphaM == 0.0);
    CHECK(sol.D == 1.0);
    CHECK(std::isfinite(*sol.gain));
    const auto view = maj_solution_view(s, sol);
    for (const auto& [name, value] : view.residuals) {
        INFO(name);
        CHECK(value <= 1e-10);
    }
}

TEST_CASE("gain sweep CSV") {
    const std::string csv = maj_sweep_csv(fig1_spec(1), {10, 20, 40});
    CHECK(csv.rfind("n,theta,thetaM,beta,alpha,alphaM,gain,L\n", 0) == 0);
}
