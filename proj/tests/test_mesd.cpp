#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aad/common.hpp"
#include "aad/mesd.hpp"
#include "aad/random.hpp"

using namespace aad;

namespace {

// Monte-Carlo oracle: simulate the reflecting random walk until it hits the
// target state, average the step count.
double mc_hitting_steps(double p_up, int k, int target, int start, long walks, std::uint64_t seed) {
    Rng rng(seed);
    double total = 0.0;
    for (long w = 0; w < walks; ++w) {
        int state = start;
        long steps = 0;
        while (state != target) {
            if (rng.bernoulli(p_up)) {
                state = std::min(state + 1, k - 1);
            } else {
                state = std::max(state - 1, 0);
            }
            ++steps;
        }
        total += static_cast<double>(steps);
    }
    return total / static_cast<double>(walks);
}

PerformanceCurve curve_of(const std::vector<std::pair<double, double>>& pts) {
    PerformanceCurve c;
    for (const auto& [tau, acc] : pts) c.points.push_back({tau, acc, 10});
    return c;
}

}  // namespace

TEST_CASE("perfect accuracy walks deterministically") {
    // K = 10, comfort gain 0.8 -> target state 8, start state 1, distance 7.
    const MesdResult r = mesd(curve_of({{1.0, 100.0}}));
    CHECK(r.finite);
    CHECK(r.states == 10);
    CHECK(r.target_state == 8);
    CHECK(r.seconds == 7.0);  // exact: distance times tau
    CHECK(r.optimal_tau_s == 1.0);
}

TEST_CASE("hitting times match the Monte-Carlo oracle within 1 percent") {
    const long walks = 1000000;
    const double analytic = expected_hitting_steps(0.8, 10, 8, 1);
    const double mc = mc_hitting_steps(0.8, 10, 8, 1, walks, 99);
    CHECK(std::abs(analytic - mc) / analytic < 0.01);

    // The p = 80%, tau = 10 s operating point in seconds.
    const MesdResult r = mesd(curve_of({{10.0, 80.0}}));
    CHECK(r.finite);
    CHECK(r.seconds == doctest::Approx(10.0 * analytic).epsilon(1e-12));
}

TEST_CASE("hitting times match Monte Carlo across random configurations") {
    Rng rng(123);
    for (int rep = 0; rep < 20; ++rep) {
        const double p = rng.uniform(0.6, 0.95);
        const int k = 4 + static_cast<int>(rng.uniform_int(12));
        const int target = k - 1 - static_cast<int>(rng.uniform_int(std::max(1, k / 3)));
        const int start = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(target)));
        const double analytic = expected_hitting_steps(p, k, target, start);
        const double mc = mc_hitting_steps(p, k, target, start, 200000, 1000 + rep);
        CHECK(std::abs(analytic - mc) / analytic < 0.01);
    }
}

TEST_CASE("stationary mass increases with accuracy and gates admissibility") {
    CHECK(stationary_upper_mass(0.9, 10, 8) > stationary_upper_mass(0.7, 10, 8));
    CHECK(stationary_upper_mass(1.0, 10, 8) == 1.0);
    // Near-chance p leaves almost no mass in the comfort region.
    CHECK(stationary_upper_mass(0.51, 10, 8) < 0.3);
}

TEST_CASE("curves without an admissible point are unbounded") {
    const MesdResult low = mesd(curve_of({{1.0, 49.0}, {10.0, 50.0}}));
    CHECK_FALSE(low.finite);
    CHECK(mesd_cell(low) == ">50.0");

    // Slightly above chance but failing the comfort constraint.
    const MesdResult weak = mesd(curve_of({{1.0, 55.0}}));
    CHECK_FALSE(weak.finite);

    // Custom bound in the cell marker.
    MesdOptions opts;
    opts.bound_s = 30.0;
    CHECK(mesd_cell(weak, opts) == ">30.0");
}

TEST_CASE("mesd picks the best point of the curve") {
    // Long windows are accurate but slow; short ones inaccurate. The metric
    // has to find the sweet spot.
    const MesdResult r = mesd(curve_of({{1.0, 65.0}, {5.0, 85.0}, {30.0, 99.0}, {60.0, 100.0}}));
    CHECK(r.finite);
    CHECK(r.optimal_tau_s == 5.0);
}

TEST_CASE("mesd is monotone under pointwise curve domination") {
    Rng rng(321);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::pair<double, double>> lo, hi;
        double tau = 1.0;
        for (int i = 0; i < 5; ++i) {
            const double base = rng.uniform(45.0, 95.0);
            const double bump = rng.uniform(0.0, 100.0 - base);
            lo.push_back({tau, base});
            hi.push_back({tau, base + bump});
            tau *= rng.uniform(1.5, 3.0);
        }
        const MesdResult rl = mesd(curve_of(lo));
        const MesdResult rh = mesd(curve_of(hi));
        if (rl.finite) {
            REQUIRE(rh.finite);
            CHECK(rh.seconds <= rl.seconds + 1e-9);
        }
    }
}

TEST_CASE("wider chain design bounds can only improve the result") {
    const auto curve = curve_of({{2.0, 75.0}, {20.0, 97.0}});
    MesdOptions fixed;  // K = 10 only
    MesdOptions ranged;
    ranged.k_min = 5;
    ranged.k_max = 30;
    const MesdResult rf = mesd(curve, fixed);
    const MesdResult rr = mesd(curve, ranged);
    REQUIRE(rf.finite);
    REQUIRE(rr.finite);
    CHECK(rr.seconds <= rf.seconds + 1e-12);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(mesd(PerformanceCurve{}), ParameterError);
    CHECK_THROWS_AS(expected_hitting_steps(0.8, 10, 8, 9), ParameterError);
    CHECK_THROWS_AS(expected_hitting_steps(1.5, 10, 8, 1), ParameterError);
    MesdOptions bad;
    bad.k_min = 1;
    CHECK_THROWS_AS(mesd(curve_of({{1.0, 90.0}}), bad), ParameterError);
}
