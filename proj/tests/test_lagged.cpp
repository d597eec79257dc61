#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aad/lagged.hpp"
#include "aad/linear.hpp"
#include "aad/random.hpp"

using namespace aad;

namespace {

Eigen::MatrixXd seeded_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
    }
    return m;
}

}  // namespace

TEST_CASE("degenerate single-lag design equals the signal") {
    const Eigen::MatrixXd x = seeded_matrix(12, 1, 3);
    const LaggedDesign d = build_lagged(x, 1, LagDirection::AntiCausal);
    CHECK(d.rows() == 12);
    CHECK(d.cols() == 1);
    CHECK(d.t0 == 0);
    CHECK((d.matrix - x).norm() == 0.0);
}

TEST_CASE("anti-causal indexing is channel-major") {
    // C = 2, L = 3, T = 10: rows 8, cols 6, entry (0, 4) = x_2(1).
    const Eigen::MatrixXd x = seeded_matrix(10, 2, 4);
    const LaggedDesign d = build_lagged(x, 3, LagDirection::AntiCausal);
    CHECK(d.rows() == 8);
    CHECK(d.cols() == 6);
    CHECK(d.matrix(0, 4) == x(1, 1));
    // Full hand-enumerated index oracle: entry (t, c*L + l) = x(t + l, c).
    for (Eigen::Index t = 0; t < d.rows(); ++t) {
        for (Eigen::Index c = 0; c < 2; ++c) {
            for (Eigen::Index l = 0; l < 3; ++l) {
                CHECK(d.matrix(t, c * 3 + l) == x(t + l, c));
            }
        }
    }
}

TEST_CASE("causal indexing runs backwards from t") {
    const Eigen::MatrixXd s = seeded_matrix(10, 1, 5);
    const LaggedDesign d = build_lagged(s, 4, LagDirection::Causal);
    CHECK(d.rows() == 7);
    CHECK(d.t0 == 3);
    // Row i sits at time t = 3 + i and holds [s(t) s(t-1) s(t-2) s(t-3)].
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index l = 0; l < 4; ++l) {
            CHECK(d.matrix(i, l) == s(3 + i - l, 0));
        }
    }
}

TEST_CASE("too many lags raise insufficient data") {
    const Eigen::MatrixXd x = seeded_matrix(5, 1, 6);
    CHECK_THROWS_AS(build_lagged(x, 6, LagDirection::AntiCausal), InsufficientDataError);
    CHECK_THROWS_AS(build_lagged(x, 0, LagDirection::AntiCausal), ParameterError);
}

TEST_CASE("least squares on a delayed copy recovers a unit selector") {
    // EEG = envelope delayed by d = 2 samples; anti-causal design with L = 4
    // must recover the lag-2 selector exactly.
    Rng rng(7);
    const Eigen::Index t = 300;
    Eigen::VectorXd env(t);
    for (Eigen::Index i = 0; i < t; ++i) env[i] = rng.normal();
    Eigen::MatrixXd eeg = Eigen::MatrixXd::Zero(t, 1);
    for (Eigen::Index i = 2; i < t; ++i) eeg(i, 0) = env[i - 2];  // x(t) = s(t-2) => s(t) = x(t+2)

    const LaggedDesign d = build_lagged(eeg, 4, LagDirection::AntiCausal);
    const Eigen::VectorXd target = aligned_target(d, env);
    const SegmentStats st = segment_stats(d, target);
    const Eigen::VectorXd w = solve_ridge_weights(st, 0.0);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
    expected[2] = 1.0;
    CHECK((w - expected).lpNorm<Eigen::Infinity>() < 1e-8);

    // Lag-alignment reconstruction quality.
    Decoder dec{w, 4, 1, {}};
    const Eigen::VectorXd shat = reconstruct(dec, d);
    CHECK(pearson(shat, target) >= 0.999);
}

TEST_CASE("channel-major weight layout round-trips through reshape") {
    Rng rng(9);
    Decoder d;
    d.lags = 5;
    d.channels = 3;
    d.weights.resize(15);
    for (int i = 0; i < 15; ++i) d.weights[i] = rng.normal();
    const Eigen::MatrixXd w = decoder_as_channels_by_lags(d);
    CHECK(w.rows() == 3);
    CHECK(w.cols() == 5);
    CHECK((flatten_channels_by_lags(w) - d.weights).norm() == 0.0);
    // The lag-l weight of channel c is at position c*L + l.
    CHECK(w(2, 4) == d.weights[2 * 5 + 4]);
}

TEST_CASE("align_designs intersects the valid time ranges") {
    const Eigen::MatrixXd x = seeded_matrix(50, 2, 10);
    const Eigen::MatrixXd s = seeded_matrix(50, 1, 11);
    const LaggedDesign dx = build_lagged(x, 5, LagDirection::AntiCausal);   // t in [0, 45]
    const LaggedDesign ds = build_lagged(s, 8, LagDirection::Causal);       // t in [7, 49]
    auto [ax, as] = align_designs(dx, ds);
    CHECK(ax.t0 == 7);
    CHECK(as.t0 == 7);
    CHECK(ax.rows() == as.rows());
    CHECK(ax.rows() == 46 - 7);
    // Row 0 of both now refers to t = 7.
    CHECK(ax.matrix(0, 0) == x(7, 0));
    CHECK(as.matrix(0, 0) == s(7, 0));
}

TEST_CASE("aligned_target slices the target at the design rows") {
    const Eigen::MatrixXd s = seeded_matrix(20, 1, 12);
    const LaggedDesign d = build_lagged(s, 6, LagDirection::Causal);
    const Eigen::VectorXd t = aligned_target(d, s.col(0));
    CHECK(t.size() == d.rows());
    CHECK(t[0] == s(5, 0));
}
