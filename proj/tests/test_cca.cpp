#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "aad/cca.hpp"
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

LaggedDesign wrap_design(const Eigen::MatrixXd& m, LagDirection dir = LagDirection::AntiCausal,
                         int lags = 1) {
    LaggedDesign d;
    d.matrix = m;
    d.lags = lags;
    d.channels = static_cast<int>(m.cols()) / lags;
    d.direction = dir;
    d.t0 = 0;
    return d;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& m) {
    return m.rowwise() - m.colwise().mean();
}

Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    return es.eigenvectors() *
           es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

// Independent CCA oracle: singular values of the whitened cross-covariance
// Sxx^{-1/2} Sxs Sss^{-1/2}.
Eigen::VectorXd svd_cca_oracle(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const Eigen::MatrixXd xc = centered(x);
    const Eigen::MatrixXd yc = centered(y);
    const double n = static_cast<double>(x.rows() - 1);
    const Eigen::MatrixXd sxx = xc.transpose() * xc / n;
    const Eigen::MatrixXd syy = yc.transpose() * yc / n;
    const Eigen::MatrixXd sxy = xc.transpose() * yc / n;
    const Eigen::MatrixXd m = inv_sqrt(sxx) * sxy * inv_sqrt(syy);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues();
}

// Correlated test pair: y = x * A + noise.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> correlated_pair(Eigen::Index n, Eigen::Index p,
                                                            Eigen::Index q, double noise,
                                                            std::uint64_t seed) {
    const Eigen::MatrixXd x = seeded_matrix(n, p, seed);
    const Eigen::MatrixXd a = seeded_matrix(p, q, seed + 1);
    const Eigen::MatrixXd y = x * a + noise * seeded_matrix(n, q, seed + 2);
    return {x, y};
}

}  // namespace

TEST_CASE("pca keeps everything at var_keep = 1 and projection is invertible") {
    const Eigen::MatrixXd x = seeded_matrix(200, 6, 1);
    const PcaBasis basis = pca_fit(x, 1.0);
    CHECK(basis.basis.cols() == 6);
    CHECK_FALSE(basis.reduced_rank);
    // Orthonormal columns.
    CHECK((basis.basis.transpose() * basis.basis - Eigen::MatrixXd::Identity(6, 6))
              .lpNorm<Eigen::Infinity>() < 1e-10);
    // Projection then back-projection restores the centered data.
    const Eigen::MatrixXd proj = pca_project(basis, x);
    const Eigen::MatrixXd back =
        (proj * basis.basis.transpose()).rowwise() + basis.mean.transpose();
    CHECK((back - x).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("pca drops zero-variance directions") {
    Eigen::MatrixXd x = seeded_matrix(100, 4, 2);
    x.col(2).setConstant(5.0);  // no variance
    const PcaBasis basis = pca_fit(x, 4);
    CHECK(basis.basis.cols() == 3);
    CHECK(basis.reduced_rank);
}

TEST_CASE("pca matches an eigendecomposition oracle on low-rank data") {
    // Rank-2 data embedded in 5 dims.
    const Eigen::MatrixXd f = seeded_matrix(300, 2, 3);
    Eigen::MatrixXd mix(2, 5);
    mix << 1.0, 0.3, -0.5, 0.2, 0.8, -0.4, 1.1, 0.6, -0.2, 0.1;
    const Eigen::MatrixXd x = f * mix;
    const PcaBasis basis = pca_fit(x, 0.999999);
    CHECK(basis.basis.cols() == 2);

    // Oracle: covariance eigendecomposition reconstruction error.
    const Eigen::MatrixXd xc = centered(x);
    const Eigen::MatrixXd cov = xc.transpose() * xc / 299.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::MatrixXd top = es.eigenvectors().rightCols(2);
    const Eigen::MatrixXd recon_oracle = xc * top * top.transpose();
    const Eigen::MatrixXd recon_pca = pca_project(basis, x) * basis.basis.transpose();
    CHECK((recon_oracle - recon_pca).lpNorm<Eigen::Infinity>() < 1e-9);
    // Both reconstructions recover the data (it is exactly rank 2).
    CHECK((recon_pca - xc).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("cca finds perfect correlations for a noiseless linear relation") {
    const auto [x, y] = correlated_pair(500, 8, 3, 0.0, 10);
    const CcaModel model = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(model.train_correlations[j] == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("cca on independent noise stays below the null bound") {
    // T >> dimensions: the largest null canonical correlation concentrates
    // near (sqrt(p) + sqrt(q)) / sqrt(T), below 3/sqrt(T) for p = q = 2.
    const Eigen::Index t = 10000;
    const Eigen::MatrixXd x = seeded_matrix(t, 2, 20);
    const Eigen::MatrixXd y = seeded_matrix(t, 2, 21);
    const CcaModel model = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 2);
    const double bound = 3.0 / std::sqrt(static_cast<double>(t));
    for (int j = 0; j < 2; ++j) CHECK(model.train_correlations[j] < bound);
}

TEST_CASE("cca matches the SVD-of-whitened-cross-covariance oracle") {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        const auto [x, y] = correlated_pair(400, 7, 4, 0.8, seed);
        const CcaModel model = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 4);
        const Eigen::VectorXd oracle = svd_cca_oracle(x, y);
        for (int j = 0; j < 4; ++j) {
            CHECK(model.train_correlations[j] == doctest::Approx(oracle[j]).epsilon(1e-8));
        }
        // Sorted, in [0, 1].
        for (int j = 0; j < 4; ++j) {
            CHECK(model.train_correlations[j] >= 0.0);
            CHECK(model.train_correlations[j] <= 1.0);
            if (j > 0) CHECK(model.train_correlations[j] <= model.train_correlations[j - 1]);
        }
    }
}

TEST_CASE("cca component outputs are mutually uncorrelated on training data") {
    const auto [x, y] = correlated_pair(600, 8, 5, 0.5, 50);
    const CcaModel model = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 4);
    const Eigen::MatrixXd bx = centered(x * model.wx);
    const Eigen::MatrixXd by = centered(y * model.ws);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            const double rx = bx.col(i).dot(bx.col(j)) / (bx.col(i).norm() * bx.col(j).norm());
            const double ry = by.col(i).dot(by.col(j)) / (by.col(i).norm() * by.col(j).norm());
            CHECK(std::abs(rx) < 1e-6);
            CHECK(std::abs(ry) < 1e-6);
        }
    }
}

TEST_CASE("first canonical correlation dominates random projections") {
    const auto [x, y] = correlated_pair(500, 6, 4, 1.0, 60);
    const CcaModel model = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 1);
    Rng rng(61);
    const Eigen::MatrixXd xc = centered(x);
    const Eigen::MatrixXd yc = centered(y);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd u(6), v(4);
        for (int i = 0; i < 6; ++i) u[i] = rng.normal();
        for (int i = 0; i < 4; ++i) v[i] = rng.normal();
        const Eigen::VectorXd xu = xc * u;
        const Eigen::VectorXd yv = yc * v;
        const double r = std::abs(xu.dot(yv) / (xu.norm() * yv.norm()));
        CHECK(model.train_correlations[0] >= r - 1e-9);
    }
}

TEST_CASE("canonical correlations are invariant to invertible channel mixing") {
    const auto [x, y] = correlated_pair(500, 6, 4, 0.7, 70);
    const CcaModel base = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 3);
    Rng rng(71);
    Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(6, 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) mix(i, j) += 0.3 * rng.normal();
    }
    const CcaModel mixed = fit_cca(wrap_design(x * mix), wrap_design(y, LagDirection::Causal), 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(mixed.train_correlations[j] - base.train_correlations[j]) < 1e-6);
    }
}

TEST_CASE("pca at full retention leaves canonical correlations unchanged") {
    const auto [x, y] = correlated_pair(400, 6, 3, 0.9, 80);
    const CcaModel direct = fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 3);
    const PcaBasis basis = pca_fit(x, 1.0);
    const Eigen::MatrixXd projected = pca_project(basis, x);
    const CcaModel via_pca =
        fit_cca(wrap_design(projected), wrap_design(y, LagDirection::Causal), 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(via_pca.train_correlations[j] - direct.train_correlations[j]) < 1e-8);
    }
}

TEST_CASE("cca validates the component count and conditioning") {
    const auto [x, y] = correlated_pair(300, 5, 3, 0.5, 90);
    CHECK_THROWS_AS(fit_cca(wrap_design(x), wrap_design(y, LagDirection::Causal), 4),
                    ParameterError);
    // Collinear EEG columns push the covariance condition number past the
    // limit; the error message suggests PCA.
    Eigen::MatrixXd bad = x;
    bad.col(1) = bad.col(0) * (1.0 + 1e-14);
    try {
        fit_cca(wrap_design(bad), wrap_design(y, LagDirection::Causal), 2);
        CHECK(false);
    } catch (const ConditioningError& e) {
        CHECK(std::string(e.what()).find("PCA") != std::string::npos);
    }
}

TEST_CASE("cca_correlations reproduces the training correlations on training data") {
    const auto [x, y] = correlated_pair(400, 6, 4, 0.6, 100);
    const LaggedDesign dx = wrap_design(x);
    const LaggedDesign dy = wrap_design(y, LagDirection::Causal);
    const CcaModel model = fit_cca(dx, dy, 3);
    const CcaCorrelations c = cca_correlations(model, dx, dy);
    for (int j = 0; j < 3; ++j) {
        CHECK(c.rho[j] == doctest::Approx(model.train_correlations[j]).epsilon(1e-6));
    }
    // Invariant to positive scaling of the envelope side.
    LaggedDesign scaled = dy;
    scaled.matrix *= 4.2;
    const CcaCorrelations cs = cca_correlations(model, dx, scaled);
    for (int j = 0; j < 3; ++j) CHECK(cs.rho[j] == doctest::Approx(c.rho[j]).epsilon(1e-10));

    // And matches a direct pearson of explicitly computed filter outputs.
    for (int j = 0; j < 3; ++j) {
        const double direct = pearson(dx.matrix * model.wx.col(j), dy.matrix * model.ws.col(j));
        CHECK(c.rho[j] == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("cca_feature is an antisymmetric difference") {
    Eigen::VectorXd r1(3), r2(3);
    r1 << 0.5, 0.2, 0.1;
    r2 << 0.3, 0.25, 0.05;
    CHECK((cca_feature(r1, r1)).norm() == 0.0);
    const Eigen::VectorXd f = cca_feature(r1, r2);
    CHECK((cca_feature(r2, r1) + f).norm() == 0.0);
    // J = 1 reduces to the plain correlation difference.
    CHECK(cca_feature(r1.head(1), r2.head(1))[0] == doctest::Approx(0.2));
}

TEST_CASE("lda separates 1-D classes with the right sign") {
    std::vector<Eigen::VectorXd> feats;
    std::vector<bool> labels;
    Rng rng(110);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd f(1);
        f[0] = 2.0 + 0.3 * rng.normal();
        feats.push_back(f);
        labels.push_back(true);
        f[0] = -2.0 + 0.3 * rng.normal();
        feats.push_back(f);
        labels.push_back(false);
    }
    const LdaClassifier lda = fit_lda(feats, labels);
    CHECK(lda.weights[0] > 0.0);
    CHECK(lda.bias == 0.0);
}

TEST_CASE("lda matches the closed-form pooled-covariance oracle") {
    Rng rng(111);
    std::vector<Eigen::VectorXd> feats;
    std::vector<bool> labels;
    Eigen::VectorXd shift(3);
    shift << 0.8, -0.4, 0.2;
    for (int i = 0; i < 60; ++i) {
        Eigen::VectorXd f(3);
        for (int k = 0; k < 3; ++k) f[k] = rng.normal() * (k + 1.0) * 0.3;
        const bool label = rng.bernoulli(0.5);
        f += label ? shift : Eigen::VectorXd(-shift);
        feats.push_back(f);
        labels.push_back(label);
    }
    const LdaClassifier lda = fit_lda(feats, labels);

    // Oracle: explicitly build the augmented two-class set, compute class
    // means and the pooled covariance, and solve cov * w = mu1 - mu2.
    std::vector<Eigen::VectorXd> pos, neg;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        pos.push_back(labels[i] ? feats[i] : Eigen::VectorXd(-feats[i]));
        neg.push_back(labels[i] ? Eigen::VectorXd(-feats[i]) : feats[i]);
    }
    Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(3), mu2 = Eigen::VectorXd::Zero(3);
    for (const auto& f : pos) mu1 += f;
    for (const auto& f : neg) mu2 += f;
    mu1 /= static_cast<double>(pos.size());
    mu2 /= static_cast<double>(neg.size());
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& f : pos) scatter += (f - mu1) * (f - mu1).transpose();
    for (const auto& f : neg) scatter += (f - mu2) * (f - mu2).transpose();
    const Eigen::MatrixXd pooled = scatter / static_cast<double>(pos.size() + neg.size() - 2);
    const Eigen::VectorXd w_oracle = pooled.ldlt().solve(mu1 - mu2);
    CHECK((lda.weights - w_oracle).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(lda.bias == 0.0);
}

TEST_CASE("lda regularizes a singular pooled covariance") {
    std::vector<Eigen::VectorXd> feats;
    std::vector<bool> labels;
    Rng rng(112);
    for (int i = 0; i < 40; ++i) {
        Eigen::VectorXd f(2);
        f[0] = 1.0 + 0.1 * rng.normal();
        f[1] = 2.0 * f[0];  // perfectly collinear features
        feats.push_back(f);
        labels.push_back(true);
    }
    const LdaClassifier lda = fit_lda(feats, labels);
    CHECK(lda.regularized);
    CHECK(lda.weights.allFinite());
}

TEST_CASE("cca_decide picks the correlated envelope and swaps with it") {
    // EEG-side data correlated only with envelope 0.
    const auto [x, y] = correlated_pair(600, 6, 4, 0.4, 120);
    const Eigen::MatrixXd y_other = seeded_matrix(600, 4, 121);
    const LaggedDesign dx = wrap_design(x);
    const LaggedDesign d_att = wrap_design(y, LagDirection::Causal);
    const LaggedDesign d_un = wrap_design(y_other, LagDirection::Causal);

    const CcaModel model = fit_cca(dx, d_att, 3);
    // Symmetric LDA stub: uniform positive weights.
    LdaClassifier lda;
    lda.weights = Eigen::VectorXd::Ones(3);
    lda.bias = 0.0;

    Decision dec = cca_decide(model, lda, dx, {d_att, d_un});
    CHECK(dec.speaker == 0);
    Decision swapped = cca_decide(model, lda, dx, {d_un, d_att});
    CHECK(swapped.speaker == 1);
}
