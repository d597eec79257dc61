#include "aad/cca.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace aad {

namespace {

Eigen::MatrixXd centered(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.rowwise() - m.colwise().mean();
}

double condition_number(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace

CcaModel fit_cca(const LaggedDesign& eeg, const LaggedDesign& env, int n_components,
                 double cond_limit) {
    auto [xd, sd] = align_designs(eeg, env);
    const Eigen::Index n = xd.rows();
    const Eigen::Index p = xd.cols();
    const Eigen::Index q = sd.cols();
    if (n_components < 1 || n_components > std::min(p, q)) {
        throw ParameterError("fit_cca: component count must be in [1, min(" + std::to_string(p) +
                             ", " + std::to_string(q) + ")]");
    }
    if (n < p + q) throw InsufficientDataError("fit_cca: fewer samples than filter coefficients");

    const Eigen::MatrixXd xc = centered(xd.matrix);
    const Eigen::MatrixXd sc = centered(sd.matrix);
    const double scale = 1.0 / static_cast<double>(n - 1);
    const Eigen::MatrixXd sxx = scale * (xc.transpose() * xc);
    const Eigen::MatrixXd sss = scale * (sc.transpose() * sc);
    const Eigen::MatrixXd sxs = scale * (xc.transpose() * sc);

    if (condition_number(sxx) > cond_limit || condition_number(sss) > cond_limit) {
        throw ConditioningError(
            "fit_cca: covariance condition number exceeds " + std::to_string(cond_limit) +
            "; reduce dimensionality with a stronger PCA setting");
    }

    // Symmetric generalized eigenproblem
    //   [0 Sxs; Ssx 0] w = rho [Sxx 0; 0 Sss] w.
    // Eigenvalues come in +/- rho pairs; the top positive ones carry the
    // canonical pairs.
    const Eigen::Index m = p + q;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    a.topRightCorner(p, q) = sxs;
    a.bottomLeftCorner(q, p) = sxs.transpose();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
    b.topLeftCorner(p, p) = sxx;
    b.bottomRightCorner(q, q) = sss;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(a, b);
    if (ges.info() != Eigen::Success) {
        throw ConditioningError("fit_cca: generalized eigendecomposition failed");
    }

    CcaModel model;
    model.wx.resize(p, n_components);
    model.ws.resize(q, n_components);
    model.train_correlations.resize(n_components);
    for (int j = 0; j < n_components; ++j) {
        const Eigen::Index idx = m - 1 - j;  // eigenvalues ascending
        const double rho = ges.eigenvalues()[idx];
        Eigen::VectorXd wx = ges.eigenvectors().col(idx).head(p);
        Eigen::VectorXd ws = ges.eigenvectors().col(idx).tail(q);
        // Unit output variance on training data.
        const double vx = std::sqrt(wx.dot(sxx * wx));
        const double vs = std::sqrt(ws.dot(sss * ws));
        if (vx > 0.0) wx /= vx;
        if (vs > 0.0) ws /= vs;
        // Deterministic sign: largest-magnitude forward coefficient positive.
        Eigen::Index imax = 0;
        ws.cwiseAbs().maxCoeff(&imax);
        if (ws[imax] < 0.0) {
            ws = -ws;
            wx = -wx;
        }
        model.wx.col(j) = wx;
        model.ws.col(j) = ws;
        model.train_correlations[j] = std::min(1.0, std::max(0.0, rho));
    }
    return model;
}

CcaCorrelations cca_correlations(const CcaModel& model, const LaggedDesign& eeg,
                                 const LaggedDesign& env, Eigen::Index start, Eigen::Index end) {
    auto [xd, sd] = align_designs(eeg, env);
    if (end < 0) end = xd.rows();
    if (start < 0 || end > xd.rows()) throw ParameterError("cca_correlations: window out of bounds");
    CcaCorrelations out;
    const Eigen::Index j = model.wx.cols();
    out.rho = Eigen::VectorXd::Zero(j);
    if (end - start < 2) {
        out.degenerate = true;
        return out;
    }
    const Eigen::MatrixXd back = xd.matrix.middleRows(start, end - start) * model.wx;
    const Eigen::MatrixXd fwd = sd.matrix.middleRows(start, end - start) * model.ws;
    bool all_degenerate = true;
    for (Eigen::Index c = 0; c < j; ++c) {
        const PearsonResult p = pearson_full(back.col(c), fwd.col(c));
        out.rho[c] = p.r;
        all_degenerate = all_degenerate && p.degenerate;
    }
    out.degenerate = all_degenerate;
    return out;
}

Eigen::VectorXd cca_feature(const Eigen::Ref<const Eigen::VectorXd>& rho1,
                            const Eigen::Ref<const Eigen::VectorXd>& rho2) {
    if (rho1.size() != rho2.size()) throw DimensionError("cca_feature: component count mismatch");
    return rho1 - rho2;
}

LdaClassifier fit_lda(const std::vector<Eigen::VectorXd>& features, const std::vector<bool>& labels) {
    if (features.empty() || features.size() != labels.size()) {
        throw ParameterError("fit_lda: features and labels must be nonempty and equal length");
    }
    // The augmentation below guarantees both classes are populated even when
    // the raw labels are uniform (e.g. a subject who attends one speaker
    // throughout).
    const Eigen::Index j = features.front().size();
    // Antisymmetric augmentation: every feature appears with both signs, so
    // mu_minus = -mu_plus and the boundary passes through the origin.
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(j);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != j) throw DimensionError("fit_lda: inconsistent feature size");
        mu += labels[i] ? features[i] : Eigen::VectorXd(-features[i]);
    }
    mu /= static_cast<double>(features.size());

    // Deviations of the mirrored copies around -mu are the negations of the
    // original deviations, so one orientation pass yields half the augmented
    // scatter; the pooled denominator 2n-2 reduces to n-1 on that half.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(j, j);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Eigen::VectorXd x = labels[i] ? features[i] : Eigen::VectorXd(-features[i]);
        const Eigen::VectorXd d = x - mu;
        cov += d * d.transpose();
    }
    const double denom = std::max<std::size_t>(1, features.size() - 1);
    cov /= static_cast<double>(denom);

    LdaClassifier lda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const Eigen::VectorXd diag = ldlt.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    const bool singular =
        ldlt.info() != Eigen::Success || !(dmax > 0.0) || diag.minCoeff() <= 1e-10 * dmax;
    if (singular) {
        Eigen::MatrixXd reg = cov;
        reg.diagonal().array() += 1e-6 * std::max(cov.trace(), 1e-300) / static_cast<double>(j);
        lda.weights = reg.ldlt().solve(2.0 * mu);
        lda.regularized = true;
    } else {
        lda.weights = ldlt.solve(2.0 * mu);
    }
    lda.bias = 0.0;
    return lda;
}

Decision cca_decide(const CcaModel& model, const LdaClassifier& lda, const LaggedDesign& eeg,
                    const std::vector<LaggedDesign>& envelopes, Eigen::Index start,
                    Eigen::Index end) {
    const std::size_t n = envelopes.size();
    if (n < 2) throw ParameterError("cca_decide: needs at least two speakers");
    std::vector<Eigen::VectorXd> rho(n);
    bool all_degenerate = true;
    for (std::size_t i = 0; i < n; ++i) {
        CcaCorrelations c = cca_correlations(model, eeg, envelopes[i], start, end);
        rho[i] = c.rho;
        all_degenerate = all_degenerate && c.degenerate;
    }
    Decision dec;
    dec.degenerate = all_degenerate;
    dec.correlations.resize(static_cast<Eigen::Index>(n));
    // Round-robin over pairwise difference features; two speakers reduce to
    // the sign of one LDA score.
    std::vector<int> wins(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            const double score = lda_score(lda, cca_feature(rho[i], rho[k]));
            if (score > 0.0) {
                ++wins[i];
            } else if (score < 0.0) {
                ++wins[k];
            } else {
                ++wins[i];  // exact tie: lower index
                dec.tie = true;
            }
        }
    }
    dec.speaker = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (wins[i] > wins[static_cast<std::size_t>(dec.speaker)]) dec.speaker = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) != dec.speaker &&
            wins[i] == wins[static_cast<std::size_t>(dec.speaker)]) {
            dec.tie = true;
        }
        dec.correlations[static_cast<Eigen::Index>(i)] = rho[i].size() > 0 ? rho[i][0] : 0.0;
    }
    return dec;
}

}  // namespace aad
