#include "aad/linear.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace aad {

Eigen::MatrixXd decoder_as_channels_by_lags(const Decoder& d) {
    if (d.weights.size() != static_cast<Eigen::Index>(d.lags) * d.channels) {
        throw DimensionError("decoder_as_channels_by_lags: weight length != lags * channels");
    }
    Eigen::MatrixXd w(d.channels, d.lags);
    for (int c = 0; c < d.channels; ++c) {
        w.row(c) = d.weights.segment(static_cast<Eigen::Index>(c) * d.lags, d.lags).transpose();
    }
    return w;
}

Eigen::VectorXd flatten_channels_by_lags(const Eigen::MatrixXd& w) {
    Eigen::VectorXd v(w.size());
    for (Eigen::Index c = 0; c < w.rows(); ++c) {
        v.segment(c * w.cols(), w.cols()) = w.row(c).transpose();
    }
    return v;
}

SegmentStats segment_stats(const LaggedDesign& X, const Eigen::Ref<const Eigen::VectorXd>& s) {
    if (X.rows() != s.size()) throw DimensionError("segment_stats: design rows != target length");
    SegmentStats st;
    st.rxx = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    st.rxx.selfadjointView<Eigen::Lower>().rankUpdate(X.matrix.transpose());
    st.rxx.triangularView<Eigen::StrictlyUpper>() = st.rxx.transpose();
    st.rxs = X.matrix.transpose() * s;
    st.nsamples = X.rows();
    return st;
}

SegmentStats sum_stats(const std::vector<SegmentStats>& parts) {
    if (parts.empty()) throw ParameterError("sum_stats: no segments");
    SegmentStats total = parts.front();
    for (std::size_t k = 1; k < parts.size(); ++k) {
        if (parts[k].rxx.rows() != total.rxx.rows()) {
            throw DimensionError("sum_stats: mismatched statistic dimensions");
        }
        total.rxx += parts[k].rxx;
        total.rxs += parts[k].rxs;
        total.nsamples += parts[k].nsamples;
    }
    return total;
}

Eigen::VectorXd solve_ridge_weights(const SegmentStats& stats, double lambda_rel) {
    if (lambda_rel < 0.0) throw ParameterError("solve_ridge: negative regularization");
    const Eigen::Index dim = stats.rxx.rows();
    const double z = stats.rxx.trace() / static_cast<double>(dim);
    Eigen::MatrixXd a = stats.rxx;
    a.diagonal().array() += lambda_rel * z;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (lambda_rel == 0.0) {
        // The normal equations are consistent even when X^T X is singular, so
        // rank deficiency has to be read off the factorization itself.
        const Eigen::VectorXd diag = ldlt.vectorD();
        const double dmax = diag.cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
            diag.minCoeff() <= 1e-12 * dmax) {
            throw SingularityError(
                "solve_ridge: X^T X is rank deficient at lambda_rel = 0 (dim " +
                std::to_string(dim) + ", pivot ratio " +
                std::to_string(dmax > 0 ? diag.minCoeff() / dmax : 0.0) + ")");
        }
    }
    Eigen::VectorXd d = ldlt.solve(stats.rxs);
    const double rhs_norm = stats.rxs.norm();
    if (rhs_norm > 0.0) {
        double rel_res = (a * d - stats.rxs).norm() / rhs_norm;
        if (rel_res > 1e-8) {
            // One step of iterative refinement before giving up.
            d += ldlt.solve(stats.rxs - a * d);
            rel_res = (a * d - stats.rxs).norm() / rhs_norm;
            if (rel_res > 1e-8) {
                throw SingularityError(
                    "solve_ridge: normal equations rank deficient at lambda_rel = " +
                    std::to_string(lambda_rel) + " (relative residual " + std::to_string(rel_res) +
                    ", dim " + std::to_string(dim) + ")");
            }
        }
    }
    return d;
}

Decoder solve_ridge(const SegmentStats& stats, double lambda_rel, int lags, int channels) {
    Decoder d;
    d.weights = solve_ridge_weights(stats, lambda_rel);
    d.lags = lags;
    d.channels = channels;
    d.meta.flavor = "ridge";
    d.meta.lambda_rel = lambda_rel;
    return d;
}

namespace {

inline double soft_threshold(double v, double k) {
    if (v > k) return v - k;
    if (v < -k) return v + k;
    return 0.0;
}

}  // namespace

LassoResult solve_lasso_admm(const SegmentStats& stats, double lambda_rel,
                             const AdmmOptions& opts, LassoState* state) {
    if (lambda_rel < 0.0) throw ParameterError("solve_lasso_admm: negative regularization");
    const Eigen::Index dim = stats.rxx.rows();
    const double q = stats.rxs.lpNorm<Eigen::Infinity>();
    const double penalty = lambda_rel * q;
    const double kappa = penalty / opts.rho;

    // Subgradient condition: penalty >= ||X^T s||_inf makes the zero decoder
    // optimal, so lambda_rel >= 1 is returned exactly.
    if (penalty >= q && lambda_rel >= 1.0) {
        LassoResult res;
        res.weights = Eigen::VectorXd::Zero(dim);
        res.converged = true;
        if (state) {
            state->z = res.weights;
            state->u = stats.rxs / opts.rho;  // the ADMM fixed point at zero
            state->valid = true;
        }
        return res;
    }

    Eigen::MatrixXd a = stats.rxx;
    a.diagonal().array() += opts.rho;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SingularityError("solve_lasso_admm: X^T X + rho I not positive definite");
    }

    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    if (state && state->valid && state->z.size() == dim) {
        z = state->z;
        u = state->u;
    }

    LassoResult res;
    Eigen::VectorXd x(dim), z_old(dim);
    for (int it = 1; it <= opts.max_iter; ++it) {
        x = llt.solve(stats.rxs + opts.rho * (z - u));
        z_old = z;
        z = (x + u).unaryExpr([kappa](double v) { return soft_threshold(v, kappa); });
        u += x - z;
        res.iterations = it;
        res.primal_residual = (x - z).norm();
        res.dual_residual = opts.rho * (z - z_old).norm();
        if (res.primal_residual < opts.tol && res.dual_residual < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.weights = z;  // sparse iterate: thresholded coordinates are exact zeros
    if (state) {
        state->z = z;
        state->u = u;
        state->valid = true;
    }
    return res;
}

namespace {

Decoder solve_penalized(const SegmentStats& stats, double lambda_rel, Penalty penalty,
                        const AdmmOptions& opts, LassoState* state, int lags, int channels) {
    if (penalty == Penalty::Ridge) return solve_ridge(stats, lambda_rel, lags, channels);
    const LassoResult r = solve_lasso_admm(stats, lambda_rel, opts, state);
    Decoder d;
    d.weights = r.weights;
    d.lags = lags;
    d.channels = channels;
    d.meta.flavor = "lasso";
    d.meta.lambda_rel = lambda_rel;
    d.meta.converged = r.converged;
    return d;
}

}  // namespace

Decoder train_avgdec_stats(const std::vector<SegmentStats>& stats, double lambda_rel,
                           Penalty penalty, int lags, int channels, const AdmmOptions& opts,
                           std::vector<LassoState>* states) {
    if (stats.empty()) throw ParameterError("train_avgdec: no segments");
    if (states && states->size() != stats.size()) states->resize(stats.size());
    Decoder mean;
    bool all_converged = true;
    for (std::size_t k = 0; k < stats.size(); ++k) {
        Decoder dk;
        try {
            dk = solve_penalized(stats[k], lambda_rel, penalty, opts,
                                 states ? &(*states)[k] : nullptr, lags, channels);
        } catch (const Error& e) {
            throw SingularityError("train_avgdec: segment " + std::to_string(k) + ": " + e.what());
        }
        all_converged = all_converged && dk.meta.converged;
        if (k == 0) {
            mean = dk;
        } else {
            mean.weights += dk.weights;
        }
    }
    mean.weights /= static_cast<double>(stats.size());
    mean.meta.flavor = penalty == Penalty::Ridge ? "mmse-avgdec-ridge" : "mmse-avgdec-lasso";
    mean.meta.lambda_rel = lambda_rel;
    mean.meta.converged = all_converged;
    return mean;
}

Decoder train_avgdec(const std::vector<TrainingSegment>& segments, double lambda_rel,
                     Penalty penalty, const AdmmOptions& opts,
                     std::vector<LassoState>* states) {
    if (segments.empty()) throw ParameterError("train_avgdec: no segments");
    std::vector<SegmentStats> stats;
    stats.reserve(segments.size());
    for (const TrainingSegment& seg : segments) stats.push_back(segment_stats(seg.design, seg.target));
    return train_avgdec_stats(stats, lambda_rel, penalty, segments.front().design.lags,
                              segments.front().design.channels, opts, states);
}

Decoder train_avgcorr_stats(const std::vector<SegmentStats>& stats, double lambda_rel,
                            Penalty penalty, int lags, int channels, const AdmmOptions& opts,
                            LassoState* state) {
    if (stats.empty()) throw ParameterError("train_avgcorr: no segments");
    const SegmentStats total = sum_stats(stats);
    Decoder d = solve_penalized(total, lambda_rel, penalty, opts, state, lags, channels);
    d.meta.flavor = penalty == Penalty::Ridge ? "mmse-avgcorr-ridge" : "mmse-avgcorr-lasso";
    return d;
}

Decoder train_avgcorr(const std::vector<TrainingSegment>& segments, double lambda_rel,
                      Penalty penalty, const AdmmOptions& opts, LassoState* state) {
    if (segments.empty()) throw ParameterError("train_avgcorr: no segments");
    std::vector<SegmentStats> parts;
    parts.reserve(segments.size());
    for (const TrainingSegment& seg : segments) {
        parts.push_back(segment_stats(seg.design, seg.target));
    }
    return train_avgcorr_stats(parts, lambda_rel, penalty, segments.front().design.lags,
                               segments.front().design.channels, opts, state);
}

Eigen::VectorXd reconstruct(const Decoder& d, const LaggedDesign& X) {
    if (X.cols() != d.weights.size()) {
        throw DimensionError("reconstruct: design cols " + std::to_string(X.cols()) +
                             " != decoder length " + std::to_string(d.weights.size()));
    }
    return X.matrix * d.weights;
}

Decision decide(const Eigen::Ref<const Eigen::VectorXd>& shat,
                const std::vector<Eigen::VectorXd>& envelopes,
                Eigen::Index start, Eigen::Index end) {
    if (envelopes.size() < 2) throw ParameterError("decide: needs at least two envelopes");
    if (start < 0 || end > shat.size() || end - start < 2) {
        throw ParameterError("decide: window out of bounds");
    }
    Decision dec;
    dec.correlations.resize(static_cast<Eigen::Index>(envelopes.size()));
    bool all_degenerate = true;
    for (std::size_t i = 0; i < envelopes.size(); ++i) {
        if (envelopes[i].size() != shat.size()) {
            throw DimensionError("decide: envelope length != reconstruction length");
        }
        const PearsonResult p =
            pearson_full(shat.segment(start, end - start), envelopes[i].segment(start, end - start));
        dec.correlations[static_cast<Eigen::Index>(i)] = p.r;
        all_degenerate = all_degenerate && p.degenerate;
    }
    dec.degenerate = all_degenerate;
    dec.speaker = 0;
    for (Eigen::Index i = 1; i < dec.correlations.size(); ++i) {
        if (dec.correlations[i] > dec.correlations[dec.speaker]) dec.speaker = static_cast<int>(i);
    }
    for (Eigen::Index i = 0; i < dec.correlations.size(); ++i) {
        if (i != dec.speaker && dec.correlations[i] == dec.correlations[dec.speaker]) {
            dec.tie = true;
            break;
        }
    }
    return dec;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid(10);
    for (int i = 0; i < 10; ++i) {
        grid[static_cast<std::size_t>(i)] = std::pow(10.0, -6.0 + 6.0 * i / 9.0);
    }
    return grid;
}

}  // namespace aad
