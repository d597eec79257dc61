#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aad/lagged.hpp"
#include "aad/signal.hpp"

namespace aad {

enum class Penalty { Ridge, Lasso };

struct DecoderMeta {
    std::string flavor;      // e.g. "mmse-avgcorr-ridge"
    double lambda_rel = 0.0;
    bool converged = true;   // lasso solves only
};

// Spatio-temporal backward decoder; weights follow the channel-major lag
// ordering of LaggedDesign (length lags * channels).
struct Decoder {
    Eigen::VectorXd weights;
    int lags = 0;
    int channels = 0;
    DecoderMeta meta;
};

// Reshape helpers for the channel-major weight layout.
Eigen::MatrixXd decoder_as_channels_by_lags(const Decoder& d);
Eigen::VectorXd flatten_channels_by_lags(const Eigen::MatrixXd& w);

// Unnormalized second-order statistics of one training segment:
// Rxx = X^T X, rxs = X^T s.
struct SegmentStats {
    Eigen::MatrixXd rxx;
    Eigen::VectorXd rxs;
    Eigen::Index nsamples = 0;
};

SegmentStats segment_stats(const LaggedDesign& X, const Eigen::Ref<const Eigen::VectorXd>& s);
SegmentStats sum_stats(const std::vector<SegmentStats>& parts);

// ---------------------------------------------------------------------------
// Ridge solve: (Rxx + lambda_rel * z * I) d = rxs with z = trace(Rxx)/dim.
// Throws SingularityError when lambda_rel = 0 and the normal equations are
// rank deficient.
Eigen::VectorXd solve_ridge_weights(const SegmentStats& stats, double lambda_rel);
Decoder solve_ridge(const SegmentStats& stats, double lambda_rel, int lags, int channels);

// ---------------------------------------------------------------------------
// Lasso via ADMM.
//
// Minimizes 0.5*||s - X d||^2 + lambda_rel * q * ||d||_1 with the scale
// anchor q = ||X^T s||_inf, so lambda_rel = 1 is exactly the smallest
// penalty for which the zero decoder is optimal. rho is fixed, no
// over-relaxation; the sparse iterate z is returned, so thresholded
// coefficients are exact zeros.
struct AdmmOptions {
    double rho = 1.0;
    double tol = 1e-6;   // primal and dual residual threshold
    int max_iter = 2000;
};

// Warm-start state carried across a lambda grid on the same problem.
struct LassoState {
    Eigen::VectorXd z, u;
    bool valid = false;
};

struct LassoResult {
    Eigen::VectorXd weights;
    bool converged = false;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

LassoResult solve_lasso_admm(const SegmentStats& stats, double lambda_rel,
                             const AdmmOptions& opts = {}, LassoState* state = nullptr);

// ---------------------------------------------------------------------------
// Training over K segments.

struct TrainingSegment {
    LaggedDesign design;
    Eigen::VectorXd target;  // aligned with design rows
};

// Late integration: one decoder per segment (per-segment scale anchors),
// decoders averaged. `states` optionally carries per-segment lasso
// warm starts across a lambda grid.
Decoder train_avgdec(const std::vector<TrainingSegment>& segments, double lambda_rel,
                     Penalty penalty, const AdmmOptions& opts = {},
                     std::vector<LassoState>* states = nullptr);

// Same, from precomputed per-segment statistics (the cross-validation
// harness reuses statistics across the lambda grid).
Decoder train_avgdec_stats(const std::vector<SegmentStats>& stats, double lambda_rel,
                           Penalty penalty, int lags, int channels, const AdmmOptions& opts = {},
                           std::vector<LassoState>* states = nullptr);

// Early integration: statistics summed over segments (in segment order, so
// the accumulation is order independent), one solve with the global anchor.
Decoder train_avgcorr(const std::vector<TrainingSegment>& segments, double lambda_rel,
                      Penalty penalty, const AdmmOptions& opts = {},
                      LassoState* state = nullptr);

Decoder train_avgcorr_stats(const std::vector<SegmentStats>& stats, double lambda_rel,
                            Penalty penalty, int lags, int channels, const AdmmOptions& opts = {},
                            LassoState* state = nullptr);

// ---------------------------------------------------------------------------
// Applying a decoder.

// Row-wise X * d. Throws DimensionError on column mismatch.
Eigen::VectorXd reconstruct(const Decoder& d, const LaggedDesign& X);

// Attention decision: argmax over speakers of pearson(shat, envelope_i) on
// [start, end). Exact ties go to the lowest index and are flagged.
struct Decision {
    int speaker = 0;
    bool tie = false;
    bool degenerate = false;  // all correlations degenerate
    Eigen::VectorXd correlations;
};

Decision decide(const Eigen::Ref<const Eigen::VectorXd>& shat,
                const std::vector<Eigen::VectorXd>& envelopes,
                Eigen::Index start, Eigen::Index end);

// Default cross-validation grid: 10 log-spaced relative weights in
// [1e-6, 1].
std::vector<double> default_lambda_grid();

}  // namespace aad
