#pragma once

#include <Eigen/Dense>

#include "aad/signal.hpp"

namespace aad {

enum class LagDirection {
    AntiCausal,  // EEG side: row t holds [x_c(t) ... x_c(t+L-1)] per channel
    Causal,      // envelope side: row t holds [s(t) s(t-1) ... s(t-L+1)]
};

// Time-lagged design matrix restricted to fully valid rows.
//
// Column ordering is channel-major: all L lags of channel 1, then channel 2,
// and so on. This ordering is the single convention consumed by every
// decoder in the library.
struct LaggedDesign {
    Eigen::MatrixXd matrix;  // rows x cols
    LagDirection direction = LagDirection::AntiCausal;
    int lags = 0;
    int channels = 0;
    Eigen::Index t0 = 0;  // time index of row 0 in the source signal

    Eigen::Index rows() const { return matrix.rows(); }
    Eigen::Index cols() const { return matrix.cols(); }
    // Time index of the last row + 1.
    Eigen::Index t_end() const { return t0 + matrix.rows(); }
};

// Anti-causal designs have rows t = 0 .. T-L (t0 = 0); causal designs have
// rows t = L-1 .. T-1 (t0 = L-1). Throws InsufficientDataError when L > T.
LaggedDesign build_lagged(const MultiChannel& x, int lags, LagDirection direction);
LaggedDesign build_lagged(const Signal& x, int lags, LagDirection direction);
LaggedDesign build_lagged(const Eigen::MatrixXd& time_by_channel, int lags, LagDirection direction);

// Restricts two designs over the same time axis to their common time range,
// so that row i of both refers to the same sample index. Returns copies.
std::pair<LaggedDesign, LaggedDesign> align_designs(const LaggedDesign& a, const LaggedDesign& b);

// Slice of the target sequence aligned with the design rows: entry i is
// s(t0 + i).
Eigen::VectorXd aligned_target(const LaggedDesign& design, const Eigen::Ref<const Eigen::VectorXd>& s);

}  // namespace aad
