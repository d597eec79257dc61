#include "aad/lagged.hpp"

namespace aad {

LaggedDesign build_lagged(const Eigen::MatrixXd& x, int lags, LagDirection direction) {
    const Eigen::Index t = x.rows();
    const Eigen::Index c = x.cols();
    if (lags < 1) throw ParameterError("build_lagged: lags must be >= 1");
    if (lags > t) {
        throw InsufficientDataError("build_lagged: " + std::to_string(lags) + " lags exceed " +
                                    std::to_string(t) + " samples");
    }
    LaggedDesign d;
    d.direction = direction;
    d.lags = lags;
    d.channels = static_cast<int>(c);
    const Eigen::Index rows = t - lags + 1;
    d.matrix.resize(rows, c * lags);
    if (direction == LagDirection::AntiCausal) {
        // Row for time t holds x_c(t) .. x_c(t+L-1), channel major.
        d.t0 = 0;
        for (Eigen::Index ch = 0; ch < c; ++ch) {
            for (Eigen::Index l = 0; l < lags; ++l) {
                d.matrix.col(ch * lags + l) = x.col(ch).segment(l, rows);
            }
        }
    } else {
        // Row for time t holds s(t) s(t-1) .. s(t-L+1); first valid t = L-1.
        d.t0 = lags - 1;
        for (Eigen::Index ch = 0; ch < c; ++ch) {
            for (Eigen::Index l = 0; l < lags; ++l) {
                d.matrix.col(ch * lags + l) = x.col(ch).segment(lags - 1 - l, rows);
            }
        }
    }
    return d;
}

LaggedDesign build_lagged(const MultiChannel& x, int lags, LagDirection direction) {
    return build_lagged(x.data, lags, direction);
}

LaggedDesign build_lagged(const Signal& x, int lags, LagDirection direction) {
    Eigen::MatrixXd m = x.samples;
    return build_lagged(m, lags, direction);
}

std::pair<LaggedDesign, LaggedDesign> align_designs(const LaggedDesign& a, const LaggedDesign& b) {
    const Eigen::Index start = std::max(a.t0, b.t0);
    const Eigen::Index end = std::min(a.t_end(), b.t_end());
    if (end <= start) throw InsufficientDataError("align_designs: no common time range");
    LaggedDesign oa = a, ob = b;
    oa.matrix = a.matrix.middleRows(start - a.t0, end - start).eval();
    oa.t0 = start;
    ob.matrix = b.matrix.middleRows(start - b.t0, end - start).eval();
    ob.t0 = start;
    return {std::move(oa), std::move(ob)};
}

Eigen::VectorXd aligned_target(const LaggedDesign& design, const Eigen::Ref<const Eigen::VectorXd>& s) {
    if (design.t_end() > s.size()) throw DimensionError("aligned_target: target shorter than design range");
    return s.segment(design.t0, design.rows());
}

}  // namespace aad
