#include "aad/pca.hpp"

#include <Eigen/Eigenvalues>

#include "aad/common.hpp"

namespace aad {

namespace {

struct EigenSorted {
    Eigen::MatrixXd vectors;  // columns, by descending eigenvalue
    Eigen::VectorXd values;
    Eigen::VectorXd mean;
};

EigenSorted covariance_eigen(const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims) {
    const Eigen::Index n = rows_by_dims.rows();
    if (n < 2) throw ParameterError("pca_fit: needs at least two rows");
    EigenSorted out;
    out.mean = rows_by_dims.colwise().mean();
    const Eigen::MatrixXd centered = rows_by_dims.rowwise() - out.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw Error("pca_fit: eigendecomposition failed");
    const Eigen::Index d = cov.rows();
    out.vectors.resize(d, d);
    out.values.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {  // ascending -> descending
        out.vectors.col(i) = es.eigenvectors().col(d - 1 - i);
        out.values[i] = std::max(0.0, es.eigenvalues()[d - 1 - i]);
    }
    return out;
}

PcaBasis keep_components(EigenSorted es, Eigen::Index requested, bool warn_short) {
    const double total = es.values.sum();
    const double floor = total > 0 ? 1e-12 * total : 0.0;
    Eigen::Index rank = 0;
    while (rank < es.values.size() && es.values[rank] > floor) ++rank;
    PcaBasis basis;
    const Eigen::Index kept = std::min(requested, rank);
    basis.reduced_rank = warn_short && kept < requested;
    basis.basis = es.vectors.leftCols(kept);
    basis.eigenvalues = es.values.head(kept);
    basis.mean = es.mean;
    return basis;
}

}  // namespace

PcaBasis pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims, double var_keep) {
    if (!(var_keep > 0.0) || var_keep > 1.0) {
        throw ParameterError("pca_fit: var_keep must be in (0, 1]");
    }
    EigenSorted es = covariance_eigen(rows_by_dims);
    const double total = es.values.sum();
    Eigen::Index requested = es.values.size();
    if (total > 0.0 && var_keep < 1.0) {
        double cum = 0.0;
        for (Eigen::Index i = 0; i < es.values.size(); ++i) {
            cum += es.values[i];
            if (cum / total >= var_keep) {
                requested = i + 1;
                break;
            }
        }
    }
    return keep_components(std::move(es), requested, /*warn_short=*/false);
}

PcaBasis pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims, int n_components) {
    if (n_components < 1 || n_components > rows_by_dims.cols()) {
        throw ParameterError("pca_fit: component count out of range");
    }
    return keep_components(covariance_eigen(rows_by_dims), n_components, /*warn_short=*/true);
}

Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims) {
    if (rows_by_dims.cols() != basis.mean.size()) {
        throw DimensionError("pca_project: dimension mismatch with basis");
    }
    return (rows_by_dims.rowwise() - basis.mean.transpose()) * basis.basis;
}

}  // namespace aad
