#pragma once

#include <Eigen/Dense>

namespace aad {

// Orthonormal principal-component basis of the training data (columns =
// components, sorted by decreasing variance).
struct PcaBasis {
    Eigen::MatrixXd basis;        // dim x kept
    Eigen::VectorXd mean;         // dim
    Eigen::VectorXd eigenvalues;  // kept, descending
    bool reduced_rank = false;    // fewer components than requested were available
};

// var_keep in (0, 1]: smallest component count whose cumulative variance
// fraction reaches var_keep. Components with negligible variance are never
// kept, so rank-deficient directions are dropped (flagged).
PcaBasis pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims, double var_keep);

// Fixed component count (clamped to the available rank, flagged when
// clamped).
PcaBasis pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims, int n_components);

// Projects rows onto the basis (centering with the stored mean).
Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::Ref<const Eigen::MatrixXd>& rows_by_dims);

}  // namespace aad
