#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aad/lagged.hpp"
#include "aad/linear.hpp"
#include "aad/pca.hpp"

namespace aad {

// Joint backward (EEG) / forward (envelope) filter set: the J outputs of
// Wx^T x(t) and Ws^T s(t) are maximally correlated pairwise and mutually
// uncorrelated. Canonical correlations are sorted non-increasing and the
// sign of each component is fixed so the forward filter's largest-magnitude
// coefficient is positive.
struct CcaModel {
    Eigen::MatrixXd wx;                  // (L*C') x J backward filters
    Eigen::MatrixXd ws;                  // L_a x J forward filters
    Eigen::VectorXd train_correlations;  // J, descending, in [0, 1]
    PcaBasis pca;                        // channel-space projection (may be identity-sized)
    bool pca_active = false;
};

// Fits the top-J canonical pairs by solving the symmetric generalized
// eigenproblem
//   [0 Sxs; Ssx 0] w = rho [Sxx 0; 0 Sss] w
// on sample covariances of the aligned designs. Throws ConditioningError
// when either covariance has condition number above cond_limit (stronger
// PCA reduction is the remedy), ParameterError when J exceeds
// min(L*C', L_a).
CcaModel fit_cca(const LaggedDesign& eeg, const LaggedDesign& env, int n_components,
                 double cond_limit = 1e12);

struct CcaCorrelations {
    Eigen::VectorXd rho;  // J per-component Pearson correlations
    bool degenerate = false;
};

// Per-component Pearson correlation between backward and forward outputs on
// the aligned row window [start, end) (whole range by default).
CcaCorrelations cca_correlations(const CcaModel& model, const LaggedDesign& eeg,
                                 const LaggedDesign& env, Eigen::Index start = 0,
                                 Eigen::Index end = -1);

// Difference feature f = rho_1 - rho_2 (speaker order as passed).
Eigen::VectorXd cca_feature(const Eigen::Ref<const Eigen::VectorXd>& rho1,
                            const Eigen::Ref<const Eigen::VectorXd>& rho2);

// ---------------------------------------------------------------------------
// LDA on difference features.
//
// Training features are augmented with their negations (flipped labels), so
// the decision boundary passes through the origin and the bias is exactly
// zero. With J = 1 this reduces to the sign of the correlation difference.
struct LdaClassifier {
    Eigen::VectorXd weights;  // J
    double bias = 0.0;
    bool regularized = false;  // pooled covariance needed a ridge
};

// labels[i] true means speaker 1 (index 0) attended for features[i].
LdaClassifier fit_lda(const std::vector<Eigen::VectorXd>& features, const std::vector<bool>& labels);

inline double lda_score(const LdaClassifier& lda, const Eigen::Ref<const Eigen::VectorXd>& f) {
    return lda.weights.dot(f) + lda.bias;
}

// ---------------------------------------------------------------------------
// Decision.
//
// Two speakers: sign of the LDA score on f = rho_1 - rho_2. More speakers:
// round-robin over pairwise scores, most wins, ties to the lowest index.
Decision cca_decide(const CcaModel& model, const LdaClassifier& lda, const LaggedDesign& eeg,
                    const std::vector<LaggedDesign>& envelopes, Eigen::Index start = 0,
                    Eigen::Index end = -1);

}  // namespace aad
