#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "aad/linear.hpp"

namespace aad {

// Single-hidden-layer stimulus-reconstruction network: LC inputs, two tanh
// hidden units, one linear output per sample.
struct NnSrModel {
    Eigen::MatrixXd w1;  // 2 x (L*C)
    Eigen::Vector2d b1;
    Eigen::RowVector2d w2;
    double b2 = 0.0;

    Eigen::Index input_dim() const { return w1.cols(); }
    // 2*(LC+1) hidden + 2+1 output.
    Eigen::Index parameter_count() const { return 2 * (w1.cols() + 1) + 3; }
};

// Same shapes as the model; used for analytic gradients.
struct NnSrGradient {
    Eigen::MatrixXd w1;
    Eigen::Vector2d b1;
    Eigen::RowVector2d w2;
    double b2 = 0.0;
    bool degenerate = false;  // constant network output, gradient forced to zero

    double squared_norm() const {
        return w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2 * b2;
    }
};

NnSrModel nnsr_init(Eigen::Index input_dim, std::uint64_t seed);

double nnsr_forward(const NnSrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd nnsr_forward_batch(const NnSrModel& m, const Eigen::Ref<const Eigen::MatrixXd>& X);

struct NnSrLoss {
    double value = 1.0;       // 1 - pearson(shat, s)
    bool degenerate = false;  // constant network output
};

// Throws ParameterError for constant targets or fewer than 2 samples.
NnSrLoss nnsr_loss(const NnSrModel& m, const Eigen::Ref<const Eigen::MatrixXd>& X,
                   const Eigen::Ref<const Eigen::VectorXd>& s);

// Exact analytic gradient of nnsr_loss through the Pearson statistic and
// both layers.
NnSrGradient nnsr_grad(const NnSrModel& m, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& s);

struct TrainConfig {
    Eigen::Index batch_len = 600;   // M samples per loss window
    double lr = 1e-3;
    int epochs = 100;
    std::uint64_t seed = 1;
    double validation_fraction = 0.2;  // trailing fraction of batches
    int patience = 10;                 // epochs without validation improvement
};

struct TrainReport {
    double final_train_rho = 0.0;
    double best_validation_loss = 2.0;
    int epochs_run = 0;
    bool early_stopped = false;
};

// Deterministic mini-batch gradient descent over M-sample windows; returns
// the best model by validation loss. Training batches are the leading
// (1 - validation_fraction) share of windows, visited in fixed order.
// Throws Error on sustained divergence (mean epoch loss > 1.999).
NnSrModel nnsr_train(const std::vector<TrainingSegment>& segments, const TrainConfig& cfg,
                     TrainReport* report = nullptr);

}  // namespace aad
