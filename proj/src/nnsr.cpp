#include "aad/nnsr.hpp"

#include <cmath>

#include "aad/random.hpp"
#include "aad/signal.hpp"

namespace aad {

NnSrModel nnsr_init(Eigen::Index input_dim, std::uint64_t seed) {
    if (input_dim < 1) throw ParameterError("nnsr_init: input dimension must be positive");
    Rng rng(seed);
    // Uniform in [-a, a] with a = 1/sqrt(LC) keeps tanh near its linear
    // regime initially.
    const double a = 1.0 / std::sqrt(static_cast<double>(input_dim));
    NnSrModel m;
    m.w1.resize(2, input_dim);
    for (Eigen::Index r = 0; r < 2; ++r) {
        for (Eigen::Index c = 0; c < input_dim; ++c) m.w1(r, c) = rng.uniform(-a, a);
    }
    m.b1 << rng.uniform(-a, a), rng.uniform(-a, a);
    m.w2 << rng.uniform(-a, a), rng.uniform(-a, a);
    m.b2 = rng.uniform(-a, a);
    return m;
}

double nnsr_forward(const NnSrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != m.w1.cols()) throw DimensionError("nnsr_forward: input dimension mismatch");
    const Eigen::Vector2d h = (m.w1 * x + m.b1).array().tanh();
    return m.w2.dot(h) + m.b2;
}

Eigen::VectorXd nnsr_forward_batch(const NnSrModel& m, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.cols() != m.w1.cols()) throw DimensionError("nnsr_forward: input dimension mismatch");
    const Eigen::MatrixXd h = ((X * m.w1.transpose()).rowwise() + m.b1.transpose()).array().tanh();
    return (h * m.w2.transpose()).array() + m.b2;
}

NnSrLoss nnsr_loss(const NnSrModel& m, const Eigen::Ref<const Eigen::MatrixXd>& X,
                   const Eigen::Ref<const Eigen::VectorXd>& s) {
    if (X.rows() != s.size()) throw DimensionError("nnsr_loss: batch size mismatch");
    if (s.size() < 2) throw ParameterError("nnsr_loss: needs at least two samples");
    const Eigen::VectorXd sc = s.array() - s.mean();
    if (sc.norm() == 0.0) throw ParameterError("nnsr_loss: constant target");
    const Eigen::VectorXd shat = nnsr_forward_batch(m, X);
    const PearsonResult p = pearson_full(shat, s);
    if (p.degenerate) return {1.0, true};
    return {1.0 - p.r, false};
}

NnSrGradient nnsr_grad(const NnSrModel& m, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& s) {
    if (X.rows() != s.size()) throw DimensionError("nnsr_grad: batch size mismatch");
    if (s.size() < 2) throw ParameterError("nnsr_grad: needs at least two samples");
    const Eigen::VectorXd sc = s.array() - s.mean();
    const double ns = sc.norm();
    if (ns == 0.0) throw ParameterError("nnsr_grad: constant target");

    NnSrGradient g;
    g.w1 = Eigen::MatrixXd::Zero(2, m.w1.cols());
    g.b1.setZero();
    g.w2.setZero();
    g.b2 = 0.0;

    const Eigen::MatrixXd pre = (X * m.w1.transpose()).rowwise() + m.b1.transpose();  // M x 2
    const Eigen::MatrixXd h = pre.array().tanh();
    const Eigen::VectorXd shat = (h * m.w2.transpose()).array() + m.b2;

    const double my = shat.mean();
    const Eigen::VectorXd yc = shat.array() - my;
    const double ny = yc.norm();
    if (ny <= std::sqrt(static_cast<double>(shat.size())) * 1e-12 * std::abs(my)) {
        g.degenerate = true;  // constant output: Pearson undefined, gradient forced to zero
        return g;
    }
    const double rho = yc.dot(sc) / (ny * ns);

    // d(1-rho)/d shat = -(sc/(ny*ns) - rho*yc/ny^2); the centering projector
    // is absorbed because sc and yc are already zero mean.
    const Eigen::VectorXd dloss_dy = -(sc / (ny * ns) - (rho / (ny * ny)) * yc);

    // Output layer.
    g.w2 = dloss_dy.transpose() * h;
    g.b2 = dloss_dy.sum();
    // Hidden layer through tanh'.
    const Eigen::MatrixXd delta =
        (dloss_dy * m.w2).array() * (1.0 - h.array().square());  // M x 2
    g.w1 = delta.transpose() * X;
    g.b1 = delta.colwise().sum().transpose();
    return g;
}

namespace {

void apply_update(NnSrModel& m, const NnSrGradient& g, double lr) {
    m.w1 -= lr * g.w1;
    m.b1 -= lr * g.b1;
    m.w2 -= lr * g.w2;
    m.b2 -= lr * g.b2;
}

struct Batch {
    Eigen::MatrixXd x;
    Eigen::VectorXd s;
};

}  // namespace

NnSrModel nnsr_train(const std::vector<TrainingSegment>& segments, const TrainConfig& cfg,
                     TrainReport* report) {
    if (segments.empty()) throw ParameterError("nnsr_train: no segments");
    if (cfg.batch_len < 2) throw ParameterError("nnsr_train: batch_len must be >= 2");

    // Cut every segment into disjoint M-sample loss windows.
    std::vector<Batch> batches;
    for (const TrainingSegment& seg : segments) {
        const Eigen::Index rows = seg.design.rows();
        for (Eigen::Index start = 0; start + cfg.batch_len <= rows; start += cfg.batch_len) {
            Batch b;
            b.x = seg.design.matrix.middleRows(start, cfg.batch_len);
            b.s = seg.target.segment(start, cfg.batch_len);
            if ((b.s.array() - b.s.mean()).matrix().norm() == 0.0) continue;  // constant target window
            batches.push_back(std::move(b));
        }
    }
    if (batches.empty()) throw InsufficientDataError("nnsr_train: no usable training windows");

    const std::size_t n_val = std::min(
        batches.size() - 1,
        static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(batches.size()))));
    const std::size_t n_train = batches.size() - n_val;

    NnSrModel model = nnsr_init(segments.front().design.cols(), cfg.seed);
    NnSrModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    int epochs_run = 0;
    bool early = false;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < n_train; ++b) {
            const NnSrLoss loss = nnsr_loss(model, batches[b].x, batches[b].s);
            epoch_loss += loss.value;
            const NnSrGradient g = nnsr_grad(model, batches[b].x, batches[b].s);
            apply_update(model, g, cfg.lr);
        }
        epoch_loss /= static_cast<double>(n_train);
        ++epochs_run;
        if (epoch_loss > 1.999) {
            throw Error("nnsr_train: diverged (mean epoch loss " + std::to_string(epoch_loss) +
                        " at epoch " + std::to_string(epoch) + ")");
        }
        double val_loss = 0.0;
        if (n_val > 0) {
            for (std::size_t b = n_train; b < batches.size(); ++b) {
                val_loss += nnsr_loss(model, batches[b].x, batches[b].s).value;
            }
            val_loss /= static_cast<double>(n_val);
        } else {
            val_loss = epoch_loss;
        }
        if (val_loss < best_val) {
            best_val = val_loss;
            best = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            early = true;
            break;
        }
    }

    if (report) {
        double rho_sum = 0.0;
        for (std::size_t b = 0; b < n_train; ++b) {
            rho_sum += 1.0 - nnsr_loss(best, batches[b].x, batches[b].s).value;
        }
        report->final_train_rho = rho_sum / static_cast<double>(n_train);
        report->best_validation_loss = best_val;
        report->epochs_run = epochs_run;
        report->early_stopped = early;
    }
    return best;
}

}  // namespace aad
