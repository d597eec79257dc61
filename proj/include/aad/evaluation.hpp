#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aad/mesd.hpp"
#include "aad/nnsr.hpp"
#include "aad/signal.hpp"

namespace aad {

// A contiguous slice of one (preprocessed) trial used as a cross-validation
// unit; nominal length 60 s.
struct Segment {
    int trial = 0;
    Eigen::Index start = 0;
    Eigen::Index end = 0;  // exclusive

    Eigen::Index length() const { return end - start; }
};

struct SegmentationResult {
    std::vector<Segment> segments;
    long dropped_samples = 0;  // per-trial remainders shorter than seg_len
    int skipped_trials = 0;    // trials shorter than seg_len
};

SegmentationResult segment_dataset(const std::vector<Trial>& trials, double seg_seconds = 60.0);

// Percentage of correct decisions. Throws ParameterError on empty input.
double accuracy(const std::vector<std::pair<int, int>>& predicted_truth);

// ---------------------------------------------------------------------------
// Evaluation protocol options.

struct EvalOptions {
    double seg_seconds = 60.0;
    std::vector<double> taus = {1, 2, 5, 10, 20, 30, 60};
    std::vector<double> lambda_grid;  // empty -> default_lambda_grid()
    int inner_folds = 10;
    int max_components = 10;  // CCA J grid is 1..min(max_components, dims)
    std::uint64_t seed = 1;

    // Preprocessing paths.
    PreprocessOptions linear_path = {20.0, 1.0, 9.0};
    PreprocessOptions nn_path = {64.0, 1.0, 32.0};
    double decoder_ms = 250.0;    // backward lags, linear algorithms
    double encoder_ms = 1250.0;   // forward lags, CCA
    double nn_decoder_ms = 420.0; // backward lags, NN-SR

    // MMSE-adap-lasso channel selection (labels into the recording; empty =
    // all channels).
    std::vector<std::string> adaptive_channels;

    AdmmOptions admm;
    TrainConfig nn_train;
    MesdOptions mesd;
};

// Known algorithm identifiers, in canonical output order.
const std::vector<std::string>& known_algorithms();
bool is_algorithm(const std::string& id);

// ---------------------------------------------------------------------------
// Outer leave-one-segment-out cross-validation.

struct LosoDiagnostics {
    long inner_fits = 0;             // hyperparameter-search solver fits
    bool inner_folds_reduced = false;
    long dropped_samples = 0;
    int skipped_trials = 0;
    std::vector<std::string> fold_model_digests;  // one per outer fold
    std::vector<std::string> messages;            // inner-CV failures etc.
    std::string adaptive_csv;  // per-window L1/convergence rows (mmse-adap-lasso only)
};

// Runs the full per-subject protocol for one algorithm id over all taus.
// Per-algorithm specializations:
//   mmse-avgcorr-*   lambda tuned once per fold by inner CV at the largest tau
//   mmse-avgdec-*    training split into tau windows, decoder per window,
//                    lambda re-tuned per tau
//   cca              J tuned per tau by inner CV; LDA trained on features from
//                    an additional leave-one-segment-out loop inside the fold
//   mmse-adap-lasso  lambda per tau and fold by best accuracy on the training
//                    fold (training free)
//   nn-sr            standard fit on the training fold
//   oracle/anti-oracle/coin   data-free reference deciders for harness checks
PerformanceCurve run_loso_cv(const std::string& algorithm, const std::vector<Trial>& subject_trials,
                             const EvalOptions& opts, LosoDiagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Inner cross-validation over a hyperparameter grid.
//
// Folds are contiguous blocks of training segments. Maximizes the mean
// validation objective; ties resolve to the smallest grid value (the grid
// must be sorted ascending). Candidates whose evaluation throws are skipped
// and reported; if every candidate fails, the error surfaces with the fold
// identity.
struct InnerCvResult {
    int best_index = 0;
    std::vector<double> mean_scores;
    bool folds_reduced = false;
    std::vector<std::string> failures;
};

InnerCvResult inner_cv(
    int n_items, int n_folds, int grid_size,
    const std::function<double(int grid_index, const std::vector<int>& train_items,
                               const std::vector<int>& validation_items)>& objective);

// CSV helpers (plot-ready outputs; parsing restores values exactly).
std::string curve_csv_header();
void append_curve_csv(std::string& out, const PerformanceCurve& curve);
std::vector<PerformanceCurve> parse_curve_csv(const std::string& csv);

std::string mesd_csv_header();
void append_mesd_csv(std::string& out, const std::string& algorithm, const std::string& subject,
                     const MesdResult& r, const MesdOptions& opts);

}  // namespace aad
