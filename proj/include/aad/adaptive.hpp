#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aad/linear.hpp"
#include "aad/signal.hpp"

namespace aad {

// A-priori channel selection for the training-free decoder.
struct ChannelSubset {
    std::vector<int> indices;          // positions into the recording's channels
    std::vector<std::string> labels;   // resolved names (informational)
};

// Empty `labels` selects all channels. Throws ParameterError when a label is
// unknown or an index is out of range / duplicated.
ChannelSubset resolve_channel_subset(const MultiChannel& eeg, const std::vector<std::string>& labels);
ChannelSubset resolve_channel_subset(const MultiChannel& eeg, const std::vector<int>& indices);

// Documented default 28-label subset for standard 64-channel caps; a
// placeholder spread over the scalp, meant to be overridden from config for
// real recordings.
const std::vector<std::string>& default_adaptive_channel_labels();

MultiChannel restrict_channels(const MultiChannel& eeg, const ChannelSubset& subset);

// Training-free per-window decision: one lasso decoder per speaker on this
// window's design (per-speaker anchor q_i = ||X^T s_i||_inf), attended =
// argmax of the decoder L1 norms.
struct AdaptiveDecision {
    int speaker = 0;
    bool tie = false;
    bool degenerate = false;          // every decoder is all-zero
    std::vector<Decoder> decoders;    // per speaker
    Eigen::VectorXd l1_norms;         // per speaker
    std::vector<bool> converged;      // per speaker ADMM status
    Eigen::VectorXd output_correlations;  // optional secondary marker (empty unless requested)
};

struct AdaptiveOptions {
    int lags = 5;
    double lambda_rel = 0.1;
    AdmmOptions admm;
    bool correlation_marker = false;  // also report corr(X d_i, s_i) per speaker
};

AdaptiveDecision adap_decide(const MultiChannel& window_eeg,
                             const std::vector<Eigen::VectorXd>& envelopes,
                             const AdaptiveOptions& opts,
                             std::vector<LassoState>* states = nullptr);

// Per-window diagnostics row for CSV export.
std::string adaptive_diag_csv_header();
std::string adaptive_diag_csv_row(int window_index, const AdaptiveDecision& d);

}  // namespace aad
