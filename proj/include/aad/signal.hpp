#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "aad/common.hpp"

namespace aad {

// Single-channel signal (audio or envelope).
struct Signal {
    Eigen::VectorXd samples;
    double fs = 0.0;  // Hz

    Eigen::Index size() const { return samples.size(); }
    double duration_s() const { return fs > 0 ? static_cast<double>(samples.size()) / fs : 0.0; }
};

// C-channel recording, time along rows (T x C).
struct MultiChannel {
    Eigen::MatrixXd data;  // T x C
    double fs = 0.0;
    std::vector<std::string> channel_labels;

    Eigen::Index samples() const { return data.rows(); }
    Eigen::Index channels() const { return data.cols(); }
};

// One labeled recording: EEG plus per-speaker envelopes, sample aligned.
struct Trial {
    MultiChannel eeg;
    std::vector<Signal> envelopes;
    int attended = 0;  // index into envelopes
    std::string subject_id;
};

// Throws if the invariants do not hold (finite values, matching fs/lengths,
// attended < number of envelopes).
void validate(const Signal& s);
void validate(const MultiChannel& m);
void validate(const Trial& t);

// ---------------------------------------------------------------------------
// Sample-rate conversion.
//
// Rational-ratio polyphase resampling with a Kaiser-windowed sinc anti-alias
// filter. Each polyphase branch is normalized to unit DC gain, so constants
// are exact fixed points. Throws UnsupportedRateError when fs_out/fs_in is
// not a ratio of small integers (denominator up to 512).
Signal resample(const Signal& sig, double fs_out);
MultiChannel resample(const MultiChannel& sig, double fs_out);

// ---------------------------------------------------------------------------
// Band selection.
//
// Zero-phase band filtering implemented as a spectral projection: the DFT of
// the signal is masked with the ideal band indicator for [f_lo, f_hi] and
// inverted. The projection has exactly zero phase (no group-delay bias on
// decoder lags), infinite stopband attenuation on masked bins, and is
// idempotent. f_hi may equal the Nyquist frequency, in which case only the
// high-pass edge acts.
Signal bandpass(const Signal& sig, double f_lo, double f_hi);
MultiChannel bandpass(const MultiChannel& sig, double f_lo, double f_hi);

// ---------------------------------------------------------------------------
// Pearson correlation.

struct PearsonResult {
    double r = 0.0;
    bool degenerate = false;  // one input had zero variance; r reported as 0
};

PearsonResult pearson_full(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b);

inline double pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b) {
    return pearson_full(a, b).r;
}

// ---------------------------------------------------------------------------
// Normalization (zero mean / unit variance per EEG channel and per envelope).
//
// Statistics are a separate value so they can be estimated on training data
// and applied to held-out data.
struct TrialNorm {
    Eigen::VectorXd eeg_mean, eeg_scale;  // per channel; scale = 1/std
    Eigen::VectorXd env_mean, env_scale;  // per speaker
};

// Ranges are [start, end) sample intervals of this trial to estimate from;
// empty list means the whole trial.
TrialNorm compute_norm(const Trial& t,
                       const std::vector<std::pair<Eigen::Index, Eigen::Index>>& ranges = {});

// Pools statistics over several trials (and optional per-trial ranges).
TrialNorm compute_norm(const std::vector<Trial>& trials,
                       const std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>>& ranges);

// Pools statistics over explicit (trial, ranges) pairs; a trial not listed
// contributes nothing.
TrialNorm compute_norm(const std::vector<const Trial*>& trials,
                       const std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>>& ranges);

Trial apply_norm(const Trial& t, const TrialNorm& norm);

// ---------------------------------------------------------------------------
// Preprocessing pipelines.
//
// Linear path: resample to 20 Hz, band 1-9 Hz. Neural-network path: resample
// to 64 Hz, band 1-32 Hz. Both then normalize per channel / per envelope.

struct PreprocessOptions {
    double fs_out = 20.0;
    double f_lo = 1.0;
    double f_hi = 9.0;
};

PreprocessOptions linear_preprocess_options();
PreprocessOptions nn_preprocess_options();

// Filtering + resampling only (no normalization); used by the evaluation
// harness, which estimates normalization per training fold.
Trial preprocess_filter(const Trial& t, const PreprocessOptions& opts);

// Full pipeline; normalization statistics are estimated on this trial and
// returned through `stats` when non-null.
Trial preprocess_linear(const Trial& t, TrialNorm* stats = nullptr);
Trial preprocess_nn(const Trial& t, TrialNorm* stats = nullptr);

// Full pipeline applying externally estimated statistics (e.g. from the
// training fold).
Trial preprocess_linear(const Trial& t, const TrialNorm& stats);
Trial preprocess_nn(const Trial& t, const TrialNorm& stats);

// Lag counts from milliseconds at a given rate.
inline int lags_from_ms(double ms, double fs) {
    return static_cast<int>(std::lround(ms / 1000.0 * fs));
}

}  // namespace aad
