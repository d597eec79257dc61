#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "aad/signal.hpp"

namespace aad {

enum class NoiseColor { White, Pink };

// Forward-model generator: EEG(c) = h_a(c) * s_att + g * h_u(c) * s_unatt
// + sigma * noise, with smooth biphasic temporal response kernels.
struct SynthConfig {
    int channels = 16;
    double duration_s = 600.0;
    double fs = 64.0;
    int n_speakers = 2;
    double unattended_gain = 0.7;   // g in [0, 1]
    double noise_sigma = 1.0;       // relative to per-channel clean-signal RMS
    double envelope_cutoff_hz = 8.0;
    NoiseColor noise = NoiseColor::White;
    // Response kernel support. Longer than the 250 ms backward decoder
    // window, so the forward-model side of CCA has late response structure
    // to capture.
    double kernel_span_ms = 500.0;
    std::uint64_t seed = 1;
    // By default every speaker drives the same response kernel and attention
    // only scales the gain; set to use an independent kernel for unattended
    // speakers instead.
    bool distinct_unattended_kernel = false;
    // Explicit attended response kernel (channels x taps); empty means a
    // seeded biphasic kernel spanning kernel_span_ms.
    Eigen::MatrixXd attended_kernel;
};

// Per-channel biphasic response kernels (channels x taps).
Eigen::MatrixXd make_response_kernels(const SynthConfig& cfg, std::uint64_t stream_seed);

// Deterministic given cfg.seed. Samples are quantized to 32-bit float
// precision so on-disk round trips are bit exact.
Trial generate_trial(const SynthConfig& cfg, int attended);

struct SynthSubject {
    std::string subject_id;
    std::vector<Trial> trials;
    Eigen::MatrixXd attended_kernel;    // as used after jitter
    Eigen::MatrixXd unattended_kernel;
};

// One trial per subject; per-subject kernels perturbed by `trf_jitter`
// (relative perturbation, 0 = identical kernels for everyone). Attended
// speaker alternates across subjects.
std::vector<SynthSubject> generate_subjects(const SynthConfig& cfg, int n_subjects, double trf_jitter);

// Writes manifest + raw-float files in the dataset-directory format.
// Returns the manifest path.
std::string generate_dataset(const SynthConfig& cfg, int n_subjects, double trf_jitter,
                             const std::string& out_dir);

}  // namespace aad
