#pragma once

#include "aad/signal.hpp"

namespace aad {

// Gammatone filterbank settings for broadband envelope extraction.
// Center frequencies are spaced on the ERB-rate scale.
struct GammatoneConfig {
    int n_filters = 28;
    double f_min = 50.0;     // Hz
    double f_max = 5000.0;   // Hz
    int order = 4;           // cascaded one-pole stages
    double powerlaw = 0.6;   // dynamic-range compression exponent
};

// ERB-rate scale helpers (Glasberg & Moore).
double erb_bandwidth(double f_hz);
double hz_to_erb_rate(double f_hz);
double erb_rate_to_hz(double erbs);

// ERB-spaced center frequencies for a config.
std::vector<double> gammatone_center_frequencies(const GammatoneConfig& cfg);

// Broadband envelope: per subband, the magnitude envelope of a complex
// one-pole^order gammatone filter is compressed with |.|^powerlaw; subbands
// are summed. Output is nonnegative and keeps the input sample rate.
Signal gammatone_envelope(const Signal& audio, const GammatoneConfig& cfg = {});

}  // namespace aad
