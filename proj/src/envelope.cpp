#include "aad/envelope.hpp"

#include <cmath>
#include <complex>

namespace aad {

double erb_bandwidth(double f_hz) {
    return 24.7 * (4.37 * f_hz / 1000.0 + 1.0);
}

double hz_to_erb_rate(double f_hz) {
    return 21.4 * std::log10(1.0 + 0.00437 * f_hz);
}

double erb_rate_to_hz(double erbs) {
    return (std::pow(10.0, erbs / 21.4) - 1.0) / 0.00437;
}

std::vector<double> gammatone_center_frequencies(const GammatoneConfig& cfg) {
    if (cfg.n_filters < 1 || !(cfg.f_min > 0.0) || !(cfg.f_max > cfg.f_min)) {
        throw ParameterError("gammatone: invalid filterbank configuration");
    }
    const double lo = hz_to_erb_rate(cfg.f_min);
    const double hi = hz_to_erb_rate(cfg.f_max);
    std::vector<double> cfs(cfg.n_filters);
    for (int i = 0; i < cfg.n_filters; ++i) {
        const double e = cfg.n_filters == 1 ? lo : lo + (hi - lo) * i / (cfg.n_filters - 1);
        cfs[static_cast<std::size_t>(i)] = erb_rate_to_hz(e);
    }
    return cfs;
}

namespace {

// Complex one-pole^order gammatone: pole a = r * exp(i w_c) with
// r = exp(-2 pi * 1.019 * ERB(cf) / fs). The cascade output magnitude is the
// subband envelope (analytic magnitude). Peak gain normalized to 1 at cf.
void add_subband_envelope(const Eigen::VectorXd& x, double fs, double cf, int order,
                          double powerlaw, Eigen::VectorXd& accum) {
    const double bw = 1.019 * erb_bandwidth(cf);
    const double r = std::exp(-2.0 * M_PI * bw / fs);
    const double wc = 2.0 * M_PI * cf / fs;
    const std::complex<double> pole = std::polar(r, wc);
    const double gain = std::pow(1.0 - r, order);

    const Eigen::Index n = x.size();
    std::vector<std::complex<double>> state(static_cast<std::size_t>(order), 0.0);
    for (Eigen::Index t = 0; t < n; ++t) {
        std::complex<double> v = x[t];
        for (int s = 0; s < order; ++s) {
            v += pole * state[static_cast<std::size_t>(s)];
            state[static_cast<std::size_t>(s)] = v;
        }
        accum[t] += std::pow(std::abs(v) * gain, powerlaw);
    }
}

}  // namespace

Signal gammatone_envelope(const Signal& audio, const GammatoneConfig& cfg) {
    validate(audio);
    const std::vector<double> cfs = gammatone_center_frequencies(cfg);
    if (audio.fs < 2.0 * cfs.back()) {
        throw ParameterError("gammatone: sample rate " + std::to_string(audio.fs) +
                             " Hz does not cover the top center frequency " +
                             std::to_string(cfs.back()) + " Hz");
    }
    Eigen::VectorXd env = Eigen::VectorXd::Zero(audio.samples.size());
    for (double cf : cfs) {
        add_subband_envelope(audio.samples, audio.fs, cf, cfg.order, cfg.powerlaw, env);
    }
    return {env, audio.fs};
}

}  // namespace aad
