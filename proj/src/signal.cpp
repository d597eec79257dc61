#include "aad/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numeric>

namespace aad {

namespace {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

// Modified Bessel I0 by series; converges fast for the beta range used here.
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = 0.5 * x;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Kaiser-windowed sinc lowpass for polyphase resampling, cutoff at
// 1/max(up,down) of the upsampled Nyquist.
Eigen::VectorXd design_resample_filter(int up, int down, int taps_per_phase, double beta) {
    const int m = std::max(up, down);
    const int half = taps_per_phase * m;  // half length in upsampled samples
    const int n = 2 * half + 1;
    Eigen::VectorXd h(n);
    const double cutoff = 1.0 / m;  // fraction of upsampled Nyquist
    const double i0b = bessel_i0(beta);
    for (int i = 0; i < n; ++i) {
        const double t = i - half;
        const double x = cutoff * t;
        const double sinc = (t == 0.0) ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
        const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - (t / half) * (t / half)))) / i0b;
        h[i] = cutoff * sinc * w;
    }
    // Normalize each polyphase branch to unit DC gain: constants become exact
    // fixed points of the resampler.
    for (int p = 0; p < up; ++p) {
        double s = 0.0;
        for (int i = p; i < n; i += up) s += h[i];
        if (s != 0.0) {
            for (int i = p; i < n; i += up) h[i] /= s;
        }
    }
    return h;
}

struct Ratio {
    int up, down;
};

Ratio rational_ratio(double fs_in, double fs_out) {
    if (fs_out <= 0.0 || fs_in <= 0.0) throw ParameterError("resample: sample rates must be positive");
    const double ratio = fs_out / fs_in;
    for (int den = 1; den <= 512; ++den) {
        const double num = ratio * den;
        const double rounded = std::round(num);
        if (rounded >= 1.0 && std::abs(num - rounded) < 1e-9 * den) {
            int up = static_cast<int>(rounded);
            int down = den;
            const int g = std::gcd(up, down);
            return {up / g, down / g};
        }
    }
    throw UnsupportedRateError("resample: ratio " + std::to_string(fs_out) + "/" +
                               std::to_string(fs_in) + " is not a supported rational rate");
}

// Polyphase upfirdn: y[j] = sum_k h[k] x_up[j*down - k + half] with
// x_up the zero-stuffed input; only the nonzero taps are visited.
Eigen::VectorXd upfirdn(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& h,
                        int up, int down) {
    const Eigen::Index t = x.size();
    const int half = static_cast<int>((h.size() - 1) / 2);
    const Eigen::Index n_out = (t * up + down - 1) / down;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_out);
    for (Eigen::Index j = 0; j < n_out; ++j) {
        // Center of the kernel sits at upsampled position j*down.
        const long long center = static_cast<long long>(j) * down;
        // x index i contributes through tap k = center - i*up + half.
        long long i_lo = (center - half + up - 1) / up;  // ceil
        long long i_hi = (center + half) / up;           // floor
        if (i_lo < 0) i_lo = 0;
        if (i_hi > t - 1) i_hi = t - 1;
        double acc = 0.0;
        for (long long i = i_lo; i <= i_hi; ++i) {
            acc += h[center - i * up + half] * x[i];
        }
        y[j] = acc;
    }
    return y;
}

Eigen::VectorXd resample_column(const Eigen::Ref<const Eigen::VectorXd>& x, int up, int down) {
    if (up == 1 && down == 1) return x;
    static constexpr int kTapsPerPhase = 10;
    static constexpr double kKaiserBeta = 8.6;
    const Eigen::VectorXd h = design_resample_filter(up, down, kTapsPerPhase, kKaiserBeta);
    return upfirdn(x, h, up, down);
}

Eigen::VectorXd spectral_bandpass(const Eigen::Ref<const Eigen::VectorXd>& x, double fs,
                                  double f_lo, double f_hi) {
    const Eigen::Index n = x.size();
    if (n < 2) return x;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    std::vector<double> in(x.data(), x.data() + n);
    fft.fwd(spectrum, in);
    const double df = fs / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double f = (k <= n / 2) ? k * df : (n - k) * df;
        if (f < f_lo || f > f_hi) spectrum[static_cast<std::size_t>(k)] = 0.0;
    }
    std::vector<double> out;
    fft.inv(out, spectrum);
    return Eigen::Map<Eigen::VectorXd>(out.data(), n);
}

void check_band(double fs, double f_lo, double f_hi) {
    const double nyquist = fs / 2.0;
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || f_hi > nyquist * (1.0 + 1e-12)) {
        throw ParameterError("bandpass: invalid band edges [" + std::to_string(f_lo) + ", " +
                             std::to_string(f_hi) + "] Hz at fs " + std::to_string(fs));
    }
}

}  // namespace

void validate(const Signal& s) {
    if (!(s.fs > 0.0)) throw ParameterError("Signal: fs must be positive");
    if (!all_finite(s.samples)) throw ParameterError("Signal: non-finite samples");
}

void validate(const MultiChannel& m) {
    if (!(m.fs > 0.0)) throw ParameterError("MultiChannel: fs must be positive");
    if (m.data.cols() < 1) throw ParameterError("MultiChannel: needs at least one channel");
    if (!all_finite(m.data)) throw ParameterError("MultiChannel: non-finite samples");
    if (!m.channel_labels.empty() &&
        static_cast<Eigen::Index>(m.channel_labels.size()) != m.data.cols()) {
        throw DimensionError("MultiChannel: label count != channel count");
    }
}

void validate(const Trial& t) {
    validate(t.eeg);
    if (t.envelopes.size() < 2) throw ParameterError("Trial: needs at least two speaker envelopes");
    for (const Signal& e : t.envelopes) {
        validate(e);
        if (e.fs != t.eeg.fs) throw DimensionError("Trial: envelope fs differs from EEG fs");
        if (e.samples.size() != t.eeg.data.rows()) {
            throw DimensionError("Trial: envelope length differs from EEG length");
        }
    }
    if (t.attended < 0 || t.attended >= static_cast<int>(t.envelopes.size())) {
        throw ParameterError("Trial: attended index out of range");
    }
}

Signal resample(const Signal& sig, double fs_out) {
    const Ratio r = rational_ratio(sig.fs, fs_out);
    return {resample_column(sig.samples, r.up, r.down), fs_out};
}

MultiChannel resample(const MultiChannel& sig, double fs_out) {
    const Ratio r = rational_ratio(sig.fs, fs_out);
    MultiChannel out;
    out.fs = fs_out;
    out.channel_labels = sig.channel_labels;
    for (Eigen::Index c = 0; c < sig.data.cols(); ++c) {
        Eigen::VectorXd col = resample_column(sig.data.col(c), r.up, r.down);
        if (c == 0) out.data.resize(col.size(), sig.data.cols());
        out.data.col(c) = col;
    }
    return out;
}

Signal bandpass(const Signal& sig, double f_lo, double f_hi) {
    check_band(sig.fs, f_lo, f_hi);
    return {spectral_bandpass(sig.samples, sig.fs, f_lo, f_hi), sig.fs};
}

MultiChannel bandpass(const MultiChannel& sig, double f_lo, double f_hi) {
    check_band(sig.fs, f_lo, f_hi);
    MultiChannel out = sig;
    for (Eigen::Index c = 0; c < sig.data.cols(); ++c) {
        out.data.col(c) = spectral_bandpass(sig.data.col(c), sig.fs, f_lo, f_hi);
    }
    return out;
}

PearsonResult pearson_full(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
    if (a.size() < 2) throw ParameterError("pearson: needs at least two samples");
    const double ma = a.mean();
    const double mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma;
    const Eigen::VectorXd db = b.array() - mb;
    const double na = da.norm();
    const double nb = db.norm();
    // Zero-variance detection must absorb the rounding left by subtracting
    // the mean of identical values.
    const double scale = std::sqrt(static_cast<double>(a.size())) * 1e-12;
    if (na <= scale * std::abs(ma) || nb <= scale * std::abs(mb)) return {0.0, true};
    double r = da.dot(db) / (na * nb);
    if (r > 1.0) r = 1.0;
    if (r < -1.0) r = -1.0;
    return {r, false};
}

namespace {

struct Accumulator {
    Eigen::VectorXd sum, sumsq;
    long long n = 0;

    void init(Eigen::Index dim) {
        sum = Eigen::VectorXd::Zero(dim);
        sumsq = Eigen::VectorXd::Zero(dim);
        n = 0;
    }
    void add(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
        sum += rows.colwise().sum().transpose();
        sumsq += rows.array().square().colwise().sum().matrix().transpose();
        n += rows.rows();
    }
    void finish(Eigen::VectorXd& mean, Eigen::VectorXd& scale) const {
        mean = sum / static_cast<double>(n);
        Eigen::VectorXd var =
            sumsq / static_cast<double>(n) - mean.array().square().matrix();
        scale.resize(var.size());
        for (Eigen::Index i = 0; i < var.size(); ++i) {
            const double sd = std::sqrt(std::max(0.0, var[i]));
            scale[i] = sd > 1e-12 ? 1.0 / sd : 1.0;  // zero-variance channels pass through
        }
    }
};

using Ranges = std::vector<std::pair<Eigen::Index, Eigen::Index>>;

Ranges whole(const Trial& t) {
    return {{0, t.eeg.data.rows()}};
}

}  // namespace

TrialNorm compute_norm(const Trial& t, const Ranges& ranges) {
    const Trial* p = &t;
    return compute_norm(std::vector<const Trial*>{p}, {ranges.empty() ? whole(t) : ranges});
}

TrialNorm compute_norm(const std::vector<Trial>& trials,
                       const std::vector<Ranges>& ranges) {
    std::vector<const Trial*> ptrs;
    std::vector<Ranges> rs;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        ptrs.push_back(&trials[i]);
        rs.push_back(i < ranges.size() && !ranges[i].empty() ? ranges[i] : whole(trials[i]));
    }
    return compute_norm(ptrs, rs);
}

TrialNorm compute_norm(const std::vector<const Trial*>& trials,
                       const std::vector<Ranges>& ranges) {
    if (trials.empty() || trials.size() != ranges.size()) {
        throw ParameterError("compute_norm: trials and ranges must be nonempty and equal length");
    }
    Accumulator eeg, env;
    eeg.init(trials[0]->eeg.data.cols());
    env.init(static_cast<Eigen::Index>(trials[0]->envelopes.size()));
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const Trial& t = *trials[i];
        for (const auto& [start, end] : ranges[i]) {
            const Eigen::Index len = end - start;
            eeg.add(t.eeg.data.middleRows(start, len));
            Eigen::MatrixXd envs(len, static_cast<Eigen::Index>(t.envelopes.size()));
            for (std::size_t k = 0; k < t.envelopes.size(); ++k) {
                envs.col(static_cast<Eigen::Index>(k)) = t.envelopes[k].samples.segment(start, len);
            }
            env.add(envs);
        }
    }
    if (eeg.n < 2) throw ParameterError("compute_norm: no samples in the given ranges");
    TrialNorm norm;
    eeg.finish(norm.eeg_mean, norm.eeg_scale);
    env.finish(norm.env_mean, norm.env_scale);
    return norm;
}

Trial apply_norm(const Trial& t, const TrialNorm& norm) {
    if (norm.eeg_mean.size() != t.eeg.data.cols() ||
        norm.env_mean.size() != static_cast<Eigen::Index>(t.envelopes.size())) {
        throw DimensionError("apply_norm: statistics do not match trial shape");
    }
    Trial out = t;
    out.eeg.data = (t.eeg.data.rowwise() - norm.eeg_mean.transpose()).array().rowwise() *
                   norm.eeg_scale.transpose().array();
    for (std::size_t k = 0; k < t.envelopes.size(); ++k) {
        const Eigen::Index i = static_cast<Eigen::Index>(k);
        out.envelopes[k].samples =
            (t.envelopes[k].samples.array() - norm.env_mean[i]) * norm.env_scale[i];
    }
    return out;
}

PreprocessOptions linear_preprocess_options() { return {20.0, 1.0, 9.0}; }
PreprocessOptions nn_preprocess_options() { return {64.0, 1.0, 32.0}; }

Trial preprocess_filter(const Trial& t, const PreprocessOptions& opts) {
    validate(t);
    // Recordings arrive at >= 64 Hz; an already-processed trial re-enters at
    // exactly the target rate (idempotence), anything lower is refused.
    if (t.eeg.fs < opts.fs_out * (1.0 - 1e-12)) {
        throw ParameterError("preprocess: trial fs " + std::to_string(t.eeg.fs) +
                             " Hz below the target rate " + std::to_string(opts.fs_out) + " Hz");
    }
    Trial out = t;
    out.eeg = bandpass(resample(t.eeg, opts.fs_out), opts.f_lo, opts.f_hi);
    for (std::size_t k = 0; k < t.envelopes.size(); ++k) {
        out.envelopes[k] = bandpass(resample(t.envelopes[k], opts.fs_out), opts.f_lo, opts.f_hi);
    }
    return out;
}

namespace {

Trial preprocess_path(const Trial& t, const PreprocessOptions& opts, TrialNorm* stats) {
    Trial filt = preprocess_filter(t, opts);
    TrialNorm norm = compute_norm(filt);
    if (stats) *stats = norm;
    return apply_norm(filt, norm);
}

}  // namespace

Trial preprocess_linear(const Trial& t, TrialNorm* stats) {
    return preprocess_path(t, linear_preprocess_options(), stats);
}

Trial preprocess_nn(const Trial& t, TrialNorm* stats) {
    return preprocess_path(t, nn_preprocess_options(), stats);
}

Trial preprocess_linear(const Trial& t, const TrialNorm& stats) {
    return apply_norm(preprocess_filter(t, linear_preprocess_options()), stats);
}

Trial preprocess_nn(const Trial& t, const TrialNorm& stats) {
    return apply_norm(preprocess_filter(t, nn_preprocess_options()), stats);
}

}  // namespace aad
