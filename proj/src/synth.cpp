#include "aad/synth.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

#include "aad/dataset.hpp"
#include "aad/random.hpp"

namespace aad {

namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void quantize_f32(Eigen::Ref<Eigen::MatrixXd> m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = f32(m(r, c));
    }
}

Eigen::VectorXd white_noise(Eigen::Index n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

// 1/f amplitude shaping in the frequency domain, unit variance.
Eigen::VectorXd pink_noise(Eigen::Index n, Rng& rng) {
    Eigen::VectorXd w = white_noise(n, rng);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    std::vector<double> in(w.data(), w.data() + n);
    fft.fwd(spec, in);
    for (Eigen::Index k = 1; k < n; ++k) {
        const double f = static_cast<double>(k <= n / 2 ? k : n - k);
        spec[static_cast<std::size_t>(k)] /= std::sqrt(f);
    }
    spec[0] = 0.0;
    std::vector<double> out;
    fft.inv(out, spec);
    Eigen::Map<Eigen::VectorXd> v(out.data(), n);
    const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(n));
    return sd > 0 ? (v / sd).eval() : Eigen::VectorXd(v);
}

// Generation-side smoothing: spectral lowpass.
Eigen::VectorXd lowpass(const Eigen::VectorXd& x, double fs, double cutoff) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    std::vector<double> in(x.data(), x.data() + x.size());
    fft.fwd(spec, in);
    const Eigen::Index n = x.size();
    const double df = fs / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double f = (k <= n / 2 ? k : n - k) * df;
        if (f > cutoff) spec[static_cast<std::size_t>(k)] = 0.0;
    }
    std::vector<double> out;
    fft.inv(out, spec);
    return Eigen::Map<Eigen::VectorXd>(out.data(), n);
}

// Nonnegative speech-like envelope: half-wave rectified lowpassed noise.
Eigen::VectorXd make_envelope(Eigen::Index n, double fs, double cutoff, Rng& rng) {
    return lowpass(white_noise(n, rng), fs, cutoff).cwiseMax(0.0);
}

Eigen::VectorXd convolve_causal(const Eigen::VectorXd& x, const Eigen::Ref<const Eigen::VectorXd>& h) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        const Eigen::Index kmax = std::min<Eigen::Index>(h.size() - 1, t);
        double acc = 0.0;
        for (Eigen::Index k = 0; k <= kmax; ++k) acc += h[k] * x[t - k];
        y[t] = acc;
    }
    return y;
}

std::vector<Signal> make_envelopes(const SynthConfig& cfg, Eigen::Index n, std::uint64_t seed) {
    std::vector<Signal> envs;
    for (int sp = 0; sp < cfg.n_speakers; ++sp) {
        Rng rng(derive_seed(seed, 0x20, static_cast<std::uint64_t>(sp)));
        envs.push_back({make_envelope(n, cfg.fs, cfg.envelope_cutoff_hz, rng), cfg.fs});
    }
    return envs;
}

// EEG forward model: attended kernel response + scaled unattended responses
// + noise at noise_sigma times the clean per-channel RMS.
Eigen::MatrixXd build_eeg(const SynthConfig& cfg, const std::vector<Signal>& envs, int attended,
                          const Eigen::MatrixXd& h_att, const Eigen::MatrixXd& h_un,
                          std::uint64_t noise_seed) {
    const Eigen::Index n = envs.front().samples.size();
    Eigen::MatrixXd eeg(n, cfg.channels);
    Rng noise_rng(derive_seed(noise_seed, 0x40, 0));
    for (int c = 0; c < cfg.channels; ++c) {
        Eigen::VectorXd clean =
            convolve_causal(envs[static_cast<std::size_t>(attended)].samples, h_att.row(c));
        for (int sp = 0; sp < cfg.n_speakers; ++sp) {
            if (sp == attended) continue;
            clean += cfg.unattended_gain *
                     convolve_causal(envs[static_cast<std::size_t>(sp)].samples, h_un.row(c));
        }
        const double rms = std::sqrt(clean.squaredNorm() / static_cast<double>(n));
        Eigen::VectorXd noise =
            cfg.noise == NoiseColor::White ? white_noise(n, noise_rng) : pink_noise(n, noise_rng);
        eeg.col(c) = clean + cfg.noise_sigma * rms * noise;
    }
    return eeg;
}

void check_config(const SynthConfig& cfg) {
    if (cfg.channels < 1 || cfg.n_speakers < 2 || !(cfg.fs > 0.0) || !(cfg.duration_s > 0.0) ||
        cfg.unattended_gain < 0.0 || cfg.unattended_gain > 1.0 || cfg.noise_sigma < 0.0 ||
        !(cfg.envelope_cutoff_hz > 0.0)) {
        throw ParameterError("synth: invalid configuration");
    }
}

}  // namespace

Eigen::MatrixXd make_response_kernels(const SynthConfig& cfg, std::uint64_t stream_seed) {
    const int taps = std::max(2, static_cast<int>(std::lround(cfg.kernel_span_ms / 1000.0 * cfg.fs)));
    Rng rng(stream_seed);
    Eigen::MatrixXd kernels(cfg.channels, taps);
    // Smooth biphasic shape: an early positive lobe and a later negative
    // one, per-channel random gain and sign.
    const double t1 = 0.30, s1 = 0.12, t2 = 0.65, s2 = 0.18;
    for (int c = 0; c < cfg.channels; ++c) {
        const double gain = rng.uniform(0.5, 1.5) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
        const double lobe2 = rng.uniform(0.4, 0.8);
        for (int k = 0; k < taps; ++k) {
            const double u = static_cast<double>(k) / (taps - 1);
            const double v = std::exp(-0.5 * std::pow((u - t1) / s1, 2)) -
                             lobe2 * std::exp(-0.5 * std::pow((u - t2) / s2, 2));
            kernels(c, k) = gain * v;
        }
    }
    return kernels;
}

Trial generate_trial(const SynthConfig& cfg, int attended) {
    check_config(cfg);
    if (attended < 0 || attended >= cfg.n_speakers) {
        throw ParameterError("generate_trial: attended index out of range");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(std::llround(cfg.duration_s * cfg.fs));

    Trial t;
    t.attended = attended;
    t.eeg.fs = cfg.fs;
    for (int c = 0; c < cfg.channels; ++c) t.eeg.channel_labels.push_back("ch" + std::to_string(c + 1));
    t.envelopes = make_envelopes(cfg, n, cfg.seed);

    const Eigen::MatrixXd h_att = cfg.attended_kernel.size() > 0
                                      ? cfg.attended_kernel
                                      : make_response_kernels(cfg, derive_seed(cfg.seed, 0x30, 0));
    if (h_att.rows() != cfg.channels) {
        throw ParameterError("generate_trial: attended kernel rows != channel count");
    }
    const Eigen::MatrixXd h_un = cfg.distinct_unattended_kernel
                                     ? make_response_kernels(cfg, derive_seed(cfg.seed, 0x30, 1))
                                     : h_att;
    t.eeg.data = build_eeg(cfg, t.envelopes, attended, h_att, h_un, cfg.seed);

    // Quantized to f32 so the on-disk format round-trips bit exactly.
    quantize_f32(t.eeg.data);
    for (Signal& e : t.envelopes) {
        for (Eigen::Index i = 0; i < e.samples.size(); ++i) e.samples[i] = f32(e.samples[i]);
    }
    validate(t);
    return t;
}

std::vector<SynthSubject> generate_subjects(const SynthConfig& cfg, int n_subjects, double trf_jitter) {
    check_config(cfg);
    if (n_subjects < 1) throw ParameterError("generate_subjects: subject count must be positive");
    if (trf_jitter < 0.0) throw ParameterError("generate_subjects: jitter must be nonnegative");
    const Eigen::Index n = static_cast<Eigen::Index>(std::llround(cfg.duration_s * cfg.fs));

    // One base kernel pair shared by the cohort; per-subject jitter on top.
    const Eigen::MatrixXd base_att = cfg.attended_kernel.size() > 0
                                         ? cfg.attended_kernel
                                         : make_response_kernels(cfg, derive_seed(cfg.seed, 0x30, 0));
    if (base_att.rows() != cfg.channels) {
        throw ParameterError("generate_subjects: attended kernel rows != channel count");
    }
    const Eigen::MatrixXd base_un = cfg.distinct_unattended_kernel
                                        ? make_response_kernels(cfg, derive_seed(cfg.seed, 0x30, 1))
                                        : base_att;

    std::vector<SynthSubject> out;
    for (int s = 0; s < n_subjects; ++s) {
        const std::uint64_t subject_seed = derive_seed(cfg.seed, 0x100, static_cast<std::uint64_t>(s));
        SynthSubject subj;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "s%02d", s + 1);
        subj.subject_id = buf;

        Eigen::MatrixXd h_att = base_att;
        Eigen::MatrixXd h_un = base_un;
        if (trf_jitter > 0.0) {
            Rng jrng(derive_seed(cfg.seed, 0x200, static_cast<std::uint64_t>(s)));
            for (Eigen::Index c = 0; c < h_att.rows(); ++c) {
                for (Eigen::Index k = 0; k < h_att.cols(); ++k) {
                    h_att(c, k) *= 1.0 + trf_jitter * jrng.normal();
                    h_un(c, k) *= 1.0 + trf_jitter * jrng.normal();
                }
            }
            if (!cfg.distinct_unattended_kernel) h_un = h_att;
        }

        Trial t;
        t.subject_id = subj.subject_id;
        t.attended = s % cfg.n_speakers;
        t.eeg.fs = cfg.fs;
        for (int c = 0; c < cfg.channels; ++c) {
            t.eeg.channel_labels.push_back("ch" + std::to_string(c + 1));
        }
        t.envelopes = make_envelopes(cfg, n, subject_seed);
        t.eeg.data = build_eeg(cfg, t.envelopes, t.attended, h_att, h_un, subject_seed);
        quantize_f32(t.eeg.data);
        for (Signal& e : t.envelopes) {
            for (Eigen::Index i = 0; i < e.samples.size(); ++i) e.samples[i] = f32(e.samples[i]);
        }
        validate(t);

        subj.attended_kernel = std::move(h_att);
        subj.unattended_kernel = std::move(h_un);
        subj.trials.push_back(std::move(t));
        out.push_back(std::move(subj));
    }
    return out;
}

std::string generate_dataset(const SynthConfig& cfg, int n_subjects, double trf_jitter,
                             const std::string& out_dir) {
    const std::vector<SynthSubject> subjects = generate_subjects(cfg, n_subjects, trf_jitter);
    std::vector<Trial> trials;
    for (const SynthSubject& s : subjects) {
        for (const Trial& t : s.trials) trials.push_back(t);
    }
    return write_dataset(out_dir, trials);
}

}  // namespace aad
