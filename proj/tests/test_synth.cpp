#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "aad/dataset.hpp"
#include "aad/evaluation.hpp"
#include "aad/synth.hpp"

using namespace aad;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("aad_synth_" + name);
    std::filesystem::remove_all(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("single-tap identity kernel copies the attended envelope") {
    SynthConfig cfg;
    cfg.channels = 3;
    cfg.duration_s = 10.0;
    cfg.noise_sigma = 0.0;
    cfg.unattended_gain = 0.0;
    cfg.attended_kernel = Eigen::MatrixXd::Zero(3, 1);
    cfg.attended_kernel(1, 0) = 1.0;  // channel 2 carries the envelope
    const Trial t = generate_trial(cfg, 0);
    CHECK((t.eeg.data.col(1) - t.envelopes[0].samples).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(t.eeg.data.col(0).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(t.eeg.data.col(2).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("generation is bit-identical for a fixed seed") {
    SynthConfig cfg;
    cfg.channels = 4;
    cfg.duration_s = 20.0;
    cfg.seed = 33;
    const Trial a = generate_trial(cfg, 1);
    const Trial b = generate_trial(cfg, 1);
    CHECK((a.eeg.data - b.eeg.data).lpNorm<Eigen::Infinity>() == 0.0);
    for (std::size_t sp = 0; sp < a.envelopes.size(); ++sp) {
        CHECK((a.envelopes[sp].samples - b.envelopes[sp].samples).lpNorm<Eigen::Infinity>() == 0.0);
    }
    // A different seed changes the data.
    SynthConfig other = cfg;
    other.seed = 34;
    const Trial c = generate_trial(other, 1);
    CHECK((a.eeg.data - c.eeg.data).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("envelopes are nonnegative lowpassed noise and labels are recorded") {
    SynthConfig cfg;
    cfg.duration_s = 30.0;
    const Trial t = generate_trial(cfg, 1);
    CHECK(t.attended == 1);
    for (const Signal& e : t.envelopes) {
        CHECK(e.samples.minCoeff() >= 0.0);
        CHECK(e.samples.maxCoeff() > 0.0);
    }
    CHECK_THROWS_AS(generate_trial(cfg, 5), ParameterError);
    SynthConfig bad = cfg;
    bad.unattended_gain = 1.5;
    CHECK_THROWS_AS(generate_trial(bad, 0), ParameterError);
}

TEST_CASE("canonical regression: default-config subject reaches 95 percent at 30 s") {
    SynthConfig cfg;  // defaults: C = 16, 600 s, fs 64, g = 0.7, sigma = 1.0
    cfg.seed = 1;
    Trial t = generate_trial(cfg, 0);
    t.subject_id = "canon";
    EvalOptions opts;
    opts.taus = {30.0};
    const PerformanceCurve c = run_loso_cv("mmse-avgcorr-ridge", {t}, opts);
    CHECK(c.points[0].n_decisions == 20);
    CHECK(c.points[0].accuracy_pct >= 95.0);
}

TEST_CASE("generate_subjects: jitter zero shares kernels, manifest lists every subject") {
    SynthConfig cfg;
    cfg.channels = 4;
    cfg.duration_s = 15.0;
    cfg.seed = 40;

    const auto same = generate_subjects(cfg, 3, 0.0);
    REQUIRE(same.size() == 3);
    for (const SynthSubject& s : same) {
        CHECK((s.attended_kernel - same[0].attended_kernel).lpNorm<Eigen::Infinity>() == 0.0);
    }
    // Envelopes still differ by subject seed.
    CHECK((same[0].trials[0].envelopes[0].samples - same[1].trials[0].envelopes[0].samples)
              .lpNorm<Eigen::Infinity>() > 0.0);
    // Attended speaker alternates.
    CHECK(same[0].trials[0].attended == 0);
    CHECK(same[1].trials[0].attended == 1);

    const auto jittered = generate_subjects(cfg, 3, 0.2);
    CHECK((jittered[0].attended_kernel - jittered[1].attended_kernel).lpNorm<Eigen::Infinity>() >
          0.0);
}

TEST_CASE("written datasets reload bit-identically") {
    SynthConfig cfg;
    cfg.channels = 3;
    cfg.duration_s = 12.0;
    cfg.seed = 50;
    const std::string dir = temp_dir("roundtrip");
    const std::string manifest = generate_dataset(cfg, 2, 0.1, dir);
    CHECK(std::filesystem::exists(manifest));

    const auto originals = generate_subjects(cfg, 2, 0.1);
    const std::vector<Trial> loaded = load_dataset(dir);
    REQUIRE(loaded.size() == 2);
    for (int i = 0; i < 2; ++i) {
        const Trial& a = originals[static_cast<std::size_t>(i)].trials[0];
        const Trial& b = loaded[static_cast<std::size_t>(i)];
        CHECK(a.subject_id == b.subject_id);
        CHECK(a.attended == b.attended);
        CHECK((a.eeg.data - b.eeg.data).lpNorm<Eigen::Infinity>() == 0.0);
        for (std::size_t sp = 0; sp < a.envelopes.size(); ++sp) {
            CHECK((a.envelopes[sp].samples - b.envelopes[sp].samples).lpNorm<Eigen::Infinity>() ==
                  0.0);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("chance control: symmetric data defeats every algorithm") {
    SynthConfig cfg;
    cfg.channels = 8;
    cfg.duration_s = 240.0;
    cfg.noise_sigma = 0.5;
    cfg.unattended_gain = 1.0;  // attended and unattended enter identically
    cfg.seed = 60;
    const auto subjects = generate_subjects(cfg, 6, 0.1);

    EvalOptions opts;
    opts.taus = {30.0};
    opts.seed = 3;
    opts.nn_train.epochs = 30;  // nothing to learn; keep the control quick

    const std::vector<std::string> algorithms = {"mmse-avgcorr-ridge", "mmse-avgcorr-lasso",
                                                 "mmse-avgdec-ridge",  "mmse-avgdec-lasso",
                                                 "cca",                "mmse-adap-lasso",
                                                 "nn-sr"};
    for (const std::string& algo : algorithms) {
        double correct = 0.0;
        long n = 0;
        for (const SynthSubject& s : subjects) {
            const PerformanceCurve c = run_loso_cv(algo, s.trials, opts);
            correct += c.points[0].accuracy_pct / 100.0 * c.points[0].n_decisions;
            n += c.points[0].n_decisions;
        }
        // Binomial(48, 0.5) central 95% region: [17, 31].
        REQUIRE(n == 48);
        CHECK(correct >= 17.0);
        CHECK(correct <= 31.0);
    }
}

TEST_CASE("accuracy is monotone in SNR across seeds") {
    const std::vector<double> sigmas = {4.0, 2.0, 1.0, 0.5};
    EvalOptions opts;
    opts.taus = {30.0};
    int violations = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        double prev = -1.0;
        bool violated = false;
        for (double sigma : sigmas) {
            SynthConfig cfg;
            cfg.channels = 8;
            cfg.duration_s = 600.0;
            cfg.noise_sigma = sigma;
            cfg.seed = seed;
            Trial t = generate_trial(cfg, 0);
            t.subject_id = "snr";
            const PerformanceCurve c = run_loso_cv("mmse-avgcorr-ridge", {t}, opts);
            if (c.points[0].accuracy_pct < prev) violated = true;
            prev = c.points[0].accuracy_pct;
        }
        violations += violated ? 1 : 0;
    }
    CHECK(violations <= 1);
}

TEST_CASE("pink noise option produces valid trials") {
    SynthConfig cfg;
    cfg.channels = 4;
    cfg.duration_s = 20.0;
    cfg.noise = NoiseColor::Pink;
    cfg.seed = 70;
    const Trial t = generate_trial(cfg, 0);
    CHECK(t.eeg.data.allFinite());
    // Pink and white noise streams differ.
    SynthConfig white = cfg;
    white.noise = NoiseColor::White;
    const Trial tw = generate_trial(white, 0);
    CHECK((t.eeg.data - tw.eeg.data).lpNorm<Eigen::Infinity>() > 0.0);
}
