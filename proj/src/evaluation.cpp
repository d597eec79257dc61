#include "aad/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "aad/adaptive.hpp"
#include "aad/cca.hpp"
#include "aad/lagged.hpp"
#include "aad/linear.hpp"
#include "aad/pca.hpp"
#include "aad/random.hpp"
#include "aad/serialize.hpp"

namespace aad {

SegmentationResult segment_dataset(const std::vector<Trial>& trials, double seg_seconds) {
    if (!(seg_seconds > 0.0)) throw ParameterError("segment_dataset: segment length must be positive");
    SegmentationResult out;
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const Eigen::Index seg_len =
            static_cast<Eigen::Index>(std::llround(seg_seconds * trials[t].eeg.fs));
        const Eigen::Index total = trials[t].eeg.data.rows();
        const Eigen::Index count = seg_len > 0 ? total / seg_len : 0;
        if (count == 0) {
            ++out.skipped_trials;
            out.dropped_samples += total;
            continue;
        }
        for (Eigen::Index k = 0; k < count; ++k) {
            out.segments.push_back({static_cast<int>(t), k * seg_len, (k + 1) * seg_len});
        }
        out.dropped_samples += total - count * seg_len;
    }
    return out;
}

double accuracy(const std::vector<std::pair<int, int>>& predicted_truth) {
    if (predicted_truth.empty()) throw ParameterError("accuracy: no decisions");
    long correct = 0;
    for (const auto& [pred, truth] : predicted_truth) {
        if (pred == truth) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(predicted_truth.size());
}

const std::vector<std::string>& known_algorithms() {
    static const std::vector<std::string> ids = {
        "mmse-avgcorr-ridge", "mmse-avgcorr-lasso", "mmse-avgdec-ridge", "mmse-avgdec-lasso",
        "cca",                "mmse-adap-lasso",    "nn-sr",             "oracle",
        "anti-oracle",        "coin"};
    return ids;
}

bool is_algorithm(const std::string& id) {
    const auto& ids = known_algorithms();
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

InnerCvResult inner_cv(
    int n_items, int n_folds, int grid_size,
    const std::function<double(int, const std::vector<int>&, const std::vector<int>&)>& objective) {
    if (n_items < 2) throw ParameterError("inner_cv: needs at least two items");
    if (grid_size < 1) throw ParameterError("inner_cv: empty grid");
    InnerCvResult res;
    const int folds = std::min(n_folds, n_items);
    res.folds_reduced = folds < n_folds;
    std::vector<double> sums(static_cast<std::size_t>(grid_size), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(grid_size), 0);
    for (int f = 0; f < folds; ++f) {
        // Contiguous blocks respect temporal dependence.
        const int lo = static_cast<int>(static_cast<long long>(f) * n_items / folds);
        const int hi = static_cast<int>(static_cast<long long>(f + 1) * n_items / folds);
        std::vector<int> val, train;
        for (int i = 0; i < n_items; ++i) {
            (i >= lo && i < hi ? val : train).push_back(i);
        }
        for (int g = 0; g < grid_size; ++g) {
            try {
                sums[static_cast<std::size_t>(g)] += objective(g, train, val);
                counts[static_cast<std::size_t>(g)] += 1;
            } catch (const Error& e) {
                res.failures.push_back("inner fold " + std::to_string(f) + ", grid " +
                                       std::to_string(g) + ": " + e.what());
            }
        }
    }
    res.mean_scores.assign(static_cast<std::size_t>(grid_size), -1.0);
    int best = -1;
    for (int g = 0; g < grid_size; ++g) {
        if (counts[static_cast<std::size_t>(g)] == 0) continue;
        res.mean_scores[static_cast<std::size_t>(g)] =
            sums[static_cast<std::size_t>(g)] / counts[static_cast<std::size_t>(g)];
        if (best < 0 || res.mean_scores[static_cast<std::size_t>(g)] >
                            res.mean_scores[static_cast<std::size_t>(best)]) {
            best = g;  // strict > keeps the smallest grid value on ties
        }
    }
    if (best < 0) {
        std::string detail;
        for (const std::string& f : res.failures) detail += "\n  " + f;
        throw Error("inner_cv: every candidate failed" + detail);
    }
    res.best_index = best;
    return res;
}

// ---------------------------------------------------------------------------
// Harness internals.

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct WindowRange {
    Eigen::Index row_start = 0;  // rows into the segment-level aligned outputs
    Eigen::Index row_end = 0;    // exclusive; may be an empty range
};

// Disjoint tau windows tiling a segment; ranges are clipped to the valid
// design rows [t0, t0 + rows).
std::vector<WindowRange> decision_windows(Eigen::Index seg_len, Eigen::Index win_len,
                                          Eigen::Index t0, Eigen::Index rows) {
    std::vector<WindowRange> out;
    if (win_len <= 0) return out;
    const Eigen::Index count = seg_len / win_len;
    for (Eigen::Index w = 0; w < count; ++w) {
        Eigen::Index lo = std::max(w * win_len, t0);
        Eigen::Index hi = std::min((w + 1) * win_len, t0 + rows);
        if (hi < lo) hi = lo;
        out.push_back({lo - t0, hi - t0});
    }
    return out;
}

struct FoldContext {
    std::vector<Trial> trials;            // normalized with training statistics
    std::vector<Segment> train_segments;  // in dataset order
    Segment test_segment;
    int test_truth = 0;
    int n_speakers = 2;
    double fs = 0.0;
    std::uint64_t fold_seed = 0;
    int fold_index = 0;
};

using TauDecisions = std::vector<std::vector<std::pair<int, int>>>;  // [tau][decision]

struct FoldOutcome {
    TauDecisions decisions;
    std::string digest;
};

Eigen::Index window_samples(double tau_s, double fs) {
    return static_cast<Eigen::Index>(std::llround(tau_s * fs));
}

MultiChannel slice_eeg(const Trial& t, const Segment& s) {
    MultiChannel out;
    out.fs = t.eeg.fs;
    out.channel_labels = t.eeg.channel_labels;
    out.data = t.eeg.data.middleRows(s.start, s.length());
    return out;
}

Eigen::VectorXd slice_env(const Trial& t, const Segment& s, int speaker) {
    return t.envelopes[static_cast<std::size_t>(speaker)].samples.segment(s.start, s.length());
}

// ---------------------------------------------------------------------------
// MMSE family.

struct LinearFoldData {
    std::vector<TrainingSegment> train;      // design + attended target per segment
    std::vector<SegmentStats> train_stats;   // aligned with train
    LaggedDesign test_design;
    std::vector<Eigen::VectorXd> test_envs;  // aligned with test design rows
};

LinearFoldData build_linear_fold(const FoldContext& ctx, int lags) {
    LinearFoldData d;
    for (const Segment& s : ctx.train_segments) {
        const Trial& t = ctx.trials[static_cast<std::size_t>(s.trial)];
        TrainingSegment seg;
        seg.design = build_lagged(slice_eeg(t, s), lags, LagDirection::AntiCausal);
        seg.target = aligned_target(seg.design, slice_env(t, s, t.attended));
        d.train_stats.push_back(segment_stats(seg.design, seg.target));
        d.train.push_back(std::move(seg));
    }
    const Trial& tt = ctx.trials[static_cast<std::size_t>(ctx.test_segment.trial)];
    d.test_design = build_lagged(slice_eeg(tt, ctx.test_segment), lags, LagDirection::AntiCausal);
    for (int sp = 0; sp < ctx.n_speakers; ++sp) {
        d.test_envs.push_back(aligned_target(d.test_design, slice_env(tt, ctx.test_segment, sp)));
    }
    return d;
}

// Decisions of a trained decoder over the tau windows of the test segment.
void decide_windows(const Decoder& dec, const LinearFoldData& d, const FoldContext& ctx,
                    double tau_s, std::vector<std::pair<int, int>>& sink) {
    const Eigen::VectorXd shat = reconstruct(dec, d.test_design);
    const auto windows = decision_windows(ctx.test_segment.length(), window_samples(tau_s, ctx.fs),
                                          d.test_design.t0, d.test_design.rows());
    for (const WindowRange& w : windows) {
        int pred = 0;
        if (w.row_end - w.row_start >= 2) {
            pred = decide(shat, d.test_envs, w.row_start, w.row_end).speaker;
        }
        sink.emplace_back(pred, ctx.test_truth);
    }
}

// Validation accuracy of a decoder over whole held-out training segments.
// Degenerate and tied decisions score as incorrect here: a constant
// reconstruction carries no evidence for either speaker, and counting its
// default pick would reward hyperparameters that zero the decoder whenever
// the lowest index happens to be attended.
double validation_accuracy(const Decoder& dec, const LinearFoldData& d, const FoldContext& ctx,
                           const std::vector<int>& val_items, double tau_s) {
    long correct = 0, total = 0;
    const Eigen::Index win = window_samples(tau_s, ctx.fs);
    for (int item : val_items) {
        const Segment& s = ctx.train_segments[static_cast<std::size_t>(item)];
        const Trial& t = ctx.trials[static_cast<std::size_t>(s.trial)];
        const LaggedDesign& design = d.train[static_cast<std::size_t>(item)].design;
        const Eigen::VectorXd shat = reconstruct(dec, design);
        std::vector<Eigen::VectorXd> envs;
        for (int sp = 0; sp < ctx.n_speakers; ++sp) {
            envs.push_back(aligned_target(design, slice_env(t, s, sp)));
        }
        for (const WindowRange& w : decision_windows(s.length(), win, design.t0, design.rows())) {
            ++total;
            if (w.row_end - w.row_start < 2) continue;
            const Decision decision = decide(shat, envs, w.row_start, w.row_end);
            if (!decision.degenerate && !decision.tie && decision.speaker == t.attended) {
                ++correct;
            }
        }
    }
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

FoldOutcome run_avgcorr_fold(const FoldContext& ctx, Penalty penalty, const EvalOptions& opts,
                             const std::vector<double>& grid, int lags, LosoDiagnostics* diag) {
    LinearFoldData d = build_linear_fold(ctx, lags);
    const double tau_big = *std::max_element(opts.taus.begin(), opts.taus.end());
    const int g = static_cast<int>(grid.size());
    const int channels = d.test_design.channels;

    LassoState warm;
    long fits = 0;
    auto objective = [&](int gi, const std::vector<int>& train, const std::vector<int>& val) {
        if (gi == 0) warm = LassoState{};  // new inner fold: reset the warm start
        std::vector<SegmentStats> stats;
        for (int i : train) stats.push_back(d.train_stats[static_cast<std::size_t>(i)]);
        const Decoder dec = train_avgcorr_stats(stats, grid[static_cast<std::size_t>(gi)], penalty,
                                                lags, channels, opts.admm,
                                                penalty == Penalty::Lasso ? &warm : nullptr);
        ++fits;
        return validation_accuracy(dec, d, ctx, val, tau_big);
    };
    const InnerCvResult cv =
        inner_cv(static_cast<int>(ctx.train_segments.size()), opts.inner_folds, g, objective);
    if (diag) {
        diag->inner_fits += fits;
        diag->inner_folds_reduced = diag->inner_folds_reduced || cv.folds_reduced;
        for (const std::string& f : cv.failures) {
            diag->messages.push_back("fold " + std::to_string(ctx.fold_index) + ": " + f);
        }
    }

    const double lambda = grid[static_cast<std::size_t>(cv.best_index)];
    const Decoder dec = train_avgcorr_stats(d.train_stats, lambda, penalty, lags, channels, opts.admm);

    FoldOutcome out;
    out.decisions.resize(opts.taus.size());
    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        decide_windows(dec, d, ctx, opts.taus[ti], out.decisions[ti]);
    }
    out.digest = digest_vector(dec.weights);
    return out;
}

FoldOutcome run_avgdec_fold(const FoldContext& ctx, Penalty penalty, const EvalOptions& opts,
                            const std::vector<double>& grid, int lags, LosoDiagnostics* diag) {
    LinearFoldData d = build_linear_fold(ctx, lags);
    const int channels = d.test_design.channels;
    FoldOutcome out;
    out.decisions.resize(opts.taus.size());
    std::string digest_acc;

    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        const Eigen::Index win = window_samples(opts.taus[ti], ctx.fs);
        // Split every training segment into tau-sized subwindows; one decoder
        // per subwindow, averaged.
        std::vector<SegmentStats> window_stats;
        std::vector<int> owner;  // training-segment index per subwindow
        for (std::size_t k = 0; k < d.train.size(); ++k) {
            const LaggedDesign& design = d.train[k].design;
            const Eigen::VectorXd& target = d.train[k].target;
            const Eigen::Index n_win = ctx.train_segments[k].length() / win;
            for (Eigen::Index w = 0; w < n_win; ++w) {
                const Eigen::Index lo = std::max(w * win, design.t0) - design.t0;
                const Eigen::Index hi =
                    std::min((w + 1) * win, design.t0 + design.rows()) - design.t0;
                if (hi - lo < design.cols() / 4 || hi - lo < 2) {
                    // Degenerate sliver at the segment edge; skip.
                    continue;
                }
                LaggedDesign sub = design;
                sub.matrix = design.matrix.middleRows(lo, hi - lo).eval();
                sub.t0 = design.t0 + lo;
                window_stats.push_back(segment_stats(sub, target.segment(lo, hi - lo)));
                owner.push_back(static_cast<int>(k));
            }
        }
        if (window_stats.empty()) {
            throw InsufficientDataError("avgdec: no usable training subwindows at tau " +
                                        std::to_string(opts.taus[ti]));
        }

        std::vector<LassoState> warm;
        long fits = 0;
        auto objective = [&](int gi, const std::vector<int>& train, const std::vector<int>& val) {
            if (gi == 0) warm.clear();
            std::vector<SegmentStats> stats;
            std::vector<std::size_t> keep;
            for (std::size_t wi = 0; wi < window_stats.size(); ++wi) {
                if (std::find(train.begin(), train.end(), owner[wi]) != train.end()) {
                    stats.push_back(window_stats[wi]);
                    keep.push_back(wi);
                }
            }
            if (stats.empty()) throw InsufficientDataError("avgdec: empty inner training fold");
            std::vector<LassoState> local;
            if (penalty == Penalty::Lasso) {
                if (warm.size() != window_stats.size()) warm.assign(window_stats.size(), {});
                local.resize(stats.size());
                for (std::size_t i = 0; i < keep.size(); ++i) local[i] = warm[keep[i]];
            }
            const Decoder dec =
                train_avgdec_stats(stats, grid[static_cast<std::size_t>(gi)], penalty, lags,
                                   channels, opts.admm, penalty == Penalty::Lasso ? &local : nullptr);
            if (penalty == Penalty::Lasso) {
                for (std::size_t i = 0; i < keep.size(); ++i) warm[keep[i]] = local[i];
            }
            ++fits;
            return validation_accuracy(dec, d, ctx, val, opts.taus[ti]);
        };
        const InnerCvResult cv = inner_cv(static_cast<int>(ctx.train_segments.size()),
                                          opts.inner_folds, static_cast<int>(grid.size()), objective);
        if (diag) {
            diag->inner_fits += fits;
            diag->inner_folds_reduced = diag->inner_folds_reduced || cv.folds_reduced;
            for (const std::string& f : cv.failures) {
                diag->messages.push_back("fold " + std::to_string(ctx.fold_index) + ": " + f);
            }
        }

        const Decoder dec = train_avgdec_stats(
            window_stats, grid[static_cast<std::size_t>(cv.best_index)], penalty, lags, channels,
            opts.admm);
        decide_windows(dec, d, ctx, opts.taus[ti], out.decisions[ti]);
        digest_acc += digest_vector(dec.weights);
    }
    out.digest = digest_bytes(digest_acc.data(), digest_acc.size());
    return out;
}

// ---------------------------------------------------------------------------
// CCA.

struct CcaSegmentDesigns {
    LaggedDesign eeg;                 // PCA-projected channels, L lags
    std::vector<LaggedDesign> envs;   // per speaker, L_a lags
    int attended = 0;
};

struct CcaFoldData {
    std::vector<CcaSegmentDesigns> train;
    CcaSegmentDesigns test;
};

CcaSegmentDesigns build_cca_segment(const FoldContext& ctx, const Segment& s, const PcaBasis& pca,
                                    int lags, int enc_lags) {
    const Trial& t = ctx.trials[static_cast<std::size_t>(s.trial)];
    CcaSegmentDesigns out;
    const Eigen::MatrixXd projected = pca_project(pca, t.eeg.data.middleRows(s.start, s.length()));
    out.eeg = build_lagged(projected, lags, LagDirection::AntiCausal);
    for (int sp = 0; sp < ctx.n_speakers; ++sp) {
        Eigen::MatrixXd env = slice_env(t, s, sp);
        out.envs.push_back(build_lagged(env, enc_lags, LagDirection::Causal));
    }
    out.attended = t.attended;
    return out;
}

// Stacks aligned (EEG, attended envelope) rows of the given training
// segments and fits one CCA model.
CcaModel fit_cca_on(const std::vector<CcaSegmentDesigns>& segs, const std::vector<int>& items,
                    int j) {
    Eigen::Index rows = 0;
    Eigen::Index p = 0, q = 0;
    std::vector<std::pair<LaggedDesign, LaggedDesign>> aligned;
    for (int i : items) {
        const CcaSegmentDesigns& s = segs[static_cast<std::size_t>(i)];
        auto pr = align_designs(s.eeg, s.envs[static_cast<std::size_t>(s.attended)]);
        rows += pr.first.rows();
        p = pr.first.cols();
        q = pr.second.cols();
        aligned.push_back(std::move(pr));
    }
    LaggedDesign x, e;
    x.direction = LagDirection::AntiCausal;
    x.lags = aligned.front().first.lags;
    x.channels = aligned.front().first.channels;
    x.matrix.resize(rows, p);
    e.direction = LagDirection::Causal;
    e.lags = aligned.front().second.lags;
    e.channels = 1;
    e.matrix.resize(rows, q);
    Eigen::Index at = 0;
    for (auto& pr : aligned) {
        x.matrix.middleRows(at, pr.first.rows()) = pr.first.matrix;
        e.matrix.middleRows(at, pr.second.rows()) = pr.second.matrix;
        at += pr.first.rows();
    }
    x.t0 = 0;
    e.t0 = 0;  // already aligned row for row
    return fit_cca(x, e, j);
}

// Per-component outputs of one segment under a model, on the aligned row
// domain.
struct CcaOutputs {
    Eigen::MatrixXd backward;               // rows x J
    std::vector<Eigen::MatrixXd> forward;   // per speaker, rows x J
    Eigen::Index t0 = 0;                    // time of row 0
};

CcaOutputs cca_outputs(const CcaModel& model, const CcaSegmentDesigns& seg) {
    CcaOutputs out;
    Eigen::Index lo = seg.eeg.t0;
    Eigen::Index hi = seg.eeg.t_end();
    for (const LaggedDesign& env : seg.envs) {
        lo = std::max(lo, env.t0);
        hi = std::min(hi, env.t_end());
    }
    out.t0 = lo;
    out.backward = seg.eeg.matrix.middleRows(lo - seg.eeg.t0, hi - lo) * model.wx;
    for (const LaggedDesign& env : seg.envs) {
        out.forward.push_back(env.matrix.middleRows(lo - env.t0, hi - lo) * model.ws);
    }
    return out;
}

// Correlation vectors (J components) per speaker over one window.
std::vector<Eigen::VectorXd> window_rhos(const CcaOutputs& o, Eigen::Index lo, Eigen::Index hi) {
    const Eigen::Index j = o.backward.cols();
    std::vector<Eigen::VectorXd> rhos(o.forward.size(), Eigen::VectorXd::Zero(j));
    if (hi - lo < 2) return rhos;
    for (std::size_t sp = 0; sp < o.forward.size(); ++sp) {
        for (Eigen::Index c = 0; c < j; ++c) {
            rhos[sp][c] = pearson(o.backward.col(c).segment(lo, hi - lo),
                                  o.forward[sp].col(c).segment(lo, hi - lo));
        }
    }
    return rhos;
}

int lda_round_robin(const LdaClassifier& lda, const std::vector<Eigen::VectorXd>& rhos, int j) {
    const std::size_t n = rhos.size();
    std::vector<int> wins(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            const double score = lda.weights.dot((rhos[i] - rhos[k]).head(j)) + lda.bias;
            if (score >= 0.0) {
                ++wins[i];
            } else {
                ++wins[k];
            }
        }
    }
    int best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (wins[i] > wins[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

// Pairwise difference features with labels from one training segment.
void collect_lda_features(const CcaOutputs& o, int attended, Eigen::Index seg_len,
                          Eigen::Index win, std::vector<Eigen::VectorXd>& feats,
                          std::vector<bool>& labels) {
    const auto windows = decision_windows(seg_len, win, o.t0, o.backward.rows());
    for (const WindowRange& w : windows) {
        if (w.row_end - w.row_start < 2) continue;
        const auto rhos = window_rhos(o, w.row_start, w.row_end);
        for (std::size_t i = 0; i < rhos.size(); ++i) {
            for (std::size_t k = i + 1; k < rhos.size(); ++k) {
                const bool involved =
                    attended == static_cast<int>(i) || attended == static_cast<int>(k);
                if (!involved) continue;
                feats.push_back(rhos[i] - rhos[k]);
                labels.push_back(attended == static_cast<int>(i));
            }
        }
    }
}

FoldOutcome run_cca_fold(const FoldContext& ctx, const EvalOptions& opts, int lags, int enc_lags,
                         LosoDiagnostics* diag) {
    // Channel-space PCA estimated on the training segments only.
    Eigen::Index train_rows = 0;
    for (const Segment& s : ctx.train_segments) train_rows += s.length();
    Eigen::MatrixXd stacked(train_rows, ctx.trials[0].eeg.data.cols());
    Eigen::Index at = 0;
    for (const Segment& s : ctx.train_segments) {
        stacked.middleRows(at, s.length()) =
            ctx.trials[static_cast<std::size_t>(s.trial)].eeg.data.middleRows(s.start, s.length());
        at += s.length();
    }
    const PcaBasis pca = pca_fit(stacked, 1.0);

    CcaFoldData d;
    for (const Segment& s : ctx.train_segments) {
        d.train.push_back(build_cca_segment(ctx, s, pca, lags, enc_lags));
    }
    d.test = build_cca_segment(ctx, ctx.test_segment, pca, lags, enc_lags);

    const int n_train = static_cast<int>(d.train.size());
    const int j_limit = static_cast<int>(
        std::min<Eigen::Index>(d.test.eeg.cols(), d.test.envs[0].cols()));
    const int j_max = std::max(1, std::min(opts.max_components, j_limit));

    // Leave-one-segment-out models inside the fold: unbiased LDA training
    // features, reused for J selection when the inner folds coincide.
    std::vector<CcaModel> loso_models(static_cast<std::size_t>(n_train));
    std::vector<CcaOutputs> loso_outputs(static_cast<std::size_t>(n_train));
    std::vector<int> all_items(static_cast<std::size_t>(n_train));
    for (int i = 0; i < n_train; ++i) all_items[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < n_train; ++i) {
        std::vector<int> items;
        for (int k = 0; k < n_train; ++k) {
            if (k != i) items.push_back(k);
        }
        loso_models[static_cast<std::size_t>(i)] = fit_cca_on(d.train, items, j_max);
        loso_outputs[static_cast<std::size_t>(i)] =
            cca_outputs(loso_models[static_cast<std::size_t>(i)], d.train[static_cast<std::size_t>(i)]);
        if (diag) ++diag->inner_fits;
    }

    // J selection per tau via inner CV over contiguous blocks. With one
    // segment per inner fold this reuses the leave-one-out models above.
    const int folds = std::min(opts.inner_folds, n_train);
    if (diag && folds < opts.inner_folds) diag->inner_folds_reduced = true;

    std::vector<int> best_j(opts.taus.size(), 1);
    {
        std::vector<std::vector<double>> score(
            opts.taus.size(), std::vector<double>(static_cast<std::size_t>(j_max), 0.0));
        for (int f = 0; f < folds; ++f) {
            const int lo = static_cast<int>(static_cast<long long>(f) * n_train / folds);
            const int hi = static_cast<int>(static_cast<long long>(f + 1) * n_train / folds);
            std::vector<int> train_items;
            for (int i = 0; i < n_train; ++i) {
                if (i < lo || i >= hi) train_items.push_back(i);
            }
            CcaModel model;
            if (hi - lo == 1) {
                model = loso_models[static_cast<std::size_t>(lo)];
            } else {
                model = fit_cca_on(d.train, train_items, j_max);
                if (diag) ++diag->inner_fits;
            }
            // Outputs under this model for train (LDA) and validation items.
            std::vector<CcaOutputs> outputs(static_cast<std::size_t>(n_train));
            for (int i = 0; i < n_train; ++i) {
                outputs[static_cast<std::size_t>(i)] =
                    cca_outputs(model, d.train[static_cast<std::size_t>(i)]);
            }
            for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
                const Eigen::Index win = window_samples(opts.taus[ti], ctx.fs);
                std::vector<Eigen::VectorXd> feats;
                std::vector<bool> labels;
                for (int i : train_items) {
                    collect_lda_features(outputs[static_cast<std::size_t>(i)],
                                         d.train[static_cast<std::size_t>(i)].attended,
                                         ctx.train_segments[static_cast<std::size_t>(i)].length(),
                                         win, feats, labels);
                }
                if (feats.empty()) continue;
                for (int j = 1; j <= j_max; ++j) {
                    std::vector<Eigen::VectorXd> prefix;
                    prefix.reserve(feats.size());
                    for (const Eigen::VectorXd& f2 : feats) prefix.push_back(f2.head(j));
                    const LdaClassifier lda = fit_lda(prefix, labels);
                    std::vector<std::pair<int, int>> decisions;
                    for (int i = lo; i < hi; ++i) {
                        const CcaOutputs& o = outputs[static_cast<std::size_t>(i)];
                        const auto windows = decision_windows(
                            ctx.train_segments[static_cast<std::size_t>(i)].length(), win, o.t0,
                            o.backward.rows());
                        for (const WindowRange& w : windows) {
                            if (w.row_end - w.row_start < 2) continue;
                            const auto rhos = window_rhos(o, w.row_start, w.row_end);
                            decisions.emplace_back(lda_round_robin(lda, rhos, j),
                                                   d.train[static_cast<std::size_t>(i)].attended);
                        }
                    }
                    if (!decisions.empty()) {
                        score[ti][static_cast<std::size_t>(j - 1)] += accuracy(decisions);
                    }
                }
            }
        }
        for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
            int best = 0;
            for (int j = 1; j < j_max; ++j) {
                if (score[ti][static_cast<std::size_t>(j)] > score[ti][static_cast<std::size_t>(best)]) {
                    best = j;  // strict >: ties resolve to the smaller J
                }
            }
            best_j[ti] = best + 1;
        }
    }

    // Final model on the whole training fold; LDA trained on the unbiased
    // leave-one-segment-out features.
    const CcaModel final_model = fit_cca_on(d.train, all_items, j_max);
    const CcaOutputs test_outputs = cca_outputs(final_model, d.test);

    FoldOutcome out;
    out.decisions.resize(opts.taus.size());
    std::string digest_acc = digest_matrix(final_model.wx) + digest_matrix(final_model.ws);
    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        const Eigen::Index win = window_samples(opts.taus[ti], ctx.fs);
        std::vector<Eigen::VectorXd> feats;
        std::vector<bool> labels;
        for (int i = 0; i < n_train; ++i) {
            collect_lda_features(loso_outputs[static_cast<std::size_t>(i)],
                                 d.train[static_cast<std::size_t>(i)].attended,
                                 ctx.train_segments[static_cast<std::size_t>(i)].length(), win,
                                 feats, labels);
        }
        if (feats.empty()) {
            throw InsufficientDataError("cca: no LDA training features at tau " +
                                        std::to_string(opts.taus[ti]));
        }
        const int j = best_j[ti];
        std::vector<Eigen::VectorXd> prefix;
        prefix.reserve(feats.size());
        for (const Eigen::VectorXd& f : feats) prefix.push_back(f.head(j));
        const LdaClassifier lda = fit_lda(prefix, labels);
        digest_acc += digest_vector(lda.weights);

        const auto windows = decision_windows(ctx.test_segment.length(), win, test_outputs.t0,
                                              test_outputs.backward.rows());
        for (const WindowRange& w : windows) {
            int pred = 0;
            if (w.row_end - w.row_start >= 2) {
                const auto rhos = window_rhos(test_outputs, w.row_start, w.row_end);
                pred = lda_round_robin(lda, rhos, j);
            }
            out.decisions[ti].emplace_back(pred, ctx.test_truth);
        }
    }
    out.digest = digest_bytes(digest_acc.data(), digest_acc.size());
    return out;
}

// ---------------------------------------------------------------------------
// Training-free adaptive lasso.

FoldOutcome run_adaptive_fold(const FoldContext& ctx, const EvalOptions& opts,
                              const std::vector<double>& grid, int lags, LosoDiagnostics* diag) {
    const Trial& any = ctx.trials[0];
    const ChannelSubset subset = resolve_channel_subset(any.eeg, opts.adaptive_channels);

    FoldOutcome out;
    out.decisions.resize(opts.taus.size());
    std::string lambda_digest;

    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        const Eigen::Index win = window_samples(opts.taus[ti], ctx.fs);

        // Training-fold windows.
        struct Window {
            MultiChannel eeg;
            std::vector<Eigen::VectorXd> envs;
            int truth;
        };
        std::vector<Window> train_windows;
        for (const Segment& s : ctx.train_segments) {
            const Trial& t = ctx.trials[static_cast<std::size_t>(s.trial)];
            const Eigen::Index count = s.length() / win;
            for (Eigen::Index w = 0; w < count; ++w) {
                Window wd;
                Segment sub{s.trial, s.start + w * win, s.start + (w + 1) * win};
                wd.eeg = restrict_channels(slice_eeg(t, sub), subset);
                for (int sp = 0; sp < ctx.n_speakers; ++sp) wd.envs.push_back(slice_env(t, sub, sp));
                wd.truth = t.attended;
                train_windows.push_back(std::move(wd));
            }
        }

        // Lambda per tau and fold: best accuracy on the training fold.
        // Degenerate and tied decisions carry no evidence for either speaker,
        // so they score as incorrect here; otherwise a penalty that zeroes
        // every decoder would look perfect whenever the lowest index happens
        // to be the attended one.
        int best_gi = 0;
        double best_acc = -1.0;
        std::vector<std::vector<LassoState>> warm(train_windows.size());
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            AdaptiveOptions aopts;
            aopts.lags = lags;
            aopts.lambda_rel = grid[gi];
            aopts.admm = opts.admm;
            long correct = 0;
            for (std::size_t w = 0; w < train_windows.size(); ++w) {
                const AdaptiveDecision dec =
                    adap_decide(train_windows[w].eeg, train_windows[w].envs, aopts, &warm[w]);
                if (!dec.degenerate && !dec.tie && dec.speaker == train_windows[w].truth) {
                    ++correct;
                }
            }
            if (diag) ++diag->inner_fits;
            const double acc = train_windows.empty()
                                   ? 0.0
                                   : 100.0 * static_cast<double>(correct) /
                                         static_cast<double>(train_windows.size());
            if (acc > best_acc) {  // strict >: ties resolve to the smaller lambda
                best_acc = acc;
                best_gi = static_cast<int>(gi);
            }
        }

        // Held-out windows at the chosen lambda.
        AdaptiveOptions aopts;
        aopts.lags = lags;
        aopts.lambda_rel = grid[static_cast<std::size_t>(best_gi)];
        aopts.admm = opts.admm;
        const Trial& tt = ctx.trials[static_cast<std::size_t>(ctx.test_segment.trial)];
        const Eigen::Index count = ctx.test_segment.length() / win;
        for (Eigen::Index w = 0; w < count; ++w) {
            Segment sub{ctx.test_segment.trial, ctx.test_segment.start + w * win,
                        ctx.test_segment.start + (w + 1) * win};
            std::vector<Eigen::VectorXd> envs;
            for (int sp = 0; sp < ctx.n_speakers; ++sp) envs.push_back(slice_env(tt, sub, sp));
            const AdaptiveDecision dec =
                adap_decide(restrict_channels(slice_eeg(tt, sub), subset), envs, aopts);
            out.decisions[ti].emplace_back(dec.speaker, ctx.test_truth);
            if (diag) {
                if (diag->adaptive_csv.empty()) {
                    diag->adaptive_csv = "fold,tau_s," + adaptive_diag_csv_header() + "\n";
                }
                diag->adaptive_csv += std::to_string(ctx.fold_index) + "," +
                                      std::to_string(opts.taus[ti]) + "," +
                                      adaptive_diag_csv_row(static_cast<int>(w), dec) + "\n";
            }
        }
        lambda_digest += std::to_string(grid[static_cast<std::size_t>(best_gi)]) + ";";
    }
    out.digest = digest_bytes(lambda_digest.data(), lambda_digest.size());
    return out;
}

// ---------------------------------------------------------------------------
// NN stimulus reconstruction.

FoldOutcome run_nnsr_fold(const FoldContext& ctx, const EvalOptions& opts, int lags,
                          LosoDiagnostics* diag) {
    (void)diag;
    LinearFoldData d = build_linear_fold(ctx, lags);
    FoldOutcome out;
    out.decisions.resize(opts.taus.size());
    std::string digest_acc;
    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        TrainConfig cfg = opts.nn_train;
        cfg.batch_len = std::max<Eigen::Index>(2, window_samples(opts.taus[ti], ctx.fs));
        cfg.seed = derive_seed(opts.seed, fnv1a64(ctx.trials[0].subject_id),
                               static_cast<std::uint64_t>(ctx.fold_index) * 1000 + ti);
        const NnSrModel model = nnsr_train(d.train, cfg);

        const Eigen::VectorXd shat = nnsr_forward_batch(model, d.test_design.matrix);
        const auto windows =
            decision_windows(ctx.test_segment.length(), window_samples(opts.taus[ti], ctx.fs),
                             d.test_design.t0, d.test_design.rows());
        for (const WindowRange& w : windows) {
            int pred = 0;
            if (w.row_end - w.row_start >= 2) {
                pred = decide(shat, d.test_envs, w.row_start, w.row_end).speaker;
            }
            out.decisions[ti].emplace_back(pred, ctx.test_truth);
        }
        digest_acc += digest_matrix(model.w1) + digest_vector(model.b1);
    }
    out.digest = digest_bytes(digest_acc.data(), digest_acc.size());
    return out;
}

// ---------------------------------------------------------------------------
// Data-free reference deciders.

FoldOutcome run_reference_fold(const std::string& algorithm, const FoldContext& ctx,
                               const EvalOptions& opts) {
    FoldOutcome out;
    out.decisions.resize(opts.taus.size());
    out.digest = "-";
    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        const Eigen::Index win = window_samples(opts.taus[ti], ctx.fs);
        const Eigen::Index count = win > 0 ? ctx.test_segment.length() / win : 0;
        for (Eigen::Index w = 0; w < count; ++w) {
            int pred;
            if (algorithm == "oracle") {
                pred = ctx.test_truth;
            } else if (algorithm == "anti-oracle") {
                pred = (ctx.test_truth + 1) % ctx.n_speakers;
            } else {
                Rng rng(derive_seed(ctx.fold_seed, ti, static_cast<std::uint64_t>(w)));
                pred = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ctx.n_speakers)));
            }
            out.decisions[ti].emplace_back(pred, ctx.test_truth);
        }
    }
    return out;
}

}  // namespace

PerformanceCurve run_loso_cv(const std::string& algorithm, const std::vector<Trial>& subject_trials,
                             const EvalOptions& opts, LosoDiagnostics* diag) {
    if (!is_algorithm(algorithm)) throw ParameterError("run_loso_cv: unknown algorithm '" + algorithm + "'");
    if (subject_trials.empty()) throw ParameterError("run_loso_cv: no trials");
    if (opts.taus.empty()) throw ParameterError("run_loso_cv: empty tau list");
    for (std::size_t i = 1; i < opts.taus.size(); ++i) {
        if (opts.taus[i] <= opts.taus[i - 1]) {
            throw ParameterError("run_loso_cv: tau grid must be strictly increasing");
        }
    }
    if (opts.taus.back() > opts.seg_seconds) {
        throw ParameterError("run_loso_cv: largest tau exceeds the segment length");
    }

    const bool reference =
        algorithm == "oracle" || algorithm == "anti-oracle" || algorithm == "coin";
    const bool nn = algorithm == "nn-sr";

    // Filtering and resampling are per-trial (no fitted parameters);
    // normalization happens per fold below.
    std::vector<Trial> filtered;
    filtered.reserve(subject_trials.size());
    for (const Trial& t : subject_trials) {
        if (reference) {
            validate(t);
            filtered.push_back(t);
        } else {
            filtered.push_back(preprocess_filter(t, nn ? opts.nn_path : opts.linear_path));
        }
    }
    const double fs = filtered[0].eeg.fs;
    const int n_speakers = static_cast<int>(filtered[0].envelopes.size());

    SegmentationResult seg = segment_dataset(filtered, opts.seg_seconds);
    if (diag) {
        diag->dropped_samples = seg.dropped_samples;
        diag->skipped_trials = seg.skipped_trials;
    }
    if (seg.segments.size() < 2) {
        throw InsufficientDataError("run_loso_cv: need at least two segments, got " +
                                    std::to_string(seg.segments.size()));
    }

    const std::vector<double> grid = opts.lambda_grid.empty() ? default_lambda_grid() : opts.lambda_grid;
    const int lags = lags_from_ms(nn ? opts.nn_decoder_ms : opts.decoder_ms, fs);
    const int enc_lags = lags_from_ms(opts.encoder_ms, fs);

    TauDecisions all(opts.taus.size());
    for (std::size_t f = 0; f < seg.segments.size(); ++f) {
        FoldContext ctx;
        ctx.test_segment = seg.segments[f];
        for (std::size_t k = 0; k < seg.segments.size(); ++k) {
            if (k != f) ctx.train_segments.push_back(seg.segments[k]);
        }
        ctx.fs = fs;
        ctx.n_speakers = n_speakers;
        ctx.fold_index = static_cast<int>(f);
        ctx.test_truth =
            filtered[static_cast<std::size_t>(ctx.test_segment.trial)].attended;
        ctx.fold_seed = derive_seed(opts.seed, fnv1a64(subject_trials[0].subject_id + "/" + algorithm), f);

        if (reference) {
            ctx.trials = filtered;
        } else {
            // Normalization statistics from the training fold only; trials
            // contributing no training segment are excluded.
            std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> ranges(filtered.size());
            for (const Segment& s : ctx.train_segments) {
                ranges[static_cast<std::size_t>(s.trial)].push_back({s.start, s.end});
            }
            std::vector<const Trial*> used;
            std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> used_ranges;
            for (std::size_t t = 0; t < filtered.size(); ++t) {
                if (!ranges[t].empty()) {
                    used.push_back(&filtered[t]);
                    used_ranges.push_back(ranges[t]);
                }
            }
            const TrialNorm norm = compute_norm(used, used_ranges);
            ctx.trials.reserve(filtered.size());
            for (const Trial& t : filtered) ctx.trials.push_back(apply_norm(t, norm));
        }

        FoldOutcome fold;
        if (reference) {
            fold = run_reference_fold(algorithm, ctx, opts);
        } else if (algorithm == "mmse-avgcorr-ridge") {
            fold = run_avgcorr_fold(ctx, Penalty::Ridge, opts, grid, lags, diag);
        } else if (algorithm == "mmse-avgcorr-lasso") {
            fold = run_avgcorr_fold(ctx, Penalty::Lasso, opts, grid, lags, diag);
        } else if (algorithm == "mmse-avgdec-ridge") {
            fold = run_avgdec_fold(ctx, Penalty::Ridge, opts, grid, lags, diag);
        } else if (algorithm == "mmse-avgdec-lasso") {
            fold = run_avgdec_fold(ctx, Penalty::Lasso, opts, grid, lags, diag);
        } else if (algorithm == "cca") {
            fold = run_cca_fold(ctx, opts, lags, enc_lags, diag);
        } else if (algorithm == "mmse-adap-lasso") {
            fold = run_adaptive_fold(ctx, opts, grid, lags, diag);
        } else {  // nn-sr
            fold = run_nnsr_fold(ctx, opts, lags, diag);
        }
        if (diag) diag->fold_model_digests.push_back(fold.digest);
        for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
            all[ti].insert(all[ti].end(), fold.decisions[ti].begin(), fold.decisions[ti].end());
        }
    }

    PerformanceCurve curve;
    curve.subject_id = subject_trials[0].subject_id;
    curve.algorithm = algorithm;
    for (std::size_t ti = 0; ti < opts.taus.size(); ++ti) {
        CurvePoint pt;
        pt.tau_s = opts.taus[ti];
        pt.n_decisions = static_cast<int>(all[ti].size());
        pt.accuracy_pct = all[ti].empty() ? 0.0 : accuracy(all[ti]);
        curve.points.push_back(pt);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// CSV helpers.

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string curve_csv_header() { return "algorithm,subject,tau_s,accuracy_pct,n_decisions"; }

void append_curve_csv(std::string& out, const PerformanceCurve& curve) {
    for (const CurvePoint& pt : curve.points) {
        out += curve.algorithm + "," + curve.subject_id + "," + format_double(pt.tau_s) + "," +
               format_double(pt.accuracy_pct) + "," + std::to_string(pt.n_decisions) + "\n";
    }
}

std::vector<PerformanceCurve> parse_curve_csv(const std::string& csv) {
    std::vector<PerformanceCurve> curves;
    std::istringstream is(csv);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == curve_csv_header()) continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 5) throw DataError("curve csv: malformed line '" + line + "'");
        CurvePoint pt;
        try {
            pt.tau_s = std::stod(fields[2]);
            pt.accuracy_pct = std::stod(fields[3]);
            pt.n_decisions = std::stoi(fields[4]);
        } catch (const std::exception&) {
            throw DataError("curve csv: bad numeric field in '" + line + "'");
        }
        if (curves.empty() || curves.back().algorithm != fields[0] ||
            curves.back().subject_id != fields[1]) {
            PerformanceCurve c;
            c.algorithm = fields[0];
            c.subject_id = fields[1];
            curves.push_back(c);
        }
        curves.back().points.push_back(pt);
    }
    return curves;
}

std::string mesd_csv_header() {
    return "algorithm,subject,mesd_s,optimal_tau_s,states,target_state,status";
}

void append_mesd_csv(std::string& out, const std::string& algorithm, const std::string& subject,
                     const MesdResult& r, const MesdOptions& opts) {
    out += algorithm + "," + subject + ",";
    if (r.finite) {
        out += format_double(r.seconds) + "," + format_double(r.optimal_tau_s) + "," +
               std::to_string(r.states) + "," + std::to_string(r.target_state) + ",finite\n";
    } else {
        out += mesd_cell(r, opts) + ",,,,unbounded\n";
    }
}

}  // namespace aad
