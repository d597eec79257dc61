#include "aad/adaptive.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "aad/lagged.hpp"

namespace aad {

const std::vector<std::string>& default_adaptive_channel_labels() {
    // Placeholder 28-label spread over a standard 64-channel cap; override
    // from config for real recordings.
    static const std::vector<std::string> labels = {
        "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FC5", "FC1", "FC2",
        "FC6", "T7",  "C3",  "Cz",  "C4",  "T8",  "CP5", "CP1", "CP2", "CP6",
        "P7",  "P3",  "Pz",  "P4",  "P8",  "O1",  "Oz",  "O2"};
    return labels;
}

ChannelSubset resolve_channel_subset(const MultiChannel& eeg, const std::vector<int>& indices) {
    ChannelSubset subset;
    std::set<int> seen;
    for (int idx : indices) {
        if (idx < 0 || idx >= eeg.channels()) {
            throw ParameterError("channel subset: index " + std::to_string(idx) + " out of range");
        }
        if (!seen.insert(idx).second) {
            throw ParameterError("channel subset: duplicate index " + std::to_string(idx));
        }
        subset.indices.push_back(idx);
        subset.labels.push_back(idx < static_cast<int>(eeg.channel_labels.size())
                                    ? eeg.channel_labels[static_cast<std::size_t>(idx)]
                                    : "ch" + std::to_string(idx));
    }
    if (subset.indices.empty()) throw ParameterError("channel subset: empty selection");
    return subset;
}

ChannelSubset resolve_channel_subset(const MultiChannel& eeg, const std::vector<std::string>& labels) {
    if (labels.empty()) {
        std::vector<int> all(static_cast<std::size_t>(eeg.channels()));
        for (int i = 0; i < eeg.channels(); ++i) all[static_cast<std::size_t>(i)] = i;
        return resolve_channel_subset(eeg, all);
    }
    std::vector<int> indices;
    for (const std::string& label : labels) {
        auto it = std::find(eeg.channel_labels.begin(), eeg.channel_labels.end(), label);
        if (it == eeg.channel_labels.end()) {
            throw ParameterError("channel subset: unknown label '" + label + "'");
        }
        indices.push_back(static_cast<int>(it - eeg.channel_labels.begin()));
    }
    return resolve_channel_subset(eeg, indices);
}

MultiChannel restrict_channels(const MultiChannel& eeg, const ChannelSubset& subset) {
    MultiChannel out;
    out.fs = eeg.fs;
    out.data.resize(eeg.samples(), static_cast<Eigen::Index>(subset.indices.size()));
    for (std::size_t i = 0; i < subset.indices.size(); ++i) {
        out.data.col(static_cast<Eigen::Index>(i)) = eeg.data.col(subset.indices[i]);
        out.channel_labels.push_back(subset.labels[i]);
    }
    return out;
}

AdaptiveDecision adap_decide(const MultiChannel& window_eeg,
                             const std::vector<Eigen::VectorXd>& envelopes,
                             const AdaptiveOptions& opts,
                             std::vector<LassoState>* states) {
    if (envelopes.size() < 2) throw ParameterError("adap_decide: needs at least two envelopes");
    if (window_eeg.samples() < opts.lags) {
        throw InsufficientDataError("adap_decide: window shorter than the lag count");
    }
    const LaggedDesign design = build_lagged(window_eeg, opts.lags, LagDirection::AntiCausal);
    const std::size_t n = envelopes.size();
    if (states && states->size() != n) states->resize(n);

    AdaptiveDecision dec;
    dec.decoders.resize(n);
    dec.l1_norms.resize(static_cast<Eigen::Index>(n));
    dec.converged.resize(n);
    if (opts.correlation_marker) dec.output_correlations.resize(static_cast<Eigen::Index>(n));

    // One shared scale anchor across the speakers' problems: the same
    // absolute penalty lambda_rel * q applies to every decoder, so the
    // weakly represented speaker shrinks away first and the L1 comparison
    // carries information. Per-speaker anchors would equalize the shrinkage
    // profiles and destroy the marker.
    std::vector<SegmentStats> stats;
    double q_shared = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (envelopes[i].size() != window_eeg.samples()) {
            throw DimensionError("adap_decide: envelope length != window length");
        }
        const Eigen::VectorXd target = aligned_target(design, envelopes[i]);
        stats.push_back(segment_stats(design, target));
        q_shared = std::max(q_shared, stats.back().rxs.lpNorm<Eigen::Infinity>());
    }

    for (std::size_t i = 0; i < n; ++i) {
        const SegmentStats& st = stats[i];
        const double q_own = st.rxs.lpNorm<Eigen::Infinity>();
        // Rescale lambda so that lambda_rel * q_shared is the absolute
        // penalty of problem i (the solver anchors on the problem's own q).
        const double lambda_eff = q_own > 0.0 ? opts.lambda_rel * q_shared / q_own
                                              : std::max(1.0, opts.lambda_rel);
        const LassoResult r =
            solve_lasso_admm(st, lambda_eff, opts.admm, states ? &(*states)[i] : nullptr);
        Decoder d;
        d.weights = r.weights;
        d.lags = design.lags;
        d.channels = design.channels;
        d.meta.flavor = "mmse-adap-lasso";
        d.meta.lambda_rel = opts.lambda_rel;
        d.meta.converged = r.converged;
        dec.l1_norms[static_cast<Eigen::Index>(i)] = d.weights.lpNorm<1>();
        dec.converged[i] = r.converged;
        if (opts.correlation_marker) {
            const Eigen::VectorXd shat = reconstruct(d, design);
            dec.output_correlations[static_cast<Eigen::Index>(i)] =
                pearson(shat, aligned_target(design, envelopes[i]));
        }
        dec.decoders[i] = std::move(d);
    }

    dec.degenerate = dec.l1_norms.maxCoeff() == 0.0;
    dec.speaker = 0;
    for (Eigen::Index i = 1; i < dec.l1_norms.size(); ++i) {
        if (dec.l1_norms[i] > dec.l1_norms[dec.speaker]) dec.speaker = static_cast<int>(i);
    }
    for (Eigen::Index i = 0; i < dec.l1_norms.size(); ++i) {
        if (i != dec.speaker && dec.l1_norms[i] == dec.l1_norms[dec.speaker]) dec.tie = true;
    }
    return dec;
}

std::string adaptive_diag_csv_header() {
    return "window,speaker,tie,degenerate,l1_norms,converged";
}

std::string adaptive_diag_csv_row(int window_index, const AdaptiveDecision& d) {
    std::ostringstream os;
    os << window_index << ',' << d.speaker << ',' << (d.tie ? 1 : 0) << ','
       << (d.degenerate ? 1 : 0) << ',';
    for (Eigen::Index i = 0; i < d.l1_norms.size(); ++i) {
        if (i) os << ';';
        os << d.l1_norms[i];
    }
    os << ',';
    for (std::size_t i = 0; i < d.converged.size(); ++i) {
        if (i) os << ';';
        os << (d.converged[i] ? 1 : 0);
    }
    return os.str();
}

}  // namespace aad
