#pragma once

#include <string>
#include <vector>

#include "aad/evaluation.hpp"
#include "aad/synth.hpp"

namespace aad {

// Operator-facing run description (CLI `evaluate`). Parsed from a JSON
// config file; unknown or ill-typed fields raise ParameterError naming the
// field.
struct RunConfig {
    std::string dataset_dir;
    std::vector<std::string> algorithms = {"mmse-avgcorr-ridge"};
    std::string out_dir = "results";
    int workers = 1;
    EvalOptions eval;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_text() const;
};

// `synth` subcommand config.
struct SynthRunConfig {
    SynthConfig synth;
    int n_subjects = 2;
    double trf_jitter = 0.1;
    std::string out_dir = "dataset";

    static SynthRunConfig from_json_text(const std::string& text);
    static SynthRunConfig from_file(const std::string& path);
};

struct SubjectResult {
    std::string subject_id;
    std::string algorithm;
    PerformanceCurve curve;
    MesdResult mesd;
    std::vector<std::string> messages;
    std::string adaptive_csv;  // per-window diagnostics, written next to the curves
};

struct RunResult {
    std::vector<SubjectResult> results;  // sorted by (algorithm, subject)
    std::vector<std::string> failures;   // per-task errors ("algo/subject: what")
    std::string curves_csv_path;
    std::string mesd_csv_path;
    std::string manifest_path;
};

// Runs every (subject, algorithm) task over a bounded worker pool; outputs
// are aggregated in a deterministic order independent of scheduling. Writes
// curves.csv, mesd.csv and run_manifest.json into out_dir.
RunResult run_evaluation(const RunConfig& cfg);

// Aggregation over a results directory: per-algorithm mean accuracy with
// standard error across subjects per tau, and per-algorithm MESD medians
// (censored ">bound" entries sort above all finite values and are included
// in the median). Writes report_accuracy.csv and report_mesd.csv, returns
// a printable summary.
std::string write_report(const std::string& results_dir);

// Single-curve MESD table from a curves.csv file (CLI `mesd`).
std::string mesd_table_from_csv(const std::string& curves_csv_path, const MesdOptions& opts);

// Dataset summary (CLI `inspect`).
std::string inspect_dataset(const std::string& dataset_dir);

// 64-bit FNV-1a of a string, hex encoded; used for config hashes.
std::string fnv1a_hex(const std::string& text);

}  // namespace aad
