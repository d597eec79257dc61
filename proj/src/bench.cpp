#include "aad/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "aad/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aad {

namespace {

[[noreturn]] void bad_field(const std::string& name, const std::string& why) {
    throw ParameterError("config field '" + name + "': " + why);
}

double get_number(const json& j, const std::string& name, double fallback) {
    if (!j.contains(name)) return fallback;
    if (!j[name].is_number()) bad_field(name, "expected a number");
    return j[name].get<double>();
}

int get_int(const json& j, const std::string& name, int fallback) {
    if (!j.contains(name)) return fallback;
    if (!j[name].is_number_integer()) bad_field(name, "expected an integer");
    return j[name].get<int>();
}

std::string get_string(const json& j, const std::string& name, const std::string& fallback) {
    if (!j.contains(name)) return fallback;
    if (!j[name].is_string()) bad_field(name, "expected a string");
    return j[name].get<std::string>();
}

std::vector<double> get_number_list(const json& j, const std::string& name,
                                    std::vector<double> fallback) {
    if (!j.contains(name)) return fallback;
    if (!j[name].is_array()) bad_field(name, "expected an array of numbers");
    std::vector<double> out;
    for (const json& v : j[name]) {
        if (!v.is_number()) bad_field(name, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParameterError("config: invalid JSON: " + std::string(e.what()));
    }
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    const json j = parse_json_text(text);
    RunConfig cfg;
    cfg.dataset_dir = get_string(j, "dataset", "");
    if (cfg.dataset_dir.empty()) bad_field("dataset", "required (dataset directory path)");
    cfg.out_dir = get_string(j, "out", cfg.out_dir);
    cfg.workers = get_int(j, "workers", cfg.workers);
    if (cfg.workers < 1) bad_field("workers", "must be >= 1");

    if (j.contains("algorithms")) {
        if (!j["algorithms"].is_array()) bad_field("algorithms", "expected an array of ids");
        cfg.algorithms.clear();
        for (const json& a : j["algorithms"]) {
            if (!a.is_string()) bad_field("algorithms", "expected an array of ids");
            const std::string id = a.get<std::string>();
            if (!is_algorithm(id)) bad_field("algorithms", "unknown algorithm '" + id + "'");
            cfg.algorithms.push_back(id);
        }
        if (cfg.algorithms.empty()) bad_field("algorithms", "must not be empty");
    }

    EvalOptions& e = cfg.eval;
    e.seed = static_cast<std::uint64_t>(get_number(j, "seed", static_cast<double>(e.seed)));
    e.taus = get_number_list(j, "tau_grid", e.taus);
    for (std::size_t i = 0; i < e.taus.size(); ++i) {
        if (e.taus[i] <= 0 || (i > 0 && e.taus[i] <= e.taus[i - 1])) {
            bad_field("tau_grid", "must be positive and strictly increasing");
        }
    }
    e.lambda_grid = get_number_list(j, "lambda_grid", e.lambda_grid);
    for (std::size_t i = 0; i < e.lambda_grid.size(); ++i) {
        if (e.lambda_grid[i] < 0 || (i > 0 && e.lambda_grid[i] <= e.lambda_grid[i - 1])) {
            bad_field("lambda_grid", "must be nonnegative and strictly increasing");
        }
    }
    e.seg_seconds = get_number(j, "segment_seconds", e.seg_seconds);
    if (e.seg_seconds <= 0) bad_field("segment_seconds", "must be positive");
    e.inner_folds = get_int(j, "inner_folds", e.inner_folds);
    if (e.inner_folds < 2) bad_field("inner_folds", "must be >= 2");
    e.max_components = get_int(j, "max_components", e.max_components);
    if (e.max_components < 1) bad_field("max_components", "must be >= 1");

    if (j.contains("linear_path")) {
        const json& p = j["linear_path"];
        e.linear_path.fs_out = get_number(p, "fs", e.linear_path.fs_out);
        e.linear_path.f_lo = get_number(p, "f_lo", e.linear_path.f_lo);
        e.linear_path.f_hi = get_number(p, "f_hi", e.linear_path.f_hi);
    }
    if (j.contains("nn_path")) {
        const json& p = j["nn_path"];
        e.nn_path.fs_out = get_number(p, "fs", e.nn_path.fs_out);
        e.nn_path.f_lo = get_number(p, "f_lo", e.nn_path.f_lo);
        e.nn_path.f_hi = get_number(p, "f_hi", e.nn_path.f_hi);
    }
    e.decoder_ms = get_number(j, "decoder_ms", e.decoder_ms);
    e.encoder_ms = get_number(j, "encoder_ms", e.encoder_ms);
    e.nn_decoder_ms = get_number(j, "nn_decoder_ms", e.nn_decoder_ms);
    if (j.contains("adaptive_channels")) {
        if (!j["adaptive_channels"].is_array()) bad_field("adaptive_channels", "expected an array");
        for (const json& c : j["adaptive_channels"]) {
            if (!c.is_string()) bad_field("adaptive_channels", "expected channel label strings");
            e.adaptive_channels.push_back(c.get<std::string>());
        }
    }
    if (j.contains("admm")) {
        const json& a = j["admm"];
        e.admm.rho = get_number(a, "rho", e.admm.rho);
        e.admm.tol = get_number(a, "tol", e.admm.tol);
        e.admm.max_iter = get_int(a, "max_iter", e.admm.max_iter);
    }
    if (j.contains("nn_train")) {
        const json& t = j["nn_train"];
        e.nn_train.lr = get_number(t, "lr", e.nn_train.lr);
        e.nn_train.epochs = get_int(t, "epochs", e.nn_train.epochs);
        e.nn_train.patience = get_int(t, "patience", e.nn_train.patience);
        e.nn_train.validation_fraction =
            get_number(t, "validation_fraction", e.nn_train.validation_fraction);
    }
    if (j.contains("mesd")) {
        const json& m = j["mesd"];
        e.mesd.k_min = get_int(m, "k_min", e.mesd.k_min);
        e.mesd.k_max = get_int(m, "k_max", e.mesd.k_max);
        e.mesd.comfort_gain = get_number(m, "comfort_gain", e.mesd.comfort_gain);
        e.mesd.comfort_threshold = get_number(m, "comfort_threshold", e.mesd.comfort_threshold);
        e.mesd.bound_s = get_number(m, "bound_s", e.mesd.bound_s);
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_json_text(read_file(path));
}

std::string RunConfig::to_json_text() const {
    json j;
    j["dataset"] = dataset_dir;
    j["algorithms"] = algorithms;
    j["out"] = out_dir;
    j["workers"] = workers;
    j["seed"] = eval.seed;
    j["tau_grid"] = eval.taus;
    j["lambda_grid"] = eval.lambda_grid.empty() ? default_lambda_grid() : eval.lambda_grid;
    j["segment_seconds"] = eval.seg_seconds;
    j["inner_folds"] = eval.inner_folds;
    j["max_components"] = eval.max_components;
    j["linear_path"] = {{"fs", eval.linear_path.fs_out},
                        {"f_lo", eval.linear_path.f_lo},
                        {"f_hi", eval.linear_path.f_hi}};
    j["nn_path"] = {{"fs", eval.nn_path.fs_out},
                    {"f_lo", eval.nn_path.f_lo},
                    {"f_hi", eval.nn_path.f_hi}};
    j["decoder_ms"] = eval.decoder_ms;
    j["encoder_ms"] = eval.encoder_ms;
    j["nn_decoder_ms"] = eval.nn_decoder_ms;
    j["adaptive_channels"] = eval.adaptive_channels;
    j["admm"] = {{"rho", eval.admm.rho}, {"tol", eval.admm.tol}, {"max_iter", eval.admm.max_iter}};
    j["nn_train"] = {{"lr", eval.nn_train.lr},
                     {"epochs", eval.nn_train.epochs},
                     {"patience", eval.nn_train.patience},
                     {"validation_fraction", eval.nn_train.validation_fraction}};
    j["mesd"] = {{"k_min", eval.mesd.k_min},
                 {"k_max", eval.mesd.k_max},
                 {"comfort_gain", eval.mesd.comfort_gain},
                 {"comfort_threshold", eval.mesd.comfort_threshold},
                 {"bound_s", eval.mesd.bound_s}};
    return j.dump(2) + "\n";
}

SynthRunConfig SynthRunConfig::from_json_text(const std::string& text) {
    const json j = parse_json_text(text);
    SynthRunConfig cfg;
    cfg.out_dir = get_string(j, "out", cfg.out_dir);
    cfg.n_subjects = get_int(j, "subjects", cfg.n_subjects);
    if (cfg.n_subjects < 1) bad_field("subjects", "must be >= 1");
    cfg.trf_jitter = get_number(j, "trf_jitter", cfg.trf_jitter);
    if (cfg.trf_jitter < 0) bad_field("trf_jitter", "must be >= 0");
    SynthConfig& s = cfg.synth;
    s.channels = get_int(j, "channels", s.channels);
    s.duration_s = get_number(j, "duration_s", s.duration_s);
    s.fs = get_number(j, "fs", s.fs);
    s.n_speakers = get_int(j, "speakers", s.n_speakers);
    s.unattended_gain = get_number(j, "unattended_gain", s.unattended_gain);
    s.noise_sigma = get_number(j, "noise_sigma", s.noise_sigma);
    s.envelope_cutoff_hz = get_number(j, "envelope_cutoff_hz", s.envelope_cutoff_hz);
    s.kernel_span_ms = get_number(j, "kernel_span_ms", s.kernel_span_ms);
    s.seed = static_cast<std::uint64_t>(get_number(j, "seed", static_cast<double>(s.seed)));
    const std::string noise = get_string(j, "noise", "white");
    if (noise == "white") {
        s.noise = NoiseColor::White;
    } else if (noise == "pink") {
        s.noise = NoiseColor::Pink;
    } else {
        bad_field("noise", "expected 'white' or 'pink'");
    }
    s.distinct_unattended_kernel = j.value("distinct_unattended_kernel", false);
    if (s.channels < 1) bad_field("channels", "must be >= 1");
    if (s.duration_s <= 0) bad_field("duration_s", "must be positive");
    if (s.fs <= 0) bad_field("fs", "must be positive");
    if (s.n_speakers < 2) bad_field("speakers", "must be >= 2");
    if (s.unattended_gain < 0 || s.unattended_gain > 1) bad_field("unattended_gain", "must be in [0, 1]");
    if (s.noise_sigma < 0) bad_field("noise_sigma", "must be >= 0");
    return cfg;
}

SynthRunConfig SynthRunConfig::from_file(const std::string& path) {
    return from_json_text(read_file(path));
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunResult run_evaluation(const RunConfig& cfg) {
    const std::vector<Trial> trials = load_dataset(cfg.dataset_dir);
    const auto subjects = group_by_subject(std::move(trials));
    if (subjects.empty()) throw DataError("run_evaluation: dataset has no trials");

    struct Task {
        std::string subject;
        std::string algorithm;
        const std::vector<Trial>* trials;
    };
    std::vector<Task> tasks;
    for (const std::string& algo : cfg.algorithms) {
        for (const auto& [subject, subject_trials] : subjects) {
            tasks.push_back({subject, algo, &subject_trials});
        }
    }

    // Bounded worker pool; each task is seeded independently of scheduling,
    // and results land in a slot indexed by task, so output is deterministic
    // for any worker count.
    std::vector<SubjectResult> results(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            SubjectResult& r = results[i];
            r.subject_id = tasks[i].subject;
            r.algorithm = tasks[i].algorithm;
            try {
                LosoDiagnostics diag;
                r.curve = run_loso_cv(tasks[i].algorithm, *tasks[i].trials, cfg.eval, &diag);
                r.mesd = mesd(r.curve, cfg.eval.mesd);
                r.messages = diag.messages;
                r.adaptive_csv = std::move(diag.adaptive_csv);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Per-task failures are reported and skipped; the run carries on.
    std::vector<SubjectResult> ok;
    std::vector<std::string> failure_lines;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (errors[i].empty()) {
            ok.push_back(std::move(results[i]));
        } else {
            failure_lines.push_back(tasks[i].algorithm + "/" + tasks[i].subject + ": " + errors[i]);
        }
    }
    std::sort(ok.begin(), ok.end(), [](const SubjectResult& a, const SubjectResult& b) {
        return a.algorithm != b.algorithm ? a.algorithm < b.algorithm : a.subject_id < b.subject_id;
    });

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw DataError("run_evaluation: cannot create '" + cfg.out_dir + "': " + ec.message());

    std::string curves_csv = curve_csv_header() + "\n";
    std::string mesd_csv = mesd_csv_header() + "\n";
    for (const SubjectResult& r : ok) {
        append_curve_csv(curves_csv, r.curve);
        append_mesd_csv(mesd_csv, r.algorithm, r.subject_id, r.mesd, cfg.eval.mesd);
        if (!r.adaptive_csv.empty()) {
            std::ofstream os(fs::path(cfg.out_dir) / ("adaptive_diag_" + r.subject_id + ".csv"),
                             std::ios::binary);
            os << r.adaptive_csv;
        }
    }

    RunResult out;
    out.results = std::move(ok);
    out.failures = failure_lines;
    out.curves_csv_path = (fs::path(cfg.out_dir) / "curves.csv").string();
    out.mesd_csv_path = (fs::path(cfg.out_dir) / "mesd.csv").string();
    out.manifest_path = (fs::path(cfg.out_dir) / "run_manifest.json").string();
    {
        std::ofstream os(out.curves_csv_path, std::ios::binary);
        os << curves_csv;
    }
    {
        std::ofstream os(out.mesd_csv_path, std::ios::binary);
        os << mesd_csv;
    }
    {
        const std::string cfg_text = cfg.to_json_text();
        json manifest;
        manifest["tool"] = "aadbench";
        manifest["version"] = "1.0.0";
        manifest["config"] = json::parse(cfg_text);
        manifest["config_hash"] = fnv1a_hex(cfg_text);
        manifest["seed"] = cfg.eval.seed;
        manifest["workers"] = cfg.workers;
        manifest["tasks"] = tasks.size();
        manifest["failures"] = failure_lines;
        std::ofstream os(out.manifest_path);
        os << manifest.dump(2) << "\n";
    }
    return out;
}

namespace {

struct MesdEntry {
    std::string algorithm;
    std::string subject;
    double seconds = 0.0;  // +inf when censored
    bool finite = true;
    std::string raw;  // original cell, keeps the ">bound" marker
};

std::vector<MesdEntry> parse_mesd_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    std::vector<MesdEntry> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == mesd_csv_header()) continue;
        }
        std::istringstream ls(line);
        std::string algo, subject, value;
        std::getline(ls, algo, ',');
        std::getline(ls, subject, ',');
        std::getline(ls, value, ',');
        MesdEntry e;
        e.algorithm = algo;
        e.subject = subject;
        e.raw = value;
        if (!value.empty() && value[0] == '>') {
            e.finite = false;
            e.seconds = std::numeric_limits<double>::infinity();
        } else {
            try {
                e.seconds = std::stod(value);
            } catch (const std::exception&) {
                throw DataError("mesd csv: bad value '" + value + "'");
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

// Median over entries where censored values sort above every finite value.
// A censored middle makes the median itself censored.
std::string censored_median(std::vector<MesdEntry> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const MesdEntry& a, const MesdEntry& b) { return a.seconds < b.seconds; });
    const std::size_t n = entries.size();
    if (n % 2 == 1) {
        const MesdEntry& m = entries[n / 2];
        if (!m.finite) return m.raw;
        std::ostringstream os;
        os << m.seconds;
        return os.str();
    }
    const MesdEntry& a = entries[n / 2 - 1];
    const MesdEntry& b = entries[n / 2];
    if (!b.finite) return b.raw;
    if (!a.finite) return a.raw;
    std::ostringstream os;
    os << 0.5 * (a.seconds + b.seconds);
    return os.str();
}

}  // namespace

std::string write_report(const std::string& results_dir) {
    const fs::path curves_path = fs::path(results_dir) / "curves.csv";
    std::ifstream is(curves_path);
    if (!is) throw DataError("write_report: no curves.csv in '" + results_dir + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    const std::vector<PerformanceCurve> curves = parse_curve_csv(buf.str());
    if (curves.empty()) throw DataError("write_report: empty results");

    // Mean accuracy with standard error of the mean across subjects.
    struct Key {
        std::string algorithm;
        double tau;
        bool operator<(const Key& o) const {
            return algorithm != o.algorithm ? algorithm < o.algorithm : tau < o.tau;
        }
    };
    std::map<Key, std::vector<double>> acc;
    for (const PerformanceCurve& c : curves) {
        for (const CurvePoint& p : c.points) {
            acc[{c.algorithm, p.tau_s}].push_back(p.accuracy_pct);
        }
    }
    std::string accuracy_csv = "algorithm,tau_s,mean_accuracy_pct,sem_pct,n_subjects\n";
    for (const auto& [key, values] : acc) {
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n;
        std::string sem = "NA";
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            std::ostringstream os;
            os << std::sqrt(ss / (n - 1.0) / n);
            sem = os.str();
        }
        std::ostringstream row;
        row << key.algorithm << "," << key.tau << "," << mean << "," << sem << ","
            << values.size() << "\n";
        accuracy_csv += row.str();
    }

    std::string mesd_report_csv = "algorithm,median_mesd_s,n_unbounded,n_subjects\n";
    std::string summary;
    const fs::path mesd_path = fs::path(results_dir) / "mesd.csv";
    if (fs::exists(mesd_path)) {
        const std::vector<MesdEntry> entries = parse_mesd_csv(mesd_path.string());
        std::map<std::string, std::vector<MesdEntry>> by_algo;
        for (const MesdEntry& e : entries) by_algo[e.algorithm].push_back(e);
        for (const auto& [algo, list] : by_algo) {
            int unbounded = 0;
            for (const MesdEntry& e : list) unbounded += e.finite ? 0 : 1;
            const std::string med = censored_median(list);
            mesd_report_csv += algo + "," + med + "," + std::to_string(unbounded) + "," +
                               std::to_string(list.size()) + "\n";
            summary += "MESD median " + algo + ": " + med + " (" + std::to_string(unbounded) +
                       " unbounded of " + std::to_string(list.size()) + ")\n";
        }
    }

    {
        std::ofstream os(fs::path(results_dir) / "report_accuracy.csv", std::ios::binary);
        os << accuracy_csv;
    }
    {
        std::ofstream os(fs::path(results_dir) / "report_mesd.csv", std::ios::binary);
        os << mesd_report_csv;
    }
    return accuracy_csv + "\n" + mesd_report_csv + "\n" + summary;
}

std::string mesd_table_from_csv(const std::string& curves_csv_path, const MesdOptions& opts) {
    std::ifstream is(curves_csv_path);
    if (!is) throw DataError("cannot open '" + curves_csv_path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    const std::vector<PerformanceCurve> curves = parse_curve_csv(buf.str());
    std::string out = mesd_csv_header() + "\n";
    for (const PerformanceCurve& c : curves) {
        append_mesd_csv(out, c.algorithm, c.subject_id, mesd(c, opts), opts);
    }
    return out;
}

std::string inspect_dataset(const std::string& dataset_dir) {
    const std::vector<Trial> trials = load_dataset(dataset_dir);
    const auto subjects = group_by_subject(trials);
    std::ostringstream os;
    os << "dataset: " << dataset_dir << "\n";
    os << "trials: " << trials.size() << ", subjects: " << subjects.size() << "\n";
    for (const auto& [subject, list] : subjects) {
        double seconds = 0.0;
        for (const Trial& t : list) seconds += t.eeg.data.rows() / t.eeg.fs;
        os << "  " << subject << ": " << list.size() << " trial(s), " << seconds << " s, "
           << list.front().eeg.channels() << " channels @ " << list.front().eeg.fs << " Hz, "
           << list.front().envelopes.size() << " speakers\n";
    }
    return os.str();
}

}  // namespace aad
