// aadbench: synthesize datasets, run attention-decoding benchmarks, and
// report accuracy curves and MESD tables.

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "aad/bench.hpp"
#include "aad/dataset.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int run_synth(const std::string& config_path, const std::string& out_override,
              std::uint64_t seed, bool seed_set) {
    aad::SynthRunConfig cfg = config_path.empty() ? aad::SynthRunConfig{}
                                                  : aad::SynthRunConfig::from_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_set) cfg.synth.seed = seed;
    const std::string manifest = aad::generate_dataset(cfg.synth, cfg.n_subjects, cfg.trf_jitter,
                                                       cfg.out_dir);
    std::cout << "wrote " << manifest << "\n";
    return kExitOk;
}

int run_evaluate(const std::string& config_path, const std::string& out_override,
                 std::uint64_t seed, bool seed_set, int workers, bool workers_set) {
    aad::RunConfig cfg = aad::RunConfig::from_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_set) cfg.eval.seed = seed;
    if (workers_set) cfg.workers = workers;
    const aad::RunResult res = aad::run_evaluation(cfg);
    std::cout << "curves: " << res.curves_csv_path << "\n";
    std::cout << "mesd:   " << res.mesd_csv_path << "\n";
    std::cout << "run manifest: " << res.manifest_path << "\n";
    if (!res.failures.empty()) {
        std::cerr << res.failures.size() << " task(s) failed:\n";
        for (const std::string& f : res.failures) std::cerr << "  " << f << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"auditory attention decoding benchmark"};
    app.require_subcommand(1);

    std::string config_path, out_dir, results_dir, dataset_dir, curves_path;
    std::uint64_t seed = 1;
    int workers = 1;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
    synth->add_option("--config", config_path, "synth config (JSON)");
    synth->add_option("--out", out_dir, "output dataset directory");
    CLI::Option* synth_seed = synth->add_option("--seed", seed, "generator seed");

    CLI::App* evaluate = app.add_subcommand("evaluate", "run the cross-validated benchmark");
    evaluate->add_option("--config", config_path, "run config (JSON)")->required();
    evaluate->add_option("--out", out_dir, "results directory (overrides config)");
    CLI::Option* eval_seed = evaluate->add_option("--seed", seed, "harness seed (overrides config)");
    CLI::Option* eval_workers =
        evaluate->add_option("--workers", workers, "worker threads (overrides config)");

    CLI::App* report = app.add_subcommand("report", "aggregate a results directory");
    report->add_option("results", results_dir, "results directory with curves.csv")->required();

    CLI::App* mesd_cmd = app.add_subcommand("mesd", "MESD table from a curves.csv file");
    mesd_cmd->add_option("curves", curves_path, "curves.csv path")->required();

    CLI::App* inspect = app.add_subcommand("inspect", "dataset summary");
    inspect->add_option("dataset", dataset_dir, "dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            return run_synth(config_path, out_dir, seed, !synth_seed->empty());
        }
        if (evaluate->parsed()) {
            return run_evaluate(config_path, out_dir, seed, !eval_seed->empty(), workers,
                                !eval_workers->empty());
        }
        if (report->parsed()) {
            std::cout << aad::write_report(results_dir);
            return kExitOk;
        }
        if (mesd_cmd->parsed()) {
            std::cout << aad::mesd_table_from_csv(curves_path, aad::MesdOptions{});
            return kExitOk;
        }
        if (inspect->parsed()) {
            std::cout << aad::inspect_dataset(dataset_dir);
            return kExitOk;
        }
    } catch (const aad::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const aad::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
