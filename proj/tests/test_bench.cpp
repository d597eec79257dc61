#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aad/bench.hpp"
#include "aad/dataset.hpp"
#include "aad/serialize.hpp"
#include "aad/synth.hpp"

using namespace aad;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("aad_bench_" + name);
    fs::remove_all(dir);
    return dir.string();
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string make_small_dataset(const std::string& dir) {
    SynthConfig cfg;
    cfg.channels = 6;
    cfg.duration_s = 180.0;
    cfg.noise_sigma = 0.5;
    cfg.unattended_gain = 0.5;
    cfg.seed = 7;
    return generate_dataset(cfg, 2, 0.1, dir);
}

}  // namespace

TEST_CASE("run config parsing names offending fields") {
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text("{}"),
                         doctest::Contains("dataset"), ParameterError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"dataset": "d", "workers": 0})"),
                         doctest::Contains("workers"), ParameterError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"dataset": "d", "algorithms": ["bogus"]})"),
                         doctest::Contains("bogus"), ParameterError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"dataset": "d", "tau_grid": [5, 5]})"),
                         doctest::Contains("tau_grid"), ParameterError);
    CHECK_THROWS_AS(RunConfig::from_json_text("not json"), ParameterError);

    const RunConfig cfg = RunConfig::from_json_text(
        R"({"dataset": "d", "algorithms": ["oracle"], "seed": 9, "tau_grid": [5, 30],
            "lambda_grid": [1e-6, 1e-3, 1], "admm": {"tol": 1e-7}})");
    CHECK(cfg.eval.seed == 9);
    CHECK(cfg.eval.taus == std::vector<double>{5, 30});
    CHECK(cfg.eval.lambda_grid.size() == 3);
    CHECK(cfg.eval.admm.tol == 1e-7);
}

TEST_CASE("synth config parsing validates fields") {
    const SynthRunConfig cfg = SynthRunConfig::from_json_text(
        R"({"out": "x", "subjects": 3, "channels": 4, "noise": "pink", "seed": 5})");
    CHECK(cfg.n_subjects == 3);
    CHECK(cfg.synth.channels == 4);
    CHECK(cfg.synth.noise == NoiseColor::Pink);
    CHECK_THROWS_WITH_AS(SynthRunConfig::from_json_text(R"({"noise": "purple"})"),
                         doctest::Contains("noise"), ParameterError);
    CHECK_THROWS_WITH_AS(SynthRunConfig::from_json_text(R"({"subjects": -1})"),
                         doctest::Contains("subjects"), ParameterError);
}

TEST_CASE("oracle evaluation writes an all-100 csv plus manifest") {
    const std::string ds = temp_dir("oracle_ds");
    make_small_dataset(ds);
    RunConfig cfg;
    cfg.dataset_dir = ds;
    cfg.algorithms = {"oracle"};
    cfg.out_dir = temp_dir("oracle_out");
    cfg.eval.taus = {10.0, 30.0};
    const RunResult res = run_evaluation(cfg);
    CHECK(res.failures.empty());
    REQUIRE(res.results.size() == 2);
    for (const SubjectResult& r : res.results) {
        for (const CurvePoint& p : r.curve.points) CHECK(p.accuracy_pct == 100.0);
        CHECK(r.mesd.finite);
    }
    const std::string csv = read_file(res.curves_csv_path);
    CHECK(csv.find("oracle,s01,10,100,") != std::string::npos);

    // The run manifest records config hash and seed.
    const std::string manifest = read_file(res.manifest_path);
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("\"seed\"") != std::string::npos);
    fs::remove_all(ds);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("evaluation is byte-identical across worker counts and never mutates the dataset") {
    const std::string ds = temp_dir("det_ds");
    make_small_dataset(ds);

    // Checksums of every dataset file before the runs.
    std::vector<std::pair<std::string, std::string>> before;
    for (const auto& entry : fs::directory_iterator(ds)) {
        const std::string content = read_file(entry.path().string());
        before.push_back({entry.path().string(), digest_bytes(content.data(), content.size())});
    }

    RunConfig cfg;
    cfg.dataset_dir = ds;
    cfg.algorithms = {"mmse-avgcorr-ridge", "coin"};
    cfg.eval.taus = {10.0, 30.0};
    cfg.eval.seed = 11;

    cfg.out_dir = temp_dir("det_out1");
    cfg.workers = 1;
    const RunResult r1 = run_evaluation(cfg);
    cfg.out_dir = temp_dir("det_out3");
    cfg.workers = 3;
    const RunResult r3 = run_evaluation(cfg);

    CHECK(read_file(r1.curves_csv_path) == read_file(r3.curves_csv_path));
    CHECK(read_file(r1.mesd_csv_path) == read_file(r3.mesd_csv_path));

    for (const auto& [path, digest] : before) {
        const std::string content = read_file(path);
        CHECK(digest_bytes(content.data(), content.size()) == digest);
    }
    fs::remove_all(ds);
    fs::remove_all(r1.curves_csv_path.substr(0, r1.curves_csv_path.find_last_of('/')));
    fs::remove_all(r3.curves_csv_path.substr(0, r3.curves_csv_path.find_last_of('/')));
}

TEST_CASE("per-task failures are reported while the run continues") {
    const std::string ds = temp_dir("fail_ds");
    // 90 s trials: a single 60 s segment per subject, too few for LOSO.
    SynthConfig scfg;
    scfg.channels = 4;
    scfg.duration_s = 90.0;
    scfg.seed = 9;
    generate_dataset(scfg, 1, 0.0, ds);

    RunConfig cfg;
    cfg.dataset_dir = ds;
    cfg.algorithms = {"oracle"};
    cfg.out_dir = temp_dir("fail_out");
    cfg.eval.taus = {30.0};
    const RunResult res = run_evaluation(cfg);
    CHECK(res.results.empty());
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].find("oracle/s01") != std::string::npos);
    fs::remove_all(ds);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("report aggregates accuracy and censored mesd medians") {
    const std::string out = temp_dir("report");
    fs::create_directories(out);
    {
        std::ofstream os(fs::path(out) / "curves.csv");
        os << curve_csv_header() << "\n";
        os << "algo,s01,30,90,10\n";
        os << "algo,s02,30,70,10\n";
        os << "algo,s03,30,80,10\n";
        os << "solo,s01,30,60,10\n";
    }
    {
        std::ofstream os(fs::path(out) / "mesd.csv");
        os << mesd_csv_header() << "\n";
        os << "algo,s01,3,1,10,8,finite\n";
        os << "algo,s02,5,2,10,8,finite\n";
        os << "algo,s03,>50.0,,,,unbounded\n";
        os << "solo,s01,4,1,10,8,finite\n";
    }
    const std::string summary = write_report(out);

    const std::string acc = read_file((fs::path(out) / "report_accuracy.csv").string());
    // Mean 80, sem = sd/sqrt(3) = 10/sqrt(3) = 5.7735.
    CHECK(acc.find("algo,30,80,5.7735") != std::string::npos);
    // Single subject: no standard error.
    CHECK(acc.find("solo,30,60,NA,1") != std::string::npos);

    const std::string mesd_rep = read_file((fs::path(out) / "report_mesd.csv").string());
    // Median of {3, 5, >50} is 5; the censored entry still counts.
    CHECK(mesd_rep.find("algo,5,1,3") != std::string::npos);
    CHECK(summary.find("MESD median algo: 5") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("report with a censored median keeps the marker") {
    const std::string out = temp_dir("report2");
    fs::create_directories(out);
    {
        std::ofstream os(fs::path(out) / "curves.csv");
        os << curve_csv_header() << "\n";
        os << "a,s01,30,55,10\n";
    }
    {
        std::ofstream os(fs::path(out) / "mesd.csv");
        os << mesd_csv_header() << "\n";
        os << "a,s01,2,1,10,8,finite\n";
        os << "a,s02,>50.0,,,,unbounded\n";
        os << "a,s03,>50.0,,,,unbounded\n";
    }
    write_report(out);
    const std::string mesd_rep = read_file((fs::path(out) / "report_mesd.csv").string());
    CHECK(mesd_rep.find("a,>50.0,2,3") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("mesd subcommand builds a table from a curves csv") {
    const std::string out = temp_dir("mesdcmd");
    fs::create_directories(out);
    const std::string path = (fs::path(out) / "curves.csv").string();
    {
        std::ofstream os(path);
        os << curve_csv_header() << "\n";
        os << "a,s01,1,100,60\n";
        os << "a,s01,30,100,2\n";
        os << "b,s01,30,45,2\n";
    }
    const std::string table = mesd_table_from_csv(path, MesdOptions{});
    CHECK(table.find("a,s01,7,1,10,8,finite") != std::string::npos);
    CHECK(table.find("b,s01,>50.0,,,,unbounded") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("inspect summarizes a dataset") {
    const std::string ds = temp_dir("inspect");
    make_small_dataset(ds);
    const std::string summary = inspect_dataset(ds);
    CHECK(summary.find("trials: 2, subjects: 2") != std::string::npos);
    CHECK(summary.find("s01") != std::string::npos);
    CHECK(summary.find("6 channels @ 64 Hz") != std::string::npos);
    fs::remove_all(ds);
}

TEST_CASE("config hash is stable") {
    CHECK(fnv1a_hex("abc") == fnv1a_hex("abc"));
    CHECK(fnv1a_hex("abc") != fnv1a_hex("abd"));
    CHECK(fnv1a_hex("x").size() == 16);
}
