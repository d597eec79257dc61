#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aad/dataset.hpp"
#include "aad/linear.hpp"
#include "aad/nnsr.hpp"
#include "aad/random.hpp"
#include "aad/serialize.hpp"

using namespace aad;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("aad_ds_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

Eigen::MatrixXd seeded_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = static_cast<double>(static_cast<float>(rng.normal()));
        }
    }
    return m;
}

}  // namespace

TEST_CASE("aadm files carry the documented little-endian header") {
    const std::string dir = temp_dir("header");
    const std::string path = dir + "/m.aadm";
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    write_aadm(path, m);

    std::ifstream is(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 16 + 6 * 4);
    CHECK(bytes[0] == 'A');
    CHECK(bytes[1] == 'A');
    CHECK(bytes[2] == 'D');
    CHECK(bytes[3] == 'M');
    // rows = 2 little endian
    CHECK(bytes[4] == 2);
    CHECK(bytes[5] == 0);
    // cols = 3 little endian
    CHECK(bytes[8] == 3);
    CHECK(bytes[12] == 0);  // reserved
    // First float is 1.0f = 0x3f800000, little endian, row-major.
    CHECK(bytes[16] == 0x00);
    CHECK(bytes[17] == 0x00);
    CHECK(bytes[18] == 0x80);
    CHECK(bytes[19] == 0x3f);

    const Eigen::MatrixXd back = read_aadm(path);
    CHECK((back - m).lpNorm<Eigen::Infinity>() == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("aadm rejects missing files and bad magic") {
    CHECK_THROWS_AS(read_aadm("/nonexistent/file.aadm"), DataError);
    const std::string dir = temp_dir("badmagic");
    const std::string path = dir + "/bad.aadm";
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPExxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(read_aadm(path), DataError);
    fs::remove_all(dir);
}

TEST_CASE("csv import reads labels and columns") {
    const std::string dir = temp_dir("csv");
    const std::string path = dir + "/eeg.csv";
    {
        std::ofstream os(path);
        os << "Fz,Cz\n1.5,2.5\n-1.0,0.25\n";
    }
    const MultiChannel m = read_multichannel_csv(path, 64.0);
    CHECK(m.channel_labels == std::vector<std::string>{"Fz", "Cz"});
    CHECK(m.data.rows() == 2);
    CHECK(m.data(0, 0) == 1.5);
    CHECK(m.data(1, 1) == 0.25);
    CHECK(m.fs == 64.0);

    {
        std::ofstream os(path);
        os << "Fz,Cz\n1.0\n";
    }
    CHECK_THROWS_AS(read_multichannel_csv(path, 64.0), DataError);
    {
        std::ofstream os(path);
        os << "Fz,Cz\nx,y\n";
    }
    CHECK_THROWS_AS(read_multichannel_csv(path, 64.0), DataError);
    fs::remove_all(dir);
}

TEST_CASE("dataset write and load round-trips trials bit exactly") {
    const std::string dir = temp_dir("trials");
    std::vector<Trial> trials;
    for (int k = 0; k < 2; ++k) {
        Trial t;
        t.subject_id = "s0" + std::to_string(k + 1);
        t.attended = k;
        t.eeg.fs = 64.0;
        t.eeg.data = seeded_matrix(128, 3, 10 + static_cast<std::uint64_t>(k));
        t.eeg.channel_labels = {"c1", "c2", "c3"};
        t.envelopes.push_back({seeded_matrix(128, 1, 20 + static_cast<std::uint64_t>(k)).col(0), 64.0});
        t.envelopes.push_back({seeded_matrix(128, 1, 30 + static_cast<std::uint64_t>(k)).col(0), 64.0});
        trials.push_back(std::move(t));
    }
    write_dataset(dir, trials);
    const std::vector<Trial> loaded = load_dataset(dir);
    REQUIRE(loaded.size() == 2);
    for (int k = 0; k < 2; ++k) {
        CHECK(loaded[k].subject_id == trials[k].subject_id);
        CHECK(loaded[k].attended == trials[k].attended);
        CHECK(loaded[k].eeg.channel_labels == trials[k].eeg.channel_labels);
        CHECK((loaded[k].eeg.data - trials[k].eeg.data).lpNorm<Eigen::Infinity>() == 0.0);
    }
    CHECK_THROWS_AS(load_dataset(dir + "/missing"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("group_by_subject keeps manifest order") {
    Trial a, b, c;
    a.subject_id = "x";
    b.subject_id = "y";
    c.subject_id = "x";
    const auto groups = group_by_subject({a, b, c});
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].first == "x");
    CHECK(groups[0].second.size() == 2);
    CHECK(groups[1].first == "y");
}

TEST_CASE("decoder serialization round-trips through json plus raw blocks") {
    const std::string dir = temp_dir("decoder");
    Decoder d;
    d.lags = 4;
    d.channels = 3;
    d.weights = seeded_matrix(12, 1, 40).col(0);
    d.meta.flavor = "mmse-avgcorr-ridge";
    d.meta.lambda_rel = 0.125;
    save_decoder(dir + "/dec", d, {"c1", "c2", "c3"});
    const Decoder back = load_decoder(dir + "/dec");
    CHECK(back.lags == 4);
    CHECK(back.channels == 3);
    CHECK(back.meta.flavor == d.meta.flavor);
    CHECK(back.meta.lambda_rel == d.meta.lambda_rel);
    CHECK((back.weights - d.weights).lpNorm<Eigen::Infinity>() == 0.0);  // f32 values round-trip
    fs::remove_all(dir);
}

TEST_CASE("cca and nnsr serialization round-trips") {
    const std::string dir = temp_dir("models");
    CcaModel model;
    model.wx = seeded_matrix(8, 2, 50);
    model.ws = seeded_matrix(5, 2, 51);
    model.train_correlations = Eigen::Vector2d(0.75, 0.5);
    model.pca_active = true;
    model.pca.basis = seeded_matrix(4, 3, 52);
    model.pca.mean = seeded_matrix(4, 1, 53).col(0);
    LdaClassifier lda;
    lda.weights = Eigen::Vector2d(1.25, -0.5);
    save_cca(dir + "/cca", model, lda);
    const auto [m2, l2] = load_cca(dir + "/cca");
    CHECK((m2.wx - model.wx).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((m2.ws - model.ws).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((m2.pca.basis - model.pca.basis).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((l2.weights - lda.weights).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(l2.bias == 0.0);

    NnSrModel nn;
    nn.w1 = seeded_matrix(2, 6, 60);
    nn.b1 = Eigen::Vector2d(0.5, -0.25);
    nn.w2 = Eigen::RowVector2d(1.5, 2.5);
    nn.b2 = -0.125;
    save_nnsr(dir + "/nn", nn);
    const NnSrModel nn2 = load_nnsr(dir + "/nn");
    CHECK((nn2.w1 - nn.w1).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((nn2.b1 - nn.b1).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((nn2.w2 - nn.w2).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(nn2.b2 == nn.b2);
    fs::remove_all(dir);
}

TEST_CASE("digests are stable and sensitive") {
    const Eigen::VectorXd v = seeded_matrix(16, 1, 70).col(0);
    const std::string d1 = digest_vector(v);
    CHECK(d1 == digest_vector(v));
    Eigen::VectorXd w = v;
    w[3] += 1e-12;
    CHECK(d1 != digest_vector(w));
    CHECK(d1.size() == 16);
}
