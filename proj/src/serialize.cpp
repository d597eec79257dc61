#include "aad/serialize.hpp"

#include <json.hpp>

#include <fstream>

#include "aad/dataset.hpp"

using nlohmann::json;

namespace aad {

namespace {

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw DataError("bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write '" + path + "'");
    os << j.dump(2) << "\n";
}

}  // namespace

void save_decoder(const std::string& basepath, const Decoder& d,
                  const std::vector<std::string>& channel_labels) {
    json desc;
    desc["kind"] = "decoder";
    desc["flavor"] = d.meta.flavor;
    desc["lambda_rel"] = d.meta.lambda_rel;
    desc["lags"] = d.lags;
    desc["channels"] = d.channels;
    desc["converged"] = d.meta.converged;
    desc["channel_labels"] = channel_labels;
    desc["weights"] = "weights.aadm";
    write_json(basepath + ".json", desc);
    write_aadm(basepath + ".weights.aadm", d.weights);
}

Decoder load_decoder(const std::string& basepath) {
    const json desc = read_json(basepath + ".json");
    Decoder d;
    try {
        d.meta.flavor = desc.at("flavor").get<std::string>();
        d.meta.lambda_rel = desc.at("lambda_rel").get<double>();
        d.lags = desc.at("lags").get<int>();
        d.channels = desc.at("channels").get<int>();
        d.meta.converged = desc.value("converged", true);
    } catch (const json::exception& e) {
        throw DataError("load_decoder: " + std::string(e.what()));
    }
    const Eigen::MatrixXd w = read_aadm(basepath + ".weights.aadm");
    d.weights = w.col(0);
    if (d.weights.size() != static_cast<Eigen::Index>(d.lags) * d.channels) {
        throw DataError("load_decoder: weight block does not match lags * channels");
    }
    return d;
}

void save_cca(const std::string& basepath, const CcaModel& model, const LdaClassifier& lda) {
    json desc;
    desc["kind"] = "cca";
    desc["components"] = model.wx.cols();
    desc["train_correlations"] = std::vector<double>(
        model.train_correlations.data(),
        model.train_correlations.data() + model.train_correlations.size());
    desc["pca_active"] = model.pca_active;
    desc["lda_bias"] = lda.bias;
    desc["lda_regularized"] = lda.regularized;
    write_json(basepath + ".json", desc);
    write_aadm(basepath + ".wx.aadm", model.wx);
    write_aadm(basepath + ".ws.aadm", model.ws);
    write_aadm(basepath + ".lda.aadm", lda.weights);
    if (model.pca_active) {
        write_aadm(basepath + ".pca.aadm", model.pca.basis);
        write_aadm(basepath + ".pca_mean.aadm", model.pca.mean);
    }
}

std::pair<CcaModel, LdaClassifier> load_cca(const std::string& basepath) {
    const json desc = read_json(basepath + ".json");
    CcaModel model;
    LdaClassifier lda;
    model.wx = read_aadm(basepath + ".wx.aadm");
    model.ws = read_aadm(basepath + ".ws.aadm");
    lda.weights = read_aadm(basepath + ".lda.aadm").col(0);
    try {
        const std::vector<double> rho = desc.at("train_correlations").get<std::vector<double>>();
        model.train_correlations =
            Eigen::Map<const Eigen::VectorXd>(rho.data(), static_cast<Eigen::Index>(rho.size()));
        model.pca_active = desc.value("pca_active", false);
        lda.bias = desc.at("lda_bias").get<double>();
        lda.regularized = desc.value("lda_regularized", false);
    } catch (const json::exception& e) {
        throw DataError("load_cca: " + std::string(e.what()));
    }
    if (model.pca_active) {
        model.pca.basis = read_aadm(basepath + ".pca.aadm");
        model.pca.mean = read_aadm(basepath + ".pca_mean.aadm").col(0);
    }
    return {std::move(model), std::move(lda)};
}

void save_nnsr(const std::string& basepath, const NnSrModel& m) {
    json desc;
    desc["kind"] = "nn-sr";
    desc["input_dim"] = m.w1.cols();
    desc["b2"] = m.b2;
    write_json(basepath + ".json", desc);
    write_aadm(basepath + ".w1.aadm", m.w1);
    write_aadm(basepath + ".b1.aadm", m.b1);
    write_aadm(basepath + ".w2.aadm", m.w2.transpose());
}

NnSrModel load_nnsr(const std::string& basepath) {
    const json desc = read_json(basepath + ".json");
    NnSrModel m;
    m.w1 = read_aadm(basepath + ".w1.aadm");
    m.b1 = read_aadm(basepath + ".b1.aadm").col(0);
    m.w2 = read_aadm(basepath + ".w2.aadm").col(0).transpose();
    try {
        m.b2 = desc.at("b2").get<double>();
    } catch (const json::exception& e) {
        throw DataError("load_nnsr: " + std::string(e.what()));
    }
    return m;
}

std::string digest_bytes(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return digest_bytes(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

std::string digest_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    std::string acc;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        acc += digest_bytes(m.col(c).data(), static_cast<std::size_t>(m.rows()) * sizeof(double));
    }
    return digest_bytes(acc.data(), acc.size());
}

}  // namespace aad
