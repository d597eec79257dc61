#include "aad/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace aad {

namespace {

constexpr char kMagic[4] = {'A', 'A', 'D', 'M'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32_le(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32_le(os, bits);
}

float get_f32_le(std::istream& is) {
    const std::uint32_t bits = get_u32_le(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_aadm(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("write_aadm: cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    put_u32_le(os, static_cast<std::uint32_t>(m.rows()));
    put_u32_le(os, static_cast<std::uint32_t>(m.cols()));
    put_u32_le(os, 0);  // reserved
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            put_f32_le(os, static_cast<float>(m(r, c)));
        }
    }
    if (!os) throw DataError("write_aadm: write failed for '" + path + "'");
}

Eigen::MatrixXd read_aadm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("read_aadm: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("read_aadm: '" + path + "' is not an AADM file");
    }
    const std::uint32_t rows = get_u32_le(is);
    const std::uint32_t cols = get_u32_le(is);
    get_u32_le(is);  // reserved
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
            m(r, c) = static_cast<double>(get_f32_le(is));
        }
    }
    if (!is) throw DataError("read_aadm: truncated file '" + path + "'");
    return m;
}

MultiChannel read_multichannel_csv(const std::string& path, double fs) {
    std::ifstream is(path);
    if (!is) throw DataError("read_multichannel_csv: cannot open '" + path + "'");
    MultiChannel out;
    out.fs = fs;
    std::string line;
    if (!std::getline(is, line)) throw DataError("read_multichannel_csv: empty file '" + path + "'");
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) out.channel_labels.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError("read_multichannel_csv: bad value '" + cell + "' in '" + path + "'");
            }
        }
        if (row.size() != out.channel_labels.size()) {
            throw DataError("read_multichannel_csv: column count mismatch in '" + path + "'");
        }
        rows.push_back(std::move(row));
    }
    out.data.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(out.channel_labels.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return out;
}

void write_manifest(const std::string& dir, const std::vector<Trial>& trials,
                    const std::vector<std::vector<std::string>>& envelope_paths,
                    const std::vector<std::string>& eeg_paths) {
    json manifest;
    manifest["format"] = "aad-dataset-v1";
    json jtrials = json::array();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        json jt;
        jt["subject_id"] = trials[i].subject_id;
        jt["attended"] = trials[i].attended;
        jt["fs"] = trials[i].eeg.fs;
        jt["eeg"] = eeg_paths[i];
        jt["envelopes"] = envelope_paths[i];
        jt["channel_labels"] = trials[i].eeg.channel_labels;
        jtrials.push_back(jt);
    }
    manifest["trials"] = jtrials;
    std::ofstream os(fs::path(dir) / "manifest.json");
    if (!os) throw DataError("write_manifest: cannot write manifest in '" + dir + "'");
    os << manifest.dump(2) << "\n";
}

std::string write_dataset(const std::string& dir, const std::vector<Trial>& trials) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("write_dataset: cannot create '" + dir + "': " + ec.message());

    std::map<std::string, int> per_subject;
    std::vector<std::string> eeg_paths;
    std::vector<std::vector<std::string>> env_paths;
    for (const Trial& t : trials) {
        validate(t);
        const int k = per_subject[t.subject_id]++;
        char stem[64];
        std::snprintf(stem, sizeof(stem), "%s_t%02d", t.subject_id.c_str(), k);
        const std::string eeg_name = std::string(stem) + "_eeg.aadm";
        write_aadm((fs::path(dir) / eeg_name).string(), t.eeg.data);
        eeg_paths.push_back(eeg_name);
        std::vector<std::string> envs;
        for (std::size_t sp = 0; sp < t.envelopes.size(); ++sp) {
            const std::string env_name =
                std::string(stem) + "_env" + std::to_string(sp) + ".aadm";
            write_aadm((fs::path(dir) / env_name).string(), t.envelopes[sp].samples);
            envs.push_back(env_name);
        }
        env_paths.push_back(std::move(envs));
    }
    write_manifest(dir, trials, env_paths, eeg_paths);
    return (fs::path(dir) / "manifest.json").string();
}

std::vector<Trial> load_dataset(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream is(manifest_path);
    if (!is) throw DataError("load_dataset: cannot open '" + manifest_path.string() + "'");
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw DataError("load_dataset: bad manifest: " + std::string(e.what()));
    }
    if (!manifest.contains("trials") || !manifest["trials"].is_array()) {
        throw DataError("load_dataset: manifest has no trial list");
    }
    std::vector<Trial> trials;
    for (const json& jt : manifest["trials"]) {
        Trial t;
        try {
            t.subject_id = jt.at("subject_id").get<std::string>();
            t.attended = jt.at("attended").get<int>();
            t.eeg.fs = jt.at("fs").get<double>();
            const std::string eeg_name = jt.at("eeg").get<std::string>();
            const std::string eeg_path = (fs::path(dir) / eeg_name).string();
            // Raw-float container by default; .csv files are imported with a
            // label header row.
            if (eeg_name.size() > 4 && eeg_name.substr(eeg_name.size() - 4) == ".csv") {
                const MultiChannel m = read_multichannel_csv(eeg_path, t.eeg.fs);
                t.eeg.data = m.data;
                t.eeg.channel_labels = m.channel_labels;
            } else {
                t.eeg.data = read_aadm(eeg_path);
            }
            if (jt.contains("channel_labels")) {
                t.eeg.channel_labels = jt["channel_labels"].get<std::vector<std::string>>();
            }
            for (const json& je : jt.at("envelopes")) {
                const std::string env_name = je.get<std::string>();
                const std::string env_path = (fs::path(dir) / env_name).string();
                Eigen::MatrixXd m;
                if (env_name.size() > 4 && env_name.substr(env_name.size() - 4) == ".csv") {
                    m = read_multichannel_csv(env_path, t.eeg.fs).data;
                } else {
                    m = read_aadm(env_path);
                }
                if (m.cols() != 1) throw DataError("load_dataset: envelope file is not a column");
                t.envelopes.push_back({m.col(0), t.eeg.fs});
            }
        } catch (const json::exception& e) {
            throw DataError("load_dataset: bad trial entry: " + std::string(e.what()));
        }
        validate(t);
        trials.push_back(std::move(t));
    }
    return trials;
}

std::vector<std::pair<std::string, std::vector<Trial>>> group_by_subject(std::vector<Trial> trials) {
    std::vector<std::pair<std::string, std::vector<Trial>>> groups;
    for (Trial& t : trials) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == t.subject_id; });
        if (it == groups.end()) {
            groups.push_back({t.subject_id, {}});
            it = groups.end() - 1;
        }
        it->second.push_back(std::move(t));
    }
    return groups;
}

}  // namespace aad
