#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aad/signal.hpp"

namespace aad {

// Raw matrix container: 16-byte header (magic "AADM", u32 rows, u32 cols,
// u32 reserved), then rows*cols little-endian 32-bit floats, row major,
// rows = time.
void write_aadm(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& time_by_channel);
Eigen::MatrixXd read_aadm(const std::string& path);

// CSV import: header row of channel labels, one column per channel.
MultiChannel read_multichannel_csv(const std::string& path, double fs);

// Dataset directory: manifest.json listing trials (subject_id, attended
// index, fs, file paths relative to the manifest).
void write_manifest(const std::string& dir, const std::vector<Trial>& trials,
                    const std::vector<std::vector<std::string>>& envelope_paths,
                    const std::vector<std::string>& eeg_paths);

std::vector<Trial> load_dataset(const std::string& dir);

// Convenience: writes trials + manifest into dir (creating it), file names
// derived from subject ids. Returns the manifest path.
std::string write_dataset(const std::string& dir, const std::vector<Trial>& trials);

// Per-subject grouping preserving manifest order.
std::vector<std::pair<std::string, std::vector<Trial>>> group_by_subject(std::vector<Trial> trials);

}  // namespace aad
