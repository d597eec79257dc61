#pragma once

#include <string>
#include <vector>

#include "aad/cca.hpp"
#include "aad/linear.hpp"
#include "aad/nnsr.hpp"

namespace aad {

// Model serialization: a JSON descriptor next to raw-float weight blocks in
// the AADM container format. `basepath` is extended with ".json" / block
// suffixes.
void save_decoder(const std::string& basepath, const Decoder& d,
                  const std::vector<std::string>& channel_labels = {});
Decoder load_decoder(const std::string& basepath);

void save_cca(const std::string& basepath, const CcaModel& model, const LdaClassifier& lda);
std::pair<CcaModel, LdaClassifier> load_cca(const std::string& basepath);

void save_nnsr(const std::string& basepath, const NnSrModel& m);
NnSrModel load_nnsr(const std::string& basepath);

// Short stable digest of a weight set (FNV-1a over the byte image); used for
// train/test isolation checks and run manifests.
std::string digest_bytes(const void* data, std::size_t n);
std::string digest_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
std::string digest_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace aad
