#pragma once

#include <Eigen/Core>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hermes/errors.hpp"

namespace hermes {

using Embedding = Eigen::VectorXd;

// Cosine similarity of two nonzero vectors of equal dimension.
// Works on any dense Eigen expression.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                         const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) {
    throw ValidationError("cosine: dimension mismatch (" +
                          std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw ValidationError("cosine: zero vector");
  }
  return u.dot(v) / (nu * nv);
}

// Per-line features consumed by the diarization pipeline. A face embedding
// is present exactly when an active speaker was detected for the line.
struct LineFeatures {
  int line_id = 0;
  Embedding timbre;                   // required
  std::optional<Embedding> face;      // present iff active_detected
  bool active_detected = false;
  std::optional<int> visual_cluster;  // 1..n_v, present iff active_detected
  std::optional<int> audio_cluster;   // 1..n_a
};

// Loads line-delimited JSON embedding records
//   {"line_id": int, "modality": "face"|"timbre", "vector": [float...]}
// into per-line features. A face record implies active_detected = true.
// All records of one modality must share a dimension; zero and non-finite
// vectors are rejected.
std::vector<LineFeatures> load_embeddings_jsonl(std::istream& in);

// Compact form: little-endian float32 flat binary next to a JSON manifest
//   {"dim": int, "count": int, "modality": str, "line_ids": [int...]}.
// Merges the records into `features` (creating entries as needed).
void load_embeddings_binary(const std::string& manifest_path,
                            const std::string& data_path,
                            std::map<int, LineFeatures>& features);

std::vector<LineFeatures> features_map_to_vector(std::map<int, LineFeatures> features);

}  // namespace hermes
