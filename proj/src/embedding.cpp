#include "hermes/embedding.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace hermes {

namespace {

Embedding vector_from_json(const nlohmann::json& arr, int record_no) {
  if (!arr.is_array() || arr.empty()) {
    throw ParseError("embedding record " + std::to_string(record_no) +
                     ": 'vector' must be a non-empty array");
  }
  Embedding e(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ParseError("embedding record " + std::to_string(record_no) +
                       ": non-numeric component");
    }
    e[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  if (!e.allFinite()) {
    throw ParseError("embedding record " + std::to_string(record_no) +
                     ": non-finite component");
  }
  if (e.norm() == 0.0) {
    throw ParseError("embedding record " + std::to_string(record_no) +
                     ": zero vector");
  }
  return e;
}

void store_record(std::map<int, LineFeatures>& features, int line_id,
                  const std::string& modality, Embedding e, int record_no,
                  Eigen::Index& face_dim, Eigen::Index& timbre_dim) {
  auto& f = features[line_id];
  f.line_id = line_id;
  if (modality == "face") {
    if (face_dim == 0) face_dim = e.size();
    if (e.size() != face_dim) {
      throw ParseError("embedding record " + std::to_string(record_no) +
                       ": face dim " + std::to_string(e.size()) +
                       " differs from " + std::to_string(face_dim));
    }
    f.face = std::move(e);
    f.active_detected = true;
  } else if (modality == "timbre") {
    if (timbre_dim == 0) timbre_dim = e.size();
    if (e.size() != timbre_dim) {
      throw ParseError("embedding record " + std::to_string(record_no) +
                       ": timbre dim " + std::to_string(e.size()) +
                       " differs from " + std::to_string(timbre_dim));
    }
    f.timbre = std::move(e);
  } else {
    throw ParseError("embedding record " + std::to_string(record_no) +
                     ": unknown modality '" + modality + "'");
  }
}

}  // namespace

std::vector<LineFeatures> load_embeddings_jsonl(std::istream& in) {
  std::map<int, LineFeatures> features;
  Eigen::Index face_dim = 0, timbre_dim = 0;

  std::string row;
  int record_no = 0;
  while (std::getline(in, row)) {
    if (row.empty()) continue;
    ++record_no;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(row);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("embedding record " + std::to_string(record_no) +
                       ": " + e.what());
    }
    if (!j.contains("line_id") || !j.contains("modality") ||
        !j.contains("vector")) {
      throw ParseError("embedding record " + std::to_string(record_no) +
                       ": missing line_id/modality/vector");
    }
    store_record(features, j["line_id"].get<int>(),
                 j["modality"].get<std::string>(),
                 vector_from_json(j["vector"], record_no), record_no,
                 face_dim, timbre_dim);
  }
  return features_map_to_vector(std::move(features));
}

void load_embeddings_binary(const std::string& manifest_path,
                            const std::string& data_path,
                            std::map<int, LineFeatures>& features) {
  std::ifstream mf(manifest_path);
  if (!mf) throw ParseError("cannot open manifest " + manifest_path);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest " + manifest_path + ": " + e.what());
  }
  const auto dim = manifest.at("dim").get<Eigen::Index>();
  const auto count = manifest.at("count").get<std::size_t>();
  const auto modality = manifest.at("modality").get<std::string>();
  const auto line_ids = manifest.at("line_ids").get<std::vector<int>>();
  if (dim <= 0 || line_ids.size() != count) {
    throw ParseError("manifest " + manifest_path +
                     ": dim/count/line_ids inconsistent");
  }

  std::ifstream df(data_path, std::ios::binary);
  if (!df) throw ParseError("cannot open data file " + data_path);
  std::vector<float> raw(count * static_cast<std::size_t>(dim));
  df.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (static_cast<std::size_t>(df.gcount()) != raw.size() * sizeof(float)) {
    throw ParseError("data file " + data_path + ": truncated");
  }

  Eigen::Index face_dim = 0, timbre_dim = 0;
  for (auto& [id, f] : features) {
    (void)id;
    if (f.face && face_dim == 0) face_dim = f.face->size();
    if (f.timbre.size() > 0 && timbre_dim == 0) timbre_dim = f.timbre.size();
  }

  for (std::size_t r = 0; r < count; ++r) {
    Embedding e(dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
      e[c] = static_cast<double>(raw[r * static_cast<std::size_t>(dim) +
                                     static_cast<std::size_t>(c)]);
    }
    if (!e.allFinite() || e.norm() == 0.0) {
      throw ParseError("data file " + data_path + ": record " +
                       std::to_string(r) + " is zero or non-finite");
    }
    store_record(features, line_ids[r], modality, std::move(e),
                 static_cast<int>(r), face_dim, timbre_dim);
  }
}

std::vector<LineFeatures> features_map_to_vector(std::map<int, LineFeatures> features) {
  std::vector<LineFeatures> out;
  out.reserve(features.size());
  for (auto& [id, f] : features) {
    if (f.timbre.size() == 0) {
      throw ParseError("line " + std::to_string(id) +
                       ": timbre embedding is mandatory");
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace hermes
