#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hermes/model_clients.hpp"

namespace hermes {

// Shared run configuration. Defaults are the pipeline's reference
// operating point; validation reports the offending field path.
struct PipelineConfig {
  struct Thresholds {
    double epsilon = 0.35;         // speaker-turn similarity threshold
    double eta = 0.4;              // new-speaker score threshold
    double max_start_delta = 0.7;  // bitext alignment window, seconds
    int n_max = 35;                // lines per prompt
    int k = 15;                    // sampled candidates per line
    double holdout_fraction = 0.2;
    int min_support = 2;
    int k_max = 20;                // cluster-count upper bound
  } thresholds;

  SamplingParams sampling;
  RetryPolicy retry;

  Endpoint translator;
  Endpoint judge;
  Endpoint extractor;

  std::string noise_regex;  // lines matching this are dropped pre-alignment
  std::uint64_t seed = 0;
  int jobs = 1;
  bool mock = false;

  // Loads JSON from `path` over the defaults. Unknown fields are rejected.
  static PipelineConfig load(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text);

  // Throws ValidationError naming the field, e.g. "thresholds.epsilon".
  void validate() const;

  // Effective configuration echoed into output directories.
  std::string to_json() const;
};

}  // namespace hermes
