#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hermes/subtitle.hpp"

namespace hermes {

struct DiarizationMetrics {
  double der = 0.0;       // duration-weighted mismatch
  double jer = 0.0;       // mean per-reference-speaker Jaccard error
  double text_der = 0.0;  // line-count-weighted mismatch
};

using PredictedLabels = std::vector<std::pair<int, int>>;          // line_id -> speaker
using ReferenceLabels = std::vector<std::pair<int, std::string>>;  // line_id -> speaker

// Optimal one-to-one mapping between predicted and reference speakers,
// maximizing the total duration of agreeing lines (Hungarian matching).
// Predicted speakers left unmatched are absent from the map.
std::map<int, std::string> optimal_label_mapping(const PredictedLabels& pred,
                                                 const ReferenceLabels& ref,
                                                 const Subtitle& lines);

// Scores a prediction against reference labels over the same line_id set.
// All three metrics use the single optimal mapping above, so they are
// invariant under any relabeling of the predicted speakers.
DiarizationMetrics score_diarization(const PredictedLabels& pred,
                                     const ReferenceLabels& ref,
                                     const Subtitle& lines);

// Minimum-cost assignment for a square cost matrix; returns the column
// assigned to each row.
std::vector<int> hungarian_min_cost(const std::vector<std::vector<double>>& cost);

}  // namespace hermes
