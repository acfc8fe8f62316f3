#include "hermes/diarization_metrics.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>

#include "hermes/errors.hpp"

namespace hermes {

// Kuhn-Munkres with row/column potentials, O(n^3).
std::vector<int> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // column -> row (1-based)
  for (int i = 1; i <= n; ++i) {
    std::vector<double> min_v(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    std::vector<int> way(n + 1, 0);
    int j0 = 0;
    match[0] = i;
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < min_v[j]) {
          min_v[j] = cur;
          way[j] = j0;
        }
        if (min_v[j] < delta) {
          delta = min_v[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_v[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

namespace {

struct JoinedLine {
  int pred_label = 0;   // dense predicted index
  int ref_label = 0;    // dense reference index
  double duration = 0.0;
};

struct Joined {
  std::vector<JoinedLine> lines;
  std::vector<int> pred_values;         // dense index -> original id
  std::vector<std::string> ref_values;  // dense index -> original label
};

Joined join(const PredictedLabels& pred, const ReferenceLabels& ref,
            const Subtitle& lines) {
  if (pred.empty() || ref.empty()) {
    throw ValidationError("score_diarization: empty label set");
  }
  std::unordered_map<int, int> pred_by_line;
  for (const auto& [line_id, label] : pred) pred_by_line[line_id] = label;
  std::unordered_map<int, std::string> ref_by_line;
  for (const auto& [line_id, label] : ref) ref_by_line[line_id] = label;
  if (pred_by_line.size() != ref_by_line.size() ||
      pred_by_line.size() != pred.size() || ref_by_line.size() != ref.size()) {
    throw ValidationError("score_diarization: line_id sets differ");
  }
  std::unordered_map<int, double> duration_by_line;
  for (const auto& line : lines.lines) {
    duration_by_line[line.line_id] = line.duration_s();
  }

  Joined joined;
  std::map<int, int> pred_index;
  std::map<std::string, int> ref_index;
  for (const auto& [line_id, pred_label] : pred) {
    auto ref_it = ref_by_line.find(line_id);
    if (ref_it == ref_by_line.end()) {
      throw ValidationError("score_diarization: line " +
                            std::to_string(line_id) + " missing from reference");
    }
    auto dur_it = duration_by_line.find(line_id);
    if (dur_it == duration_by_line.end()) {
      throw ValidationError("score_diarization: line " +
                            std::to_string(line_id) + " missing from subtitle");
    }
    JoinedLine jl;
    auto [pit, p_new] = pred_index.try_emplace(
        pred_label, static_cast<int>(joined.pred_values.size()));
    if (p_new) joined.pred_values.push_back(pred_label);
    jl.pred_label = pit->second;
    auto [rit, r_new] = ref_index.try_emplace(
        ref_it->second, static_cast<int>(joined.ref_values.size()));
    if (r_new) joined.ref_values.push_back(ref_it->second);
    jl.ref_label = rit->second;
    jl.duration = dur_it->second;
    joined.lines.push_back(jl);
  }
  return joined;
}

// pred dense index -> ref dense index, or -1.
std::vector<int> match_labels(const Joined& joined) {
  const int np = static_cast<int>(joined.pred_values.size());
  const int nr = static_cast<int>(joined.ref_values.size());
  const int n = std::max(np, nr);

  std::vector<std::vector<double>> overlap(n, std::vector<double>(n, 0.0));
  double max_overlap = 0.0;
  for (const auto& line : joined.lines) {
    auto& cell = overlap[line.pred_label][line.ref_label];
    cell += line.duration;
    max_overlap = std::max(max_overlap, cell);
  }
  // Max weight via min cost.
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, max_overlap));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) cost[i][j] = max_overlap - overlap[i][j];
  }
  std::vector<int> assignment = hungarian_min_cost(cost);
  assignment.resize(np);
  for (int i = 0; i < np; ++i) {
    if (assignment[i] >= nr) assignment[i] = -1;  // padded column
  }
  return assignment;
}

}  // namespace

std::map<int, std::string> optimal_label_mapping(const PredictedLabels& pred,
                                                 const ReferenceLabels& ref,
                                                 const Subtitle& lines) {
  const Joined joined = join(pred, ref, lines);
  const std::vector<int> assignment = match_labels(joined);
  std::map<int, std::string> mapping;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= 0) {
      mapping[joined.pred_values[i]] =
          joined.ref_values[static_cast<std::size_t>(assignment[i])];
    }
  }
  return mapping;
}

DiarizationMetrics score_diarization(const PredictedLabels& pred,
                                     const ReferenceLabels& ref,
                                     const Subtitle& lines) {
  const Joined joined = join(pred, ref, lines);
  const std::vector<int> assignment = match_labels(joined);

  double total_duration = 0.0, wrong_duration = 0.0;
  std::size_t wrong_lines = 0;
  for (const auto& line : joined.lines) {
    total_duration += line.duration;
    const bool match = assignment[static_cast<std::size_t>(line.pred_label)] ==
                       line.ref_label;
    if (!match) {
      wrong_duration += line.duration;
      ++wrong_lines;
    }
  }

  // Per-reference-speaker Jaccard against the mapped predicted line sets.
  const int nr = static_cast<int>(joined.ref_values.size());
  std::vector<int> ref_to_pred(nr, -1);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= 0) ref_to_pred[assignment[i]] = static_cast<int>(i);
  }
  double jer_sum = 0.0;
  for (int r = 0; r < nr; ++r) {
    std::size_t ref_count = 0, pred_count = 0, both = 0;
    for (const auto& line : joined.lines) {
      const bool in_ref = line.ref_label == r;
      const bool in_pred =
          ref_to_pred[r] >= 0 && line.pred_label == ref_to_pred[r];
      ref_count += in_ref;
      pred_count += in_pred;
      both += in_ref && in_pred;
    }
    const std::size_t uni = ref_count + pred_count - both;
    jer_sum += 1.0 - (uni == 0 ? 0.0
                               : static_cast<double>(both) /
                                     static_cast<double>(uni));
  }

  DiarizationMetrics metrics;
  metrics.text_der = static_cast<double>(wrong_lines) /
                     static_cast<double>(joined.lines.size());
  metrics.der = total_duration > 0.0 ? wrong_duration / total_duration : 0.0;
  metrics.jer = jer_sum / static_cast<double>(nr);
  return metrics;
}

}  // namespace hermes
