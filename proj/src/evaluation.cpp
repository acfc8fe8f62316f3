#include "hermes/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hermes/errors.hpp"
#include "hermes/utf8.hpp"

namespace hermes {

std::string WinRate::to_string() const {
  return std::to_string(win) + ":" + std::to_string(tie) + ":" +
         std::to_string(loss);
}

std::string normalize_text(std::string_view text) {
  std::u32string out;
  for (const Utf8Scalar& s : decode_utf8(text)) {
    char32_t c = s.value;
    if (c == 0x3000) {
      c = U' ';  // ideographic space
    } else if (c >= 0xFF01 && c <= 0xFF5E) {
      c = c - 0xFF01 + U'!';  // fullwidth ASCII block
    }
    out.push_back(c);
  }
  return to_utf8(out);
}

void validate_annotations(const std::vector<PronounAnnotation>& annotations,
                          const Subtitle& src) {
  std::map<int, const Line*> by_id;
  for (const auto& line : src.lines) by_id[line.line_id] = &line;
  for (const auto& a : annotations) {
    if (a.acceptable.empty()) {
      throw ValidationError("annotation for line " + std::to_string(a.line_id) +
                            ": empty acceptable set");
    }
    auto it = by_id.find(a.line_id);
    if (it == by_id.end()) {
      throw ValidationError("annotation references unknown line " +
                            std::to_string(a.line_id));
    }
    if (it->second->text.find(a.pronoun) == std::string::npos) {
      throw ValidationError("annotation pronoun '" + a.pronoun +
                            "' absent from line " + std::to_string(a.line_id));
    }
  }
}

double pronoun_accuracy(const std::vector<PronounAnnotation>& annotations,
                        const std::map<int, std::string>& outputs) {
  if (annotations.empty()) {
    throw ValidationError("pronoun_accuracy: no annotations");
  }
  std::vector<int> missing;
  for (const auto& a : annotations) {
    if (!outputs.contains(a.line_id)) missing.push_back(a.line_id);
  }
  if (!missing.empty()) {
    std::string ids;
    for (int id : missing) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    throw ValidationError("pronoun_accuracy: missing output for lines " + ids);
  }

  std::size_t matched = 0;
  for (const auto& a : annotations) {
    const std::string output = normalize_text(outputs.at(a.line_id));
    const bool hit = std::any_of(
        a.acceptable.begin(), a.acceptable.end(), [&](const std::string& r) {
          return output.find(normalize_text(r)) != std::string::npos;
        });
    matched += hit;
  }
  return 100.0 * static_cast<double>(matched) /
         static_cast<double>(annotations.size());
}

std::optional<double> terminology_consistency(
    const TermTrie& trie, const Subtitle& src,
    const std::map<int, std::string>& outputs) {
  std::size_t hits = 0, consistent = 0;
  for (const auto& line : src.lines) {
    auto out_it = outputs.find(line.line_id);
    for (const auto& hit : trie.retrieve(line.text, line.line_id)) {
      ++hits;
      if (out_it != outputs.end() &&
          out_it->second.find(hit.translation) != std::string::npos) {
        ++consistent;
      }
    }
  }
  if (hits == 0) return std::nullopt;
  return 100.0 * static_cast<double>(consistent) / static_cast<double>(hits);
}

std::map<std::string, double> aggregate_scores(
    const std::vector<std::vector<SegmentScores>>& evaluator_streams) {
  if (evaluator_streams.empty()) {
    throw ValidationError("aggregate_scores: no evaluator streams");
  }
  std::set<std::string> segment_ids;
  for (const auto& s : evaluator_streams.front()) {
    segment_ids.insert(s.segment_id);
  }
  for (const auto& stream : evaluator_streams) {
    std::set<std::string> ids;
    for (const auto& s : stream) ids.insert(s.segment_id);
    if (ids != segment_ids) {
      throw ValidationError("aggregate_scores: segment ids differ between "
                            "evaluator streams");
    }
  }

  // Mean over evaluators per (segment, dimension), then over segments.
  std::map<std::string, std::map<std::string, std::pair<double, int>>> per_segment;
  for (const auto& stream : evaluator_streams) {
    for (const auto& s : stream) {
      for (const auto& [dim, score] : s.dimensions) {
        auto& [sum, count] = per_segment[s.segment_id][dim];
        sum += score;
        count += 1;
      }
    }
  }
  std::map<std::string, std::pair<double, int>> totals;
  for (const auto& [segment, dims] : per_segment) {
    for (const auto& [dim, acc] : dims) {
      auto& [sum, count] = totals[dim];
      sum += acc.first / acc.second;
      count += 1;
    }
  }
  std::map<std::string, double> means;
  for (const auto& [dim, acc] : totals) {
    means[dim] = acc.first / acc.second;
  }
  return means;
}

std::map<std::string, WinRate> win_rate(
    const std::vector<PairwiseOutcome>& outcomes) {
  if (outcomes.empty()) throw ValidationError("win_rate: no outcomes");

  struct Counts {
    int win = 0, tie = 0, loss = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& o : outcomes) {
    auto& c = counts[o.dimension];
    if (o.result == PairResult::win) ++c.win;
    if (o.result == PairResult::tie) ++c.tie;
    if (o.result == PairResult::loss) ++c.loss;
  }

  auto round_percent = [](int part, int total) {
    return static_cast<int>(
        std::floor(100.0 * static_cast<double>(part) / total + 0.5));
  };

  std::map<std::string, WinRate> rates;
  for (const auto& [dim, c] : counts) {
    const int total = c.win + c.tie + c.loss;
    WinRate rate;
    rate.win = round_percent(c.win, total);
    rate.tie = round_percent(c.tie, total);
    rate.loss = round_percent(c.loss, total);
    rate.tie += 100 - (rate.win + rate.tie + rate.loss);
    rates[dim] = rate;
  }
  return rates;
}

}  // namespace hermes
