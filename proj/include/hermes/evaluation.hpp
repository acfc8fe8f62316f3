#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hermes/subtitle.hpp"
#include "hermes/terminology.hpp"

namespace hermes {

struct PronounAnnotation {
  int line_id = 0;
  std::string pronoun;                  // surface in the source line
  std::vector<std::string> acceptable;  // target renderings, non-empty
};

struct SegmentScores {
  std::string segment_id;
  std::map<std::string, double> dimensions;  // accuracy/naturalness/vividness
};

enum class PairResult { win, tie, loss };

struct PairwiseOutcome {
  std::string item_id;
  std::string dimension;
  PairResult result = PairResult::tie;
};

struct WinRate {
  int win = 0, tie = 0, loss = 0;  // integer percents summing to 100
  std::string to_string() const;
};

// Width-folding normalization applied before PA substring matching:
// fullwidth ASCII forms map to their ASCII counterparts and the
// ideographic space to a plain space.
std::string normalize_text(std::string_view text);

// Validates that each annotated pronoun occurs in its source line.
void validate_annotations(const std::vector<PronounAnnotation>& annotations,
                          const Subtitle& src);

// Fraction of annotations whose output line contains at least one
// acceptable rendering as a substring after normalization, in percent.
double pronoun_accuracy(const std::vector<PronounAnnotation>& annotations,
                        const std::map<int, std::string>& outputs);

// Per-hit terminology consistency: for every term hit in the source, does
// the prescribed translation occur in that line's output? Returns percent,
// or nullopt when the corpus has no hits ("n/a", not 0).
std::optional<double> terminology_consistency(
    const TermTrie& trie, const Subtitle& src,
    const std::map<int, std::string>& outputs);

// Mean over evaluators then over segments, per dimension. All evaluator
// streams must cover the same segment ids.
std::map<std::string, double> aggregate_scores(
    const std::vector<std::vector<SegmentScores>>& evaluator_streams);

// Integer percentages rounded half-up; the tie bucket absorbs any rounding
// residual so the triple always sums to exactly 100.
std::map<std::string, WinRate> win_rate(
    const std::vector<PairwiseOutcome>& outcomes);

}  // namespace hermes
