#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hermes/timecode.hpp"

namespace hermes {

// One timed subtitle cue. line_id is the 1-based ordinal within the
// document after sorting by start time (ties keep file order).
struct Line {
  int line_id = 0;
  Timecode start;
  Timecode end;
  std::string text;

  double duration_s() const { return end.seconds() - start.seconds(); }
};

struct Subtitle {
  std::string language;  // BCP-47-style tag, e.g. "zh", "en-US"
  std::vector<Line> lines;

  bool empty() const { return lines.empty(); }
  std::size_t size() const { return lines.size(); }
};

// Bitext pairing of two subtitle documents by line_id.
struct AlignedCorpus {
  std::vector<std::pair<int, int>> pairs;  // (source id, target id), sorted by source id
  std::vector<int> unmatched_source;
  std::vector<int> unmatched_target;
};

enum class BoundaryReason { speaker_turn, max_lines, document_end };

// Contiguous slice of source line_ids forming one prompt.
// boundary_reason records why the group ends where it does.
struct PromptGroup {
  int group_id = 0;
  std::vector<int> line_ids;
  BoundaryReason boundary_reason = BoundaryReason::document_end;
};

const char* to_string(BoundaryReason reason);

}  // namespace hermes
