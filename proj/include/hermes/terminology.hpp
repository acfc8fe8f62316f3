#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "hermes/model_clients.hpp"
#include "hermes/subtitle.hpp"

namespace hermes {

// One raw extraction: a surface form, its type, and its translation, as
// returned by the extractor for one prompt group.
struct TermCandidate {
  std::string surface;
  std::string term_type;
  std::string translation;
  int group_id = 0;
};

struct TermRecord {
  std::string term_type;
  std::string translation;
  int support = 0;
};

struct TermTable {
  std::map<std::string, TermRecord> records;  // keyed by surface
};

struct TermHit {
  int line_id = 0;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  std::string surface;
  std::string term_type;
  std::string translation;
};

// Prefix tree over the Unicode scalar sequences of the table surfaces.
// Immutable after build; safe to share across threads for retrieval.
class TermTrie {
 public:
  explicit TermTrie(const TermTable& table, bool ascii_fold_case = false);

  bool contains(std::string_view surface) const;
  // Leftmost-longest non-overlapping dictionary matching: scan left to
  // right, take the longest terminal match at each position, resume after
  // it; advance one scalar when nothing matches.
  std::vector<TermHit> retrieve(std::string_view line_text, int line_id = 0) const;

  std::size_t size() const { return record_count_; }

 private:
  struct Node {
    std::map<char32_t, std::size_t> children;
    int record = -1;  // index into records_, terminal iff >= 0
  };
  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, TermRecord>> records_;
  std::size_t record_count_ = 0;
  bool fold_case_ = false;
};

// Bilingual prompt group handed to the extractor.
struct BilingualGroup {
  int group_id = 0;
  std::vector<std::string> source_lines;
  std::vector<std::string> target_lines;
};

struct CollectReport {
  std::vector<TermCandidate> candidates;
  int dropped_surfaces = 0;  // returned surfaces absent from the group text
  std::vector<std::pair<int, std::string>> skipped_groups;  // group_id, reason
};

// One extractor call per group, fanned out over at most `jobs` in-flight
// calls; accepted tuples must quote a surface that occurs verbatim in the
// group's source text. Transport or protocol failures skip the group and
// are recorded in the report.
CollectReport collect_candidates(const std::vector<BilingualGroup>& groups,
                                 TermExtractorClient& extractor, int jobs = 1);

// Groups candidates by surface, drops those below min_support, and votes:
// plurality type (ties -> lexicographically smallest) and plurality
// translation (ties -> earliest supporting group, then lexicographic).
TermTable filter_and_vote(const std::vector<TermCandidate>& raw,
                          int min_support = 2);

// One record per prompt group:
//   {"input": preamble + group source text, "target": [{surface,type,translation}...]}
// Hits are deduplicated by surface within the group, ordered by first
// occurrence; groups without hits emit an empty target.
void emit_ti_dataset(const Subtitle& src, const std::vector<PromptGroup>& groups,
                     const TermTrie& trie, const std::string& preamble,
                     std::ostream& out);

}  // namespace hermes
