#include "hermes/terminology.hpp"

#include <algorithm>
#include <json.hpp>
#include <unordered_map>

#include "hermes/errors.hpp"
#include "hermes/parallel.hpp"
#include "hermes/utf8.hpp"

namespace hermes {

namespace {

char32_t fold(char32_t c, bool fold_case) {
  if (fold_case && c >= U'A' && c <= U'Z') return c + 32;
  return c;
}

}  // namespace

TermTrie::TermTrie(const TermTable& table, bool ascii_fold_case)
    : fold_case_(ascii_fold_case) {
  if (table.records.empty()) {
    throw ValidationError("build_trie: empty term table");
  }
  nodes_.emplace_back();
  for (const auto& [surface, record] : table.records) {
    std::size_t node = 0;
    for (const Utf8Scalar& s : decode_utf8(surface)) {
      const char32_t c = fold(s.value, fold_case_);
      auto it = nodes_[node].children.find(c);
      if (it == nodes_[node].children.end()) {
        nodes_.emplace_back();
        it = nodes_[node].children.emplace(c, nodes_.size() - 1).first;
      }
      node = it->second;
    }
    nodes_[node].record = static_cast<int>(records_.size());
    records_.emplace_back(surface, record);
  }
  record_count_ = records_.size();
}

bool TermTrie::contains(std::string_view surface) const {
  std::size_t node = 0;
  for (const Utf8Scalar& s : decode_utf8(surface)) {
    auto it = nodes_[node].children.find(fold(s.value, fold_case_));
    if (it == nodes_[node].children.end()) return false;
    node = it->second;
  }
  return nodes_[node].record >= 0;
}

std::vector<TermHit> TermTrie::retrieve(std::string_view line_text,
                                        int line_id) const {
  const std::vector<Utf8Scalar> scalars = decode_utf8(line_text);
  std::vector<TermHit> hits;
  std::size_t pos = 0;
  while (pos < scalars.size()) {
    std::size_t node = 0;
    int best_record = -1;
    std::size_t best_len = 0;
    for (std::size_t i = pos; i < scalars.size(); ++i) {
      auto it = nodes_[node].children.find(fold(scalars[i].value, fold_case_));
      if (it == nodes_[node].children.end()) break;
      node = it->second;
      if (nodes_[node].record >= 0) {
        best_record = nodes_[node].record;
        best_len = i - pos + 1;
      }
    }
    if (best_record < 0) {
      ++pos;
      continue;
    }
    const auto& [surface, record] = records_[static_cast<std::size_t>(best_record)];
    const Utf8Scalar& first = scalars[pos];
    const Utf8Scalar& last = scalars[pos + best_len - 1];
    hits.push_back({line_id, first.byte_offset,
                    last.byte_offset + last.byte_length, surface,
                    record.term_type, record.translation});
    pos += best_len;
  }
  return hits;
}

CollectReport collect_candidates(const std::vector<BilingualGroup>& groups,
                                 TermExtractorClient& extractor, int jobs) {
  // Fan out one call per group; results land in per-group slots so the
  // merged order is independent of completion order.
  std::vector<std::vector<TermTuple>> tuples(groups.size());
  std::vector<std::string> failures(groups.size());
  parallel_for(jobs, groups.size(), [&](std::size_t i) {
    try {
      tuples[i] = extractor.extract_terms(groups[i].source_lines,
                                          groups[i].target_lines);
    } catch (const TransportError& e) {
      failures[i] = e.what();
    } catch (const ProtocolError& e) {
      failures[i] = e.what();
    }
  });

  CollectReport report;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& group = groups[i];
    if (!failures[i].empty()) {
      report.skipped_groups.emplace_back(group.group_id, failures[i]);
      continue;
    }
    std::string joined;
    for (const auto& line : group.source_lines) {
      joined += line;
      joined += '\n';
    }
    for (auto& tuple : tuples[i]) {
      if (tuple.surface.empty() ||
          joined.find(tuple.surface) == std::string::npos) {
        ++report.dropped_surfaces;
        continue;
      }
      report.candidates.push_back({std::move(tuple.surface),
                                   std::move(tuple.term_type),
                                   std::move(tuple.translation),
                                   group.group_id});
    }
  }
  return report;
}

TermTable filter_and_vote(const std::vector<TermCandidate>& raw,
                          int min_support) {
  if (min_support < 1) {
    throw ValidationError("filter_and_vote: min_support must be >= 1");
  }

  std::map<std::string, std::vector<const TermCandidate*>> by_surface;
  for (const auto& candidate : raw) {
    by_surface[candidate.surface].push_back(&candidate);
  }

  TermTable table;
  for (const auto& [surface, candidates] : by_surface) {
    if (static_cast<int>(candidates.size()) < min_support) continue;

    TermRecord record;
    record.support = static_cast<int>(candidates.size());

    // Plurality type; sorted map iteration breaks ties lexicographically.
    std::map<std::string, int> type_votes;
    for (const auto* c : candidates) type_votes[c->term_type] += 1;
    int best_votes = 0;
    for (const auto& [type, votes] : type_votes) {
      if (votes > best_votes) {
        best_votes = votes;
        record.term_type = type;
      }
    }

    // Plurality translation; ties fall to the earliest supporting group,
    // then to the lexicographically smaller string.
    std::map<std::string, std::pair<int, int>> tr_votes;  // votes, min group
    for (const auto* c : candidates) {
      auto it = tr_votes.try_emplace(c->translation, 0, c->group_id).first;
      it->second.first += 1;
      it->second.second = std::min(it->second.second, c->group_id);
    }
    int best_tr_votes = 0, best_group = 0;
    for (const auto& [translation, vote] : tr_votes) {
      const auto& [votes, earliest] = vote;
      if (votes > best_tr_votes ||
          (votes == best_tr_votes && earliest < best_group)) {
        best_tr_votes = votes;
        best_group = earliest;
        record.translation = translation;
      }
    }

    table.records.emplace(surface, std::move(record));
  }
  return table;
}

void emit_ti_dataset(const Subtitle& src, const std::vector<PromptGroup>& groups,
                     const TermTrie& trie, const std::string& preamble,
                     std::ostream& out) {
  std::unordered_map<int, const Line*> line_by_id;
  for (const auto& line : src.lines) line_by_id[line.line_id] = &line;

  for (const auto& group : groups) {
    std::string input = preamble;
    std::vector<TermHit> hits;
    for (int line_id : group.line_ids) {
      auto it = line_by_id.find(line_id);
      if (it == line_by_id.end()) {
        throw ValidationError("emit_ti_dataset: group " +
                              std::to_string(group.group_id) +
                              " references unknown line " +
                              std::to_string(line_id));
      }
      if (!input.empty()) input += '\n';
      input += it->second->text;
      for (auto& hit : trie.retrieve(it->second->text, line_id)) {
        hits.push_back(std::move(hit));
      }
    }

    nlohmann::ordered_json target = nlohmann::ordered_json::array();
    std::vector<std::string> seen;
    for (const auto& hit : hits) {
      if (std::find(seen.begin(), seen.end(), hit.surface) != seen.end()) {
        continue;
      }
      seen.push_back(hit.surface);
      target.push_back({{"surface", hit.surface},
                        {"type", hit.term_type},
                        {"translation", hit.translation}});
    }

    nlohmann::ordered_json record;
    record["input"] = input;
    record["target"] = target;
    out << record.dump() << '\n';
    if (!out) throw std::runtime_error("emit_ti_dataset: write failed");
  }
}

}  // namespace hermes
