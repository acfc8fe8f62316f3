#pragma once

// Independent reference implementations used only by tests. Each oracle
// restates the documented rules in the most literal form available and
// stays off the implementation paths it checks.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "hermes/subtitle.hpp"
#include "hermes/terminology.hpp"
#include "hermes/utf8.hpp"

namespace hermes::testing {

// Exhaustive O(N^2) bitext aligner: for each source line in order, scan
// every target index, apply the window rule |j - i| <= M, the start-delta
// rule, and first-come one-to-one claiming; nearest delta wins, lower
// target index on ties.
inline AlignedCorpus oracle_align(const Subtitle& src, const Subtitle& tgt,
                                  double max_delta) {
  const auto n_src = static_cast<std::ptrdiff_t>(src.size());
  const auto n_tgt = static_cast<std::ptrdiff_t>(tgt.size());
  const std::ptrdiff_t margin = std::abs(n_src - n_tgt);

  AlignedCorpus corpus;
  std::vector<bool> taken(tgt.size(), false);
  for (std::ptrdiff_t i = 0; i < n_src; ++i) {
    std::ptrdiff_t best = -1;
    double best_delta = 0.0;
    for (std::ptrdiff_t j = 0; j < n_tgt; ++j) {
      if (j < i - margin || j > i + margin) continue;
      if (taken[static_cast<std::size_t>(j)]) continue;
      const double delta = std::abs(src.lines[static_cast<std::size_t>(i)].start.seconds() -
                                    tgt.lines[static_cast<std::size_t>(j)].start.seconds());
      if (delta > max_delta) continue;
      if (best < 0 || delta < best_delta) {
        best = j;
        best_delta = delta;
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      corpus.pairs.emplace_back(src.lines[static_cast<std::size_t>(i)].line_id,
                                tgt.lines[static_cast<std::size_t>(best)].line_id);
    } else {
      corpus.unmatched_source.push_back(src.lines[static_cast<std::size_t>(i)].line_id);
    }
  }
  for (std::ptrdiff_t j = 0; j < n_tgt; ++j) {
    if (!taken[static_cast<std::size_t>(j)]) {
      corpus.unmatched_target.push_back(tgt.lines[static_cast<std::size_t>(j)].line_id);
    }
  }
  return corpus;
}

inline bool same_pairs(const AlignedCorpus& a, const AlignedCorpus& b) {
  return a.pairs == b.pairs && a.unmatched_source == b.unmatched_source &&
         a.unmatched_target == b.unmatched_target;
}

// Naive leftmost-longest scanner over a plain surface list: at each scalar
// position try every surface by direct comparison, keep the longest match,
// emit it and jump past it; otherwise advance one scalar.
struct OracleHit {
  std::string surface;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  bool operator==(const OracleHit&) const = default;
};

inline std::vector<OracleHit> oracle_retrieve(
    const std::string& text, const std::vector<std::string>& surfaces) {
  const auto scalars = decode_utf8(text);
  std::vector<std::u32string> keys;
  keys.reserve(surfaces.size());
  for (const auto& s : surfaces) keys.push_back(to_u32(s));

  std::vector<OracleHit> hits;
  std::size_t pos = 0;
  while (pos < scalars.size()) {
    std::ptrdiff_t best = -1;
    std::size_t best_len = 0;
    for (std::size_t s = 0; s < keys.size(); ++s) {
      const auto& key = keys[s];
      if (key.empty() || pos + key.size() > scalars.size()) continue;
      bool match = true;
      for (std::size_t k = 0; k < key.size(); ++k) {
        if (scalars[pos + k].value != key[k]) {
          match = false;
          break;
        }
      }
      if (match && key.size() > best_len) {
        best = static_cast<std::ptrdiff_t>(s);
        best_len = key.size();
      }
    }
    if (best < 0) {
      ++pos;
      continue;
    }
    const auto& first = scalars[pos];
    const auto& last = scalars[pos + best_len - 1];
    hits.push_back({surfaces[static_cast<std::size_t>(best)], first.byte_offset,
                    last.byte_offset + last.byte_length});
    pos += best_len;
  }
  return hits;
}

// Brute-force voting: tally everything, then rank winners by the stated
// tie-breaks using explicit sorts.
inline TermTable oracle_filter_and_vote(const std::vector<TermCandidate>& raw,
                                        int min_support) {
  std::map<std::string, std::vector<TermCandidate>> by_surface;
  for (const auto& c : raw) by_surface[c.surface].push_back(c);

  TermTable table;
  for (const auto& [surface, group] : by_surface) {
    if (static_cast<int>(group.size()) < min_support) continue;
    TermRecord record;
    record.support = static_cast<int>(group.size());

    {
      std::map<std::string, int> votes;
      for (const auto& c : group) votes[c.term_type] += 1;
      std::vector<std::pair<std::string, int>> ranked(votes.begin(), votes.end());
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      record.term_type = ranked.front().first;
    }
    {
      struct Entry {
        std::string translation;
        int votes = 0;
        int earliest_group = 0;
      };
      std::map<std::string, Entry> votes;
      for (const auto& c : group) {
        auto it = votes.find(c.translation);
        if (it == votes.end()) {
          votes[c.translation] = {c.translation, 1, c.group_id};
        } else {
          it->second.votes += 1;
          it->second.earliest_group = std::min(it->second.earliest_group, c.group_id);
        }
      }
      std::vector<Entry> ranked;
      for (const auto& [_, e] : votes) ranked.push_back(e);
      std::sort(ranked.begin(), ranked.end(), [](const Entry& a, const Entry& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.earliest_group != b.earliest_group) {
          return a.earliest_group < b.earliest_group;
        }
        return a.translation < b.translation;
      });
      record.translation = ranked.front().translation;
    }
    table.records[surface] = record;
  }
  return table;
}

}  // namespace hermes::testing
