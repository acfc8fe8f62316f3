#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hermes/sapo.hpp"
#include "hermes/subtitle.hpp"
#include "hermes/terminology.hpp"

namespace hermes {

// Prompt contexts plus their reference translations, ready for SFT
// emission or segment sampling.
struct ContextBundle {
  std::vector<PromptGroup> groups;
  std::vector<PromptContext> contexts;
  // Aligned target per line of each prompt; absent for unmatched lines.
  std::vector<std::vector<std::optional<std::string>>> targets;
};

// Groups the document at speaker turns (capped at n_max lines), relabels
// the speakers of each prompt as A, B, C... in order of appearance, and
// attaches term hits, descriptors, and aligned reference translations.
ContextBundle build_prompt_contexts(
    const Subtitle& src,
    const std::map<int, int>& speaker_by_line,          // line_id -> speaker
    const TermTrie* trie,                               // optional
    const std::map<int, std::string>& aligned_targets,  // line_id -> text
    const std::map<int, SpeakerDescriptor>& descriptors,
    const std::string& preamble, int n_max);

// "A", "B", ..., "Z", "AA", "AB", ... for 0, 1, ...
std::string alias_label(int index);

}  // namespace hermes
