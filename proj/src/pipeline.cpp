#include "hermes/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "hermes/errors.hpp"
#include "hermes/subtitle_io.hpp"

namespace hermes {

std::string alias_label(int index) {
  std::string label;
  int n = index;
  do {
    label.insert(label.begin(), static_cast<char>('A' + n % 26));
    n = n / 26 - 1;
  } while (n >= 0);
  return label;
}

ContextBundle build_prompt_contexts(
    const Subtitle& src, const std::map<int, int>& speaker_by_line,
    const TermTrie* trie, const std::map<int, std::string>& aligned_targets,
    const std::map<int, SpeakerDescriptor>& descriptors,
    const std::string& preamble, int n_max) {
  std::vector<std::string> labels;
  labels.reserve(src.size());
  for (const auto& line : src.lines) {
    auto it = speaker_by_line.find(line.line_id);
    if (it == speaker_by_line.end()) {
      throw ValidationError("no speaker label for line " +
                            std::to_string(line.line_id));
    }
    labels.push_back(std::to_string(it->second));
  }

  ContextBundle bundle;
  bundle.groups = segment_prompts(src, labels, n_max);

  std::map<int, const Line*> line_by_id;
  for (const auto& line : src.lines) line_by_id[line.line_id] = &line;

  for (const auto& group : bundle.groups) {
    PromptContext context;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%06d", group.group_id);
    context.prompt_id = buf;
    context.preamble = preamble;

    std::vector<int> speaker_order;  // original ids, first appearance
    std::vector<std::optional<std::string>> group_targets;
    for (int line_id : group.line_ids) {
      const Line* line = line_by_id.at(line_id);
      const int speaker = speaker_by_line.at(line_id);
      auto pos = std::find(speaker_order.begin(), speaker_order.end(), speaker);
      if (pos == speaker_order.end()) {
        speaker_order.push_back(speaker);
        pos = std::prev(speaker_order.end());
      }
      const std::string label =
          alias_label(static_cast<int>(pos - speaker_order.begin()));

      context.lines.push_back(line->text);
      context.speaker_labels.push_back(label);
      context.term_hits.push_back(
          trie != nullptr ? trie->retrieve(line->text, line_id)
                          : std::vector<TermHit>{});

      auto tgt = aligned_targets.find(line_id);
      group_targets.push_back(tgt != aligned_targets.end()
                                  ? std::optional<std::string>(tgt->second)
                                  : std::nullopt);
    }
    for (std::size_t i = 0; i < speaker_order.size(); ++i) {
      auto it = descriptors.find(speaker_order[i]);
      context.descriptors[alias_label(static_cast<int>(i))] =
          it != descriptors.end() ? it->second
                                  : SpeakerDescriptor{"unknown", "unknown"};
    }
    bundle.contexts.push_back(std::move(context));
    bundle.targets.push_back(std::move(group_targets));
  }
  return bundle;
}

}  // namespace hermes
