#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hermes/model_clients.hpp"
#include "hermes/terminology.hpp"

namespace hermes {

// Speaker descriptor ingested from annotations (age bracket and gender as
// free-form strings; "unknown" is an explicit marker, not an absence).
struct SpeakerDescriptor {
  std::string age;
  std::string gender;
};

// Everything needed to render one prompt: the preamble, the speaker-labeled
// source lines, per-line term hits, and per-speaker descriptors.
struct PromptContext {
  std::string prompt_id;
  std::string preamble;
  std::vector<std::string> lines;
  std::vector<std::string> speaker_labels;           // one per line, e.g. "A"
  std::vector<std::vector<TermHit>> term_hits;       // one list per line
  std::map<std::string, SpeakerDescriptor> descriptors;  // keyed by label
};

// Candidate translations of one line with their judge scores.
struct CandidateSet {
  int line_index = 0;  // 0-based
  std::vector<std::string> candidates;  // pairwise distinct; reference first when present
  std::vector<int> scores;              // aligned, 0-100
  bool has_reference = false;           // candidates[0] is the human reference
  int chosen = 0;
  int rejected = 0;
};

struct SegmentSample {
  std::string prompt_id;
  std::vector<CandidateSet> sets;       // one per line
  std::vector<std::string> prefix_chain;  // chosen translation per line
};

struct AdaptiveWeight {
  int line_index = 0;
  int gate = 0;
  double importance = 0.0;
  double weight = 0.0;  // gate * importance
};

struct PoLossInput {
  double policy_chosen = 0.0;
  double policy_rejected = 0.0;
  double ref_chosen = 0.0;
  double ref_rejected = 0.0;
  double beta = 0.1;
};

// Deterministic seeded split at prompt granularity. The holdout (second
// element) gets round-half-up(fraction * count) prompts, at least one when
// the fraction is positive.
std::pair<std::vector<std::string>, std::vector<std::string>> split_holdout(
    std::vector<std::string> prompt_ids, double fraction, std::uint64_t seed);

// Versioned, bit-stable rendering of a prompt context. Identical inputs
// produce identical bytes.
extern const char* const kPromptTemplateVersion;
std::string render_prompt(const PromptContext& context);

// One record per prompt: {"input": rendered context, "target": [...]}.
// Prompts with a missing line translation are skipped and counted.
struct SftEmitStats {
  int emitted = 0;
  int skipped = 0;
};
SftEmitStats emit_sft_dataset(
    const std::vector<PromptContext>& contexts,
    const std::vector<std::vector<std::optional<std::string>>>& targets,
    std::ostream& out);

// Segment-wise sampling: for each line, request k candidates conditioned on
// the chosen translations of the preceding lines, deduplicate, prepend the
// human reference when available, score with the judge, then extend the
// prefix with the top-scoring candidate. Score ties choose the lowest
// candidate index (preferring the reference) and reject the highest.
// references is either empty or one entry per line; an empty string marks
// a line without a reference.
SegmentSample sample_segments(const PromptContext& context,
                              TranslatorClient& translator, JudgeClient& judge,
                              int k, const SamplingParams& params,
                              std::span<const std::string> references = {});

// 0 when the candidates lack diversity or a clear quality gap:
// |candidates| <= 3 or max(scores) - min(scores) <= 5.
int gate(const CandidateSet& set);

// delta_i = |T_i| / sum_j |T_j|; sums to 1 across the prompt.
std::vector<double> importance(std::span<const std::size_t> set_sizes);

std::vector<AdaptiveWeight> adaptive_weights(const SegmentSample& sample);

// log sigmoid(beta * ((policy_c - ref_c) - (policy_r - ref_r))), computed
// without overflow for arguments out to +-1e4.
double dpo_segment_loss(const PoLossInput& input);

// -sum_i w_i * L_po_i for one prompt.
double sapo_loss(std::span<const AdaptiveWeight> weights,
                 std::span<const double> segment_losses);

struct PreferenceEmitStats {
  int total_lines = 0;
  int gated_off_size = 0;   // |candidates| <= 3
  int gated_off_range = 0;  // score range <= 5 (and not counted above)
  int emitted = 0;
};

// One line-delimited JSON record per gated-on line, stable field order:
// {"prompt_id","line_index","prefix","source","chosen","rejected","weight",
//  "candidates","scores"}. Refuses to emit a pair whose chosen score does
// not exceed its rejected score.
PreferenceEmitStats emit_preference_dataset(
    const std::vector<PromptContext>& contexts,
    const std::vector<SegmentSample>& samples, std::ostream& out);

}  // namespace hermes
