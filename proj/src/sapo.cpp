#include "hermes/sapo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <random>

#include "hermes/errors.hpp"

namespace hermes {

const char* const kPromptTemplateVersion = "v1";

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<std::string>> split_holdout(
    std::vector<std::string> prompt_ids, double fraction, std::uint64_t seed) {
  if (prompt_ids.empty()) {
    throw ValidationError("split_holdout: no prompt ids");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split_holdout: fraction must be in (0, 1)");
  }
  const auto count = prompt_ids.size();
  auto holdout_size = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(count) + 0.5));
  holdout_size = std::clamp<std::size_t>(holdout_size, 1, count);

  // Fisher-Yates on raw engine draws keeps the split independent of the
  // standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = count - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(prompt_ids[i], prompt_ids[j]);
  }

  std::vector<std::string> holdout(prompt_ids.begin(),
                                   prompt_ids.begin() + holdout_size);
  std::vector<std::string> rest(prompt_ids.begin() + holdout_size,
                                prompt_ids.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(rest), std::move(holdout)};
}

std::string render_prompt(const PromptContext& context) {
  if (context.lines.empty()) {
    throw ValidationError("render_prompt: prompt has no lines");
  }
  if (context.speaker_labels.size() != context.lines.size()) {
    throw ValidationError("render_prompt: one speaker label per line required");
  }
  if (!context.term_hits.empty() &&
      context.term_hits.size() != context.lines.size()) {
    throw ValidationError("render_prompt: term hit lists misaligned");
  }

  std::string out;
  if (!context.preamble.empty()) {
    out += context.preamble;
    out += '\n';
  }

  // Speaker block, labels in first-appearance order.
  std::vector<std::string> order;
  for (const auto& label : context.speaker_labels) {
    if (std::find(order.begin(), order.end(), label) == order.end()) {
      order.push_back(label);
    }
  }
  out += "Speakers:";
  for (const auto& label : order) {
    auto it = context.descriptors.find(label);
    const std::string age = it != context.descriptors.end() && !it->second.age.empty()
                                ? it->second.age
                                : "unknown";
    const std::string gender =
        it != context.descriptors.end() && !it->second.gender.empty()
            ? it->second.gender
            : "unknown";
    out += " [" + label + "] " + gender + ", " + age + ";";
  }
  out += '\n';

  // Term directives, deduplicated by surface in first-occurrence order.
  std::vector<const TermHit*> directives;
  for (const auto& hits : context.term_hits) {
    for (const auto& hit : hits) {
      const bool seen =
          std::any_of(directives.begin(), directives.end(),
                      [&](const TermHit* d) { return d->surface == hit.surface; });
      if (!seen) directives.push_back(&hit);
    }
  }
  if (!directives.empty()) {
    out += "Terms:";
    for (const TermHit* d : directives) {
      out += " " + d->surface + " -> " + d->translation + " (" + d->term_type +
             ");";
    }
    out += '\n';
  }

  out += "Lines:";
  for (std::size_t i = 0; i < context.lines.size(); ++i) {
    out += "\n[" + context.speaker_labels[i] + "] " + context.lines[i];
  }
  return out;
}

SftEmitStats emit_sft_dataset(
    const std::vector<PromptContext>& contexts,
    const std::vector<std::vector<std::optional<std::string>>>& targets,
    std::ostream& out) {
  if (contexts.size() != targets.size()) {
    throw ValidationError("emit_sft_dataset: contexts/targets misaligned");
  }
  SftEmitStats stats;
  for (std::size_t p = 0; p < contexts.size(); ++p) {
    if (targets[p].size() != contexts[p].lines.size() ||
        !std::all_of(targets[p].begin(), targets[p].end(),
                     [](const auto& t) { return t.has_value(); })) {
      ++stats.skipped;
      continue;
    }
    nlohmann::ordered_json record;
    record["input"] = render_prompt(contexts[p]);
    auto& target = record["target"] = nlohmann::ordered_json::array();
    for (const auto& t : targets[p]) target.push_back(*t);
    out << record.dump() << '\n';
    ++stats.emitted;
  }
  if (!out) throw std::runtime_error("emit_sft_dataset: write failed");
  return stats;
}

SegmentSample sample_segments(const PromptContext& context,
                              TranslatorClient& translator, JudgeClient& judge,
                              int k, const SamplingParams& params,
                              std::span<const std::string> references) {
  if (k < 1) throw ValidationError("sample_segments: k must be >= 1");
  if (!references.empty() && references.size() != context.lines.size()) {
    throw ValidationError("sample_segments: one reference per line required");
  }
  const std::string rendered = render_prompt(context);

  SegmentSample sample;
  sample.prompt_id = context.prompt_id;
  std::vector<std::string> prefix;
  for (std::size_t i = 0; i < context.lines.size(); ++i) {
    const std::vector<std::string> raw =
        translator.translate(rendered, context.lines, prefix, params, k);

    CandidateSet set;
    set.line_index = static_cast<int>(i);
    for (const auto& candidate : raw) {
      std::string trimmed = trim(candidate);
      if (std::find(set.candidates.begin(), set.candidates.end(), trimmed) ==
          set.candidates.end()) {
        set.candidates.push_back(std::move(trimmed));
      }
    }
    if (!references.empty()) {
      // An empty string marks a line without a usable reference.
      const std::string ref = trim(references[i]);
      if (!ref.empty()) {
        std::erase(set.candidates, ref);
        set.candidates.insert(set.candidates.begin(), ref);
        set.has_reference = true;
      }
    }

    set.scores = judge.judge_scores(context.lines[i], rendered, set.candidates);
    if (set.scores.size() != set.candidates.size()) {
      throw ProtocolError("judge returned " + std::to_string(set.scores.size()) +
                              " scores for " +
                              std::to_string(set.candidates.size()) +
                              " candidates",
                          "");
    }

    // Lowest index among maxima (prefers the reference at index 0),
    // highest index among minima.
    set.chosen = 0;
    set.rejected = 0;
    for (std::size_t j = 1; j < set.scores.size(); ++j) {
      if (set.scores[j] > set.scores[static_cast<std::size_t>(set.chosen)]) {
        set.chosen = static_cast<int>(j);
      }
      if (set.scores[j] <= set.scores[static_cast<std::size_t>(set.rejected)]) {
        set.rejected = static_cast<int>(j);
      }
    }

    prefix.push_back(set.candidates[static_cast<std::size_t>(set.chosen)]);
    sample.sets.push_back(std::move(set));
  }
  sample.prefix_chain = std::move(prefix);
  return sample;
}

int gate(const CandidateSet& set) {
  if (set.candidates.empty() || set.scores.size() != set.candidates.size()) {
    throw ValidationError("gate: candidate set is not scored");
  }
  if (set.candidates.size() <= 3) return 0;
  const auto [min_it, max_it] =
      std::minmax_element(set.scores.begin(), set.scores.end());
  return (*max_it - *min_it <= 5) ? 0 : 1;
}

std::vector<double> importance(std::span<const std::size_t> set_sizes) {
  if (set_sizes.empty()) throw ValidationError("importance: no candidate sets");
  std::size_t total = 0;
  for (std::size_t size : set_sizes) {
    if (size < 1) throw ValidationError("importance: empty candidate set");
    total += size;
  }
  std::vector<double> delta;
  delta.reserve(set_sizes.size());
  for (std::size_t size : set_sizes) {
    delta.push_back(static_cast<double>(size) / static_cast<double>(total));
  }
  return delta;
}

std::vector<AdaptiveWeight> adaptive_weights(const SegmentSample& sample) {
  std::vector<std::size_t> sizes;
  sizes.reserve(sample.sets.size());
  for (const auto& set : sample.sets) sizes.push_back(set.candidates.size());
  const std::vector<double> delta = importance(sizes);

  std::vector<AdaptiveWeight> weights;
  weights.reserve(sample.sets.size());
  for (std::size_t i = 0; i < sample.sets.size(); ++i) {
    AdaptiveWeight w;
    w.line_index = sample.sets[i].line_index;
    w.gate = gate(sample.sets[i]);
    w.importance = delta[i];
    w.weight = w.gate * w.importance;
    weights.push_back(w);
  }
  return weights;
}

namespace {

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

double dpo_segment_loss(const PoLossInput& input) {
  if (!std::isfinite(input.policy_chosen) ||
      !std::isfinite(input.policy_rejected) ||
      !std::isfinite(input.ref_chosen) || !std::isfinite(input.ref_rejected)) {
    throw ValidationError("dpo_segment_loss: non-finite log-probability");
  }
  if (!(input.beta > 0.0)) {
    throw ValidationError("dpo_segment_loss: beta must be > 0");
  }
  const double delta_chosen = input.policy_chosen - input.ref_chosen;
  const double delta_rejected = input.policy_rejected - input.ref_rejected;
  return log_sigmoid(input.beta * (delta_chosen - delta_rejected));
}

double sapo_loss(std::span<const AdaptiveWeight> weights,
                 std::span<const double> segment_losses) {
  if (weights.size() != segment_losses.size()) {
    throw ValidationError("sapo_loss: weights/losses length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sum += weights[i].weight * segment_losses[i];
  }
  return -sum;
}

PreferenceEmitStats emit_preference_dataset(
    const std::vector<PromptContext>& contexts,
    const std::vector<SegmentSample>& samples, std::ostream& out) {
  if (contexts.size() != samples.size()) {
    throw ValidationError("emit_preference_dataset: contexts/samples misaligned");
  }
  PreferenceEmitStats stats;
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const SegmentSample& sample = samples[p];
    const PromptContext& context = contexts[p];
    if (sample.sets.size() != context.lines.size()) {
      throw ValidationError("emit_preference_dataset: sample for prompt " +
                            sample.prompt_id + " misaligned with its context");
    }
    const std::vector<AdaptiveWeight> weights = adaptive_weights(sample);
    for (std::size_t i = 0; i < sample.sets.size(); ++i) {
      const CandidateSet& set = sample.sets[i];
      ++stats.total_lines;
      if (set.candidates.size() <= 3) {
        ++stats.gated_off_size;
        continue;
      }
      if (weights[i].gate == 0) {
        ++stats.gated_off_range;
        continue;
      }
      const int chosen_score = set.scores[static_cast<std::size_t>(set.chosen)];
      const int rejected_score =
          set.scores[static_cast<std::size_t>(set.rejected)];
      if (chosen_score <= rejected_score) {
        throw ValidationError(
            "emit_preference_dataset: chosen score does not exceed rejected "
            "score for prompt " +
            sample.prompt_id + " line " + std::to_string(i + 1));
      }

      nlohmann::ordered_json record;
      record["prompt_id"] = sample.prompt_id;
      record["line_index"] = i + 1;
      record["prefix"] = std::vector<std::string>(
          sample.prefix_chain.begin(),
          sample.prefix_chain.begin() + static_cast<std::ptrdiff_t>(i));
      record["source"] = context.lines[i];
      record["chosen"] = set.candidates[static_cast<std::size_t>(set.chosen)];
      record["rejected"] = set.candidates[static_cast<std::size_t>(set.rejected)];
      record["weight"] = weights[i].weight;
      record["candidates"] = set.candidates;
      record["scores"] = set.scores;
      out << record.dump() << '\n';
      ++stats.emitted;
    }
  }
  if (!out) throw std::runtime_error("emit_preference_dataset: write failed");
  return stats;
}

}  // namespace hermes
