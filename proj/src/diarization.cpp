#include "hermes/diarization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "hermes/errors.hpp"

namespace hermes {

const char* to_string(SpeakerOrigin origin) {
  return origin == SpeakerOrigin::visual ? "visual" : "supplemented";
}

const char* to_string(GroupAction action) {
  switch (action) {
    case GroupAction::none: return "none";
    case GroupAction::registered: return "registered";
    case GroupAction::merged: return "merged";
  }
  return "?";
}

const SpeakerEntry* SpeakerRegistry::find(int speaker_id) const {
  for (const auto& e : entries) {
    if (e.speaker_id == speaker_id) return &e;
  }
  return nullptr;
}

int SpeakerRegistry::next_speaker_id() const {
  int max_id = 0;
  for (const auto& e : entries) max_id = std::max(max_id, e.speaker_id);
  return max_id + 1;
}

SpeakerRegistry register_speakers(const std::vector<LineFeatures>& features) {
  // visual cluster -> audio cluster -> votes
  std::map<int, std::map<int, int>> votes;
  for (const auto& f : features) {
    if (!f.active_detected) continue;
    if (!f.visual_cluster || !f.audio_cluster) {
      throw ValidationError("register_speakers: detected line " +
                            std::to_string(f.line_id) +
                            " lacks a cluster label");
    }
    votes[*f.visual_cluster][*f.audio_cluster] += 1;
  }
  if (votes.empty()) {
    throw ValidationError("register_speakers: no visual anchor");
  }

  SpeakerRegistry registry;
  for (const auto& [visual_id, audio_votes] : votes) {
    // Most votes wins; std::map iteration makes ties pick the lowest label.
    int winner = 0, best = -1;
    for (const auto& [audio_id, count] : audio_votes) {
      if (count > best) {
        best = count;
        winner = audio_id;
      }
    }

    SpeakerEntry entry;
    entry.speaker_id = visual_id;
    entry.origin = SpeakerOrigin::visual;
    Embedding sum;
    int count = 0;
    for (const auto& f : features) {
      if (!f.active_detected || *f.visual_cluster != visual_id ||
          *f.audio_cluster != winner) {
        continue;
      }
      if (count == 0) {
        sum = f.timbre;
      } else {
        sum += f.timbre;
      }
      ++count;
      entry.member_line_ids.push_back(f.line_id);
    }
    entry.prototype = sum / count;
    registry.entries.push_back(std::move(entry));
  }
  return registry;
}

std::pair<int, double> assign_undetected(const LineFeatures& line,
                                         const SpeakerRegistry& registry) {
  if (line.active_detected) {
    throw ValidationError("assign_undetected: line " +
                          std::to_string(line.line_id) +
                          " has a detected speaker");
  }
  if (registry.entries.empty()) {
    throw ValidationError("assign_undetected: empty registry");
  }
  int best_id = 0;
  double best_sim = -2.0;
  for (const auto& entry : registry.entries) {
    const double sim = cosine_similarity(line.timbre, entry.prototype);
    if (sim > best_sim ||
        (sim == best_sim && entry.speaker_id < best_id)) {
      best_sim = sim;
      best_id = entry.speaker_id;
    }
  }
  return {best_id, best_sim};
}

std::vector<TurnGroup> group_by_adjacent_similarity(
    std::span<const double> similarities, double epsilon) {
  std::vector<TurnGroup> groups;
  TurnGroup current;
  current.group_id = 1;
  current.indices.push_back(0);
  for (std::size_t i = 0; i < similarities.size(); ++i) {
    if (similarities[i] < epsilon) {
      groups.push_back(std::move(current));
      current = TurnGroup{};
      current.group_id = static_cast<int>(groups.size()) + 1;
    } else {
      current.interior_similarities.push_back(similarities[i]);
    }
    current.indices.push_back(i + 1);
  }
  groups.push_back(std::move(current));
  return groups;
}

std::vector<TurnGroup> group_by_turns(const std::vector<LineFeatures>& features,
                                      double epsilon) {
  if (features.empty()) {
    throw ValidationError("group_by_turns: no lines");
  }
  std::vector<double> sims;
  sims.reserve(features.size() - 1);
  for (std::size_t i = 0; i + 1 < features.size(); ++i) {
    sims.push_back(cosine_similarity(features[i].timbre, features[i + 1].timbre));
  }
  return group_by_adjacent_similarity(sims, epsilon);
}

double new_speaker_score(const LineFeatures& line,
                         const SpeakerRegistry& registry) {
  if (line.active_detected) return 1.0;
  double best = -2.0;
  bool any = false;
  for (const auto& entry : registry.entries) {
    if (entry.origin != SpeakerOrigin::visual) continue;
    best = std::max(best, cosine_similarity(line.timbre, entry.prototype));
    any = true;
  }
  if (!any) {
    throw ValidationError("new_speaker_score: no visual-origin prototypes");
  }
  return best;
}

namespace {

Embedding mean_timbre(const std::vector<LineFeatures>& features,
                      const std::vector<std::size_t>& indices) {
  Embedding sum = features[indices.front()].timbre;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    sum += features[indices[i]].timbre;
  }
  return sum / static_cast<double>(indices.size());
}

}  // namespace

std::vector<GroupDecision> supplement(const std::vector<TurnGroup>& groups,
                                      const std::vector<LineFeatures>& features,
                                      std::span<const double> sigmas,
                                      SpeakerRegistry& registry, double eta,
                                      double epsilon,
                                      std::vector<int>& assignment) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw ValidationError("supplement: eta must be in (0, 1)");
  }
  if (sigmas.size() != features.size()) {
    throw ValidationError("supplement: one sigma per line required");
  }
  assignment.assign(features.size(), 0);

  std::unordered_map<int, std::size_t> index_of_line;
  for (std::size_t i = 0; i < features.size(); ++i) {
    index_of_line[features[i].line_id] = i;
  }

  std::vector<GroupDecision> decisions;
  for (const auto& group : groups) {
    if (group.indices.empty()) {
      throw ValidationError("supplement: empty group " +
                            std::to_string(group.group_id));
    }
    GroupDecision decision;
    decision.group_id = group.group_id;
    double sum = 0.0;
    for (std::size_t idx : group.indices) sum += sigmas[idx];
    decision.sigma_mean = sum / static_cast<double>(group.indices.size());

    if (decision.sigma_mean >= eta) {
      decisions.push_back(decision);
      continue;
    }

    const Embedding group_mean = mean_timbre(features, group.indices);

    // Most similar existing supplemented entry, if any clears epsilon.
    SpeakerEntry* merge_target = nullptr;
    double best_sim = -2.0;
    for (auto& entry : registry.entries) {
      if (entry.origin != SpeakerOrigin::supplemented) continue;
      const double sim = cosine_similarity(group_mean, entry.prototype);
      if (sim > best_sim) {
        best_sim = sim;
        merge_target = &entry;
      }
    }

    if (merge_target != nullptr && best_sim >= epsilon) {
      for (std::size_t idx : group.indices) {
        merge_target->member_line_ids.push_back(features[idx].line_id);
      }
      std::vector<std::size_t> member_indices;
      for (int line_id : merge_target->member_line_ids) {
        member_indices.push_back(index_of_line.at(line_id));
      }
      merge_target->prototype = mean_timbre(features, member_indices);
      decision.action = GroupAction::merged;
      decision.speaker_id = merge_target->speaker_id;
      decision.merge_similarity = best_sim;
    } else {
      SpeakerEntry entry;
      entry.speaker_id = registry.next_speaker_id();
      entry.origin = SpeakerOrigin::supplemented;
      entry.prototype = group_mean;
      for (std::size_t idx : group.indices) {
        entry.member_line_ids.push_back(features[idx].line_id);
      }
      decision.action = GroupAction::registered;
      decision.speaker_id = entry.speaker_id;
      registry.entries.push_back(std::move(entry));
    }
    for (std::size_t idx : group.indices) {
      assignment[idx] = decision.speaker_id;
    }
    decisions.push_back(decision);
  }
  return decisions;
}

DiarizationResult diarize(std::vector<LineFeatures> features,
                          const DiarizeParams& params) {
  if (features.empty()) throw ValidationError("diarize: no lines");

  // Cluster whichever modality arrives unlabeled.
  std::vector<std::size_t> detected;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].active_detected) detected.push_back(i);
  }
  const bool need_visual =
      std::any_of(detected.begin(), detected.end(),
                  [&](std::size_t i) { return !features[i].visual_cluster; });
  if (need_visual && !detected.empty()) {
    std::vector<Embedding> faces;
    for (std::size_t i : detected) {
      if (!features[i].face) {
        throw ValidationError("diarize: detected line " +
                              std::to_string(features[i].line_id) +
                              " lacks a face embedding");
      }
      faces.push_back(*features[i].face);
    }
    std::vector<int> labels;
    if (faces.size() == 1) {
      labels = {1};
    } else {
      labels = spectral_cluster(
          faces, {params.k_max, params.seed ^ 0x9E3779B97F4A7C15ull, 100});
    }
    for (std::size_t i = 0; i < detected.size(); ++i) {
      features[detected[i]].visual_cluster = labels[i];
    }
  }

  const bool need_audio =
      std::any_of(features.begin(), features.end(),
                  [](const LineFeatures& f) { return !f.audio_cluster; });
  if (need_audio) {
    std::vector<Embedding> timbres;
    for (const auto& f : features) timbres.push_back(f.timbre);
    std::vector<int> labels;
    if (timbres.size() == 1) {
      labels = {1};
    } else {
      labels = spectral_cluster(timbres, {params.k_max, params.seed, 100});
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
      features[i].audio_cluster = labels[i];
    }
  }

  DiarizationResult result;
  result.registry = register_speakers(features);

  const auto groups = group_by_turns(features, params.epsilon);
  std::vector<double> sigmas;
  sigmas.reserve(features.size());
  for (const auto& f : features) {
    sigmas.push_back(new_speaker_score(f, result.registry));
  }

  std::vector<int> supplemented_speaker;
  result.decisions =
      supplement(groups, features, sigmas, result.registry, params.eta,
                 params.epsilon, supplemented_speaker);

  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    DiarizedLine out;
    out.line_id = f.line_id;
    if (f.active_detected) {
      out.speaker_id = *f.visual_cluster;
      out.confidence = 1.0;
      out.origin = SpeakerOrigin::visual;
    } else if (supplemented_speaker[i] != 0) {
      out.speaker_id = supplemented_speaker[i];
      const SpeakerEntry* entry = result.registry.find(out.speaker_id);
      out.confidence = std::clamp(
          cosine_similarity(f.timbre, entry->prototype), 0.0, 1.0);
      out.origin = SpeakerOrigin::supplemented;
    } else {
      auto [speaker_id, sim] = assign_undetected(f, result.registry);
      out.speaker_id = speaker_id;
      out.confidence = std::clamp(sim, 0.0, 1.0);
      out.origin = result.registry.find(speaker_id)->origin;
    }
    result.lines.push_back(out);
  }
  return result;
}

std::vector<double> sweep_epsilon(const std::vector<LineFeatures>& features,
                                  const std::vector<bool>& reference_turns,
                                  std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("sweep_epsilon: empty grid");
  if (features.size() < 2 || reference_turns.size() != features.size() - 1) {
    throw ValidationError(
        "sweep_epsilon: one reference boolean per adjacent pair required");
  }
  std::vector<double> sims;
  for (std::size_t i = 0; i + 1 < features.size(); ++i) {
    sims.push_back(cosine_similarity(features[i].timbre, features[i + 1].timbre));
  }
  std::vector<double> accuracy;
  accuracy.reserve(grid.size());
  for (double epsilon : grid) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < sims.size(); ++i) {
      const bool predicted = sims[i] < epsilon;
      if (predicted == reference_turns[i]) ++correct;
    }
    accuracy.push_back(static_cast<double>(correct) /
                       static_cast<double>(sims.size()));
  }
  return accuracy;
}

}  // namespace hermes
