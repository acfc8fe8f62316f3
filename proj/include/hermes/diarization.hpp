#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hermes/embedding.hpp"
#include "hermes/spectral.hpp"

namespace hermes {

enum class SpeakerOrigin { visual, supplemented };

struct SpeakerEntry {
  int speaker_id = 0;
  Embedding prototype;  // mean timbre of the member lines backing it
  SpeakerOrigin origin = SpeakerOrigin::visual;
  std::vector<int> member_line_ids;
};

struct SpeakerRegistry {
  std::vector<SpeakerEntry> entries;

  const SpeakerEntry* find(int speaker_id) const;
  int next_speaker_id() const;
};

// Maximal run of adjacent lines whose pairwise timbre similarity stays at
// or above the turn threshold.
struct TurnGroup {
  int group_id = 0;
  std::vector<std::size_t> indices;       // positions into the feature list
  std::vector<double> interior_similarities;  // one per interior adjacent pair
};

enum class GroupAction { none, registered, merged };

struct GroupDecision {
  int group_id = 0;
  double sigma_mean = 0.0;
  GroupAction action = GroupAction::none;
  int speaker_id = 0;      // target of a register/merge, 0 otherwise
  double merge_similarity = 0.0;
};

struct DiarizedLine {
  int line_id = 0;
  int speaker_id = 0;
  double confidence = 0.0;  // 1.0 for visually detected lines
  SpeakerOrigin origin = SpeakerOrigin::visual;
};

struct DiarizationResult {
  std::vector<DiarizedLine> lines;
  SpeakerRegistry registry;
  std::vector<GroupDecision> decisions;
};

struct DiarizeParams {
  double epsilon = 0.35;  // speaker-turn similarity threshold
  double eta = 0.4;       // new-speaker score threshold
  int k_max = 20;
  std::uint64_t seed = 0;
};

// Registers one speaker per visual cluster: the audio cluster with the
// most votes inside the visual cluster defines the member lines, and the
// prototype is the mean timbre over those lines. Vote ties pick the lowest
// audio-cluster label.
SpeakerRegistry register_speakers(const std::vector<LineFeatures>& features);

// Best prototype for an undetected line: (speaker_id, similarity) of the
// registry entry with the highest cosine to the line's timbre. Argmax ties
// pick the lowest speaker_id.
std::pair<int, double> assign_undetected(const LineFeatures& line,
                                         const SpeakerRegistry& registry);

// Boundary between consecutive lines iff their timbre cosine < epsilon.
std::vector<TurnGroup> group_by_turns(const std::vector<LineFeatures>& features,
                                      double epsilon);

// Same partition rule applied to precomputed adjacent similarities
// (similarities[i] relates line i to line i+1).
std::vector<TurnGroup> group_by_adjacent_similarity(
    std::span<const double> similarities, double epsilon);

// New-speaker score: 1.0 for a detected line, otherwise the best cosine
// against the visual-origin prototypes.
double new_speaker_score(const LineFeatures& line,
                         const SpeakerRegistry& registry);

// Supplementation pass over groups in document order. Groups whose mean
// score falls below eta either register their mean timbre as a new speaker
// or merge into the most similar supplemented entry (similarity >= epsilon);
// merged prototypes are re-averaged over all member lines. Assigns the
// group's lines to the chosen entry via `assignment` (index -> speaker_id,
// 0 = unassigned).
std::vector<GroupDecision> supplement(const std::vector<TurnGroup>& groups,
                                      const std::vector<LineFeatures>& features,
                                      std::span<const double> sigmas,
                                      SpeakerRegistry& registry, double eta,
                                      double epsilon,
                                      std::vector<int>& assignment);

// Full pipeline: cluster (when labels are absent), register, group,
// supplement, then resolve remaining undetected lines by prototype
// similarity. Deterministic given (features, seed).
DiarizationResult diarize(std::vector<LineFeatures> features,
                          const DiarizeParams& params = {});

// Speaker-turn accuracy over a threshold grid: a turn is predicted between
// adjacent lines iff their timbre cosine < epsilon.
std::vector<double> sweep_epsilon(const std::vector<LineFeatures>& features,
                                  const std::vector<bool>& reference_turns,
                                  std::span<const double> grid);

const char* to_string(SpeakerOrigin origin);
const char* to_string(GroupAction action);

}  // namespace hermes
