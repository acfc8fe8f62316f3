#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hermes/diarization.hpp"
#include "hermes/diarization_metrics.hpp"
#include "hermes/evaluation.hpp"
#include "hermes/sapo.hpp"
#include "hermes/subtitle.hpp"
#include "hermes/terminology.hpp"

// Line-delimited JSON readers and writers for every file format the
// pipeline exchanges. Writers keep a stable field order so identical
// inputs serialize to identical bytes.

namespace hermes {

// {"src_id","tgt_id","src_text","tgt_text","src_start_cs","tgt_start_cs"}
void write_aligned_corpus(const AlignedCorpus& corpus, const Subtitle& src,
                          const Subtitle& tgt, std::ostream& out);
// {"side":"source"|"target","line_id":...,"text":...}
void write_unmatched(const AlignedCorpus& corpus, const Subtitle& src,
                     const Subtitle& tgt, std::ostream& out);
// Reads pairs back as target text keyed by source line_id.
std::map<int, std::string> read_aligned_targets(std::istream& in);

// {"line_id","speaker","confidence","origin"}
void write_diarization(const DiarizationResult& result, std::ostream& out);
std::vector<std::pair<int, int>> read_predicted_labels(std::istream& in);

// {"line_id","speaker"}
std::vector<std::pair<int, std::string>> read_reference_labels(std::istream& in);

// {"surface","type","translation","group_id"}
void write_raw_candidates(const std::vector<TermCandidate>& raw, std::ostream& out);
std::vector<TermCandidate> read_raw_candidates(std::istream& in);

// {"surface","type","translation","support"}
void write_term_table(const TermTable& table, std::ostream& out);
TermTable read_term_table(std::istream& in);

// {"line_id","begin","end","surface","type","translation"}
void write_term_hits(const std::vector<TermHit>& hits, std::ostream& out);

// {"group_id","source_lines":[...],"target_lines":[...]}
std::vector<BilingualGroup> read_bilingual_groups(std::istream& in);
void write_bilingual_groups(const std::vector<BilingualGroup>& groups,
                            std::ostream& out);

// {"surface","type","translation"} - the planted dictionary of the mock
// term extractor.
std::vector<TermTuple> read_term_dictionary(std::istream& in);

// {"speaker","age","gender"} keyed by diarization speaker id.
std::map<int, SpeakerDescriptor> read_descriptors(std::istream& in);

// {"line_id","pronoun","acceptable":[...]}
std::vector<PronounAnnotation> read_pronoun_annotations(std::istream& in);

// {"line_id","text"} - per-line model outputs to score.
std::map<int, std::string> read_line_outputs(std::istream& in);

// {"segment_id","accuracy","naturalness","vividness"} (dimensions optional
// but must come from the known set)
std::vector<SegmentScores> read_segment_scores(std::istream& in);

// {"item_id","dimension","result":"win"|"tie"|"loss"}
std::vector<PairwiseOutcome> read_pairwise_outcomes(std::istream& in);

// Full segment samples, one prompt per record.
void write_segment_samples(const std::vector<SegmentSample>& samples,
                           std::ostream& out);
std::vector<SegmentSample> read_segment_samples(std::istream& in);

// {"beta","policy_chosen","policy_rejected","ref_chosen","ref_rejected","weight"}
struct LossCheckRecord {
  PoLossInput input;
  double weight = 0.0;
};
std::vector<LossCheckRecord> read_loss_inputs(std::istream& in);

}  // namespace hermes
