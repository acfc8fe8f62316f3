#include "hermes/io.hpp"

#include <algorithm>
#include <json.hpp>
#include <unordered_map>

#include "hermes/errors.hpp"

namespace hermes {

namespace {

using ojson = nlohmann::ordered_json;

// Applies `fn` to each non-empty line parsed as JSON, reporting the
// 1-based record number on failure.
template <typename Fn>
void for_each_record(std::istream& in, const char* what, Fn&& fn) {
  std::string row;
  int record_no = 0;
  while (std::getline(in, row)) {
    if (row.empty()) continue;
    ++record_no;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(row);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string(what) + " record " +
                       std::to_string(record_no) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string(what) + " record " +
                       std::to_string(record_no) + ": " + e.what());
    }
  }
}

}  // namespace

void write_aligned_corpus(const AlignedCorpus& corpus, const Subtitle& src,
                          const Subtitle& tgt, std::ostream& out) {
  std::unordered_map<int, const Line*> src_by_id, tgt_by_id;
  for (const auto& line : src.lines) src_by_id[line.line_id] = &line;
  for (const auto& line : tgt.lines) tgt_by_id[line.line_id] = &line;
  for (const auto& [src_id, tgt_id] : corpus.pairs) {
    const Line* s = src_by_id.at(src_id);
    const Line* t = tgt_by_id.at(tgt_id);
    ojson record;
    record["src_id"] = src_id;
    record["tgt_id"] = tgt_id;
    record["src_text"] = s->text;
    record["tgt_text"] = t->text;
    record["src_start_cs"] = s->start.total_centiseconds();
    record["tgt_start_cs"] = t->start.total_centiseconds();
    out << record.dump() << '\n';
  }
}

void write_unmatched(const AlignedCorpus& corpus, const Subtitle& src,
                     const Subtitle& tgt, std::ostream& out) {
  std::unordered_map<int, const Line*> src_by_id, tgt_by_id;
  for (const auto& line : src.lines) src_by_id[line.line_id] = &line;
  for (const auto& line : tgt.lines) tgt_by_id[line.line_id] = &line;
  for (int id : corpus.unmatched_source) {
    ojson record;
    record["side"] = "source";
    record["line_id"] = id;
    record["text"] = src_by_id.at(id)->text;
    out << record.dump() << '\n';
  }
  for (int id : corpus.unmatched_target) {
    ojson record;
    record["side"] = "target";
    record["line_id"] = id;
    record["text"] = tgt_by_id.at(id)->text;
    out << record.dump() << '\n';
  }
}

std::map<int, std::string> read_aligned_targets(std::istream& in) {
  std::map<int, std::string> targets;
  for_each_record(in, "aligned corpus", [&](const nlohmann::json& j) {
    targets[j.at("src_id").get<int>()] = j.at("tgt_text").get<std::string>();
  });
  return targets;
}

void write_diarization(const DiarizationResult& result, std::ostream& out) {
  for (const auto& line : result.lines) {
    ojson record;
    record["line_id"] = line.line_id;
    record["speaker"] = line.speaker_id;
    record["confidence"] = line.confidence;
    record["origin"] = to_string(line.origin);
    out << record.dump() << '\n';
  }
}

std::vector<std::pair<int, int>> read_predicted_labels(std::istream& in) {
  std::vector<std::pair<int, int>> labels;
  for_each_record(in, "diarization", [&](const nlohmann::json& j) {
    labels.emplace_back(j.at("line_id").get<int>(), j.at("speaker").get<int>());
  });
  return labels;
}

std::vector<std::pair<int, std::string>> read_reference_labels(std::istream& in) {
  std::vector<std::pair<int, std::string>> labels;
  for_each_record(in, "reference labels", [&](const nlohmann::json& j) {
    const auto& speaker = j.at("speaker");
    labels.emplace_back(j.at("line_id").get<int>(),
                        speaker.is_string()
                            ? speaker.get<std::string>()
                            : speaker.dump());
  });
  return labels;
}

void write_raw_candidates(const std::vector<TermCandidate>& raw,
                          std::ostream& out) {
  for (const auto& c : raw) {
    ojson record;
    record["surface"] = c.surface;
    record["type"] = c.term_type;
    record["translation"] = c.translation;
    record["group_id"] = c.group_id;
    out << record.dump() << '\n';
  }
}

std::vector<TermCandidate> read_raw_candidates(std::istream& in) {
  std::vector<TermCandidate> raw;
  for_each_record(in, "raw candidates", [&](const nlohmann::json& j) {
    raw.push_back({j.at("surface").get<std::string>(),
                   j.at("type").get<std::string>(),
                   j.at("translation").get<std::string>(),
                   j.at("group_id").get<int>()});
  });
  return raw;
}

void write_term_table(const TermTable& table, std::ostream& out) {
  for (const auto& [surface, record] : table.records) {
    ojson j;
    j["surface"] = surface;
    j["type"] = record.term_type;
    j["translation"] = record.translation;
    j["support"] = record.support;
    out << j.dump() << '\n';
  }
}

TermTable read_term_table(std::istream& in) {
  TermTable table;
  for_each_record(in, "term table", [&](const nlohmann::json& j) {
    table.records[j.at("surface").get<std::string>()] = {
        j.at("type").get<std::string>(),
        j.at("translation").get<std::string>(), j.at("support").get<int>()};
  });
  return table;
}

void write_term_hits(const std::vector<TermHit>& hits, std::ostream& out) {
  for (const auto& hit : hits) {
    ojson record;
    record["line_id"] = hit.line_id;
    record["begin"] = hit.byte_begin;
    record["end"] = hit.byte_end;
    record["surface"] = hit.surface;
    record["type"] = hit.term_type;
    record["translation"] = hit.translation;
    out << record.dump() << '\n';
  }
}

std::vector<BilingualGroup> read_bilingual_groups(std::istream& in) {
  std::vector<BilingualGroup> groups;
  for_each_record(in, "bilingual groups", [&](const nlohmann::json& j) {
    BilingualGroup g;
    g.group_id = j.at("group_id").get<int>();
    g.source_lines = j.at("source_lines").get<std::vector<std::string>>();
    g.target_lines = j.at("target_lines").get<std::vector<std::string>>();
    groups.push_back(std::move(g));
  });
  return groups;
}

void write_bilingual_groups(const std::vector<BilingualGroup>& groups,
                            std::ostream& out) {
  for (const auto& g : groups) {
    ojson record;
    record["group_id"] = g.group_id;
    record["source_lines"] = g.source_lines;
    record["target_lines"] = g.target_lines;
    out << record.dump() << '\n';
  }
}

std::vector<TermTuple> read_term_dictionary(std::istream& in) {
  std::vector<TermTuple> dict;
  for_each_record(in, "term dictionary", [&](const nlohmann::json& j) {
    dict.push_back({j.at("surface").get<std::string>(),
                    j.at("type").get<std::string>(),
                    j.at("translation").get<std::string>()});
  });
  return dict;
}

std::map<int, SpeakerDescriptor> read_descriptors(std::istream& in) {
  std::map<int, SpeakerDescriptor> descriptors;
  for_each_record(in, "descriptors", [&](const nlohmann::json& j) {
    descriptors[j.at("speaker").get<int>()] = {
        j.value("age", "unknown"), j.value("gender", "unknown")};
  });
  return descriptors;
}

std::vector<PronounAnnotation> read_pronoun_annotations(std::istream& in) {
  std::vector<PronounAnnotation> annotations;
  for_each_record(in, "annotations", [&](const nlohmann::json& j) {
    annotations.push_back(
        {j.at("line_id").get<int>(), j.at("pronoun").get<std::string>(),
         j.at("acceptable").get<std::vector<std::string>>()});
  });
  return annotations;
}

std::map<int, std::string> read_line_outputs(std::istream& in) {
  std::map<int, std::string> outputs;
  for_each_record(in, "outputs", [&](const nlohmann::json& j) {
    outputs[j.at("line_id").get<int>()] = j.at("text").get<std::string>();
  });
  return outputs;
}

std::vector<SegmentScores> read_segment_scores(std::istream& in) {
  static const std::vector<std::string> kKnown = {"accuracy", "naturalness",
                                                  "vividness"};
  std::vector<SegmentScores> scores;
  for_each_record(in, "segment scores", [&](const nlohmann::json& j) {
    SegmentScores s;
    s.segment_id = j.at("segment_id").get<std::string>();
    for (const auto& [key, value] : j.items()) {
      if (key == "segment_id") continue;
      if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
        throw ValidationError("segment scores: unknown dimension '" + key +
                              "'");
      }
      s.dimensions[key] = value.get<double>();
    }
    scores.push_back(std::move(s));
  });
  return scores;
}

std::vector<PairwiseOutcome> read_pairwise_outcomes(std::istream& in) {
  std::vector<PairwiseOutcome> outcomes;
  for_each_record(in, "pairwise outcomes", [&](const nlohmann::json& j) {
    PairwiseOutcome o;
    o.item_id = j.at("item_id").get<std::string>();
    o.dimension = j.at("dimension").get<std::string>();
    const std::string result = j.at("result").get<std::string>();
    if (result == "win") {
      o.result = PairResult::win;
    } else if (result == "tie") {
      o.result = PairResult::tie;
    } else if (result == "loss") {
      o.result = PairResult::loss;
    } else {
      throw ValidationError("pairwise outcome: unknown result '" + result +
                            "'");
    }
    outcomes.push_back(std::move(o));
  });
  return outcomes;
}

void write_segment_samples(const std::vector<SegmentSample>& samples,
                           std::ostream& out) {
  for (const auto& sample : samples) {
    ojson record;
    record["prompt_id"] = sample.prompt_id;
    auto& sets = record["sets"] = ojson::array();
    for (const auto& set : sample.sets) {
      ojson s;
      s["line_index"] = set.line_index;
      s["candidates"] = set.candidates;
      s["scores"] = set.scores;
      s["has_reference"] = set.has_reference;
      s["chosen"] = set.chosen;
      s["rejected"] = set.rejected;
      sets.push_back(std::move(s));
    }
    record["prefix_chain"] = sample.prefix_chain;
    out << record.dump() << '\n';
  }
}

std::vector<SegmentSample> read_segment_samples(std::istream& in) {
  std::vector<SegmentSample> samples;
  for_each_record(in, "segment samples", [&](const nlohmann::json& j) {
    SegmentSample sample;
    sample.prompt_id = j.at("prompt_id").get<std::string>();
    for (const auto& s : j.at("sets")) {
      CandidateSet set;
      set.line_index = s.at("line_index").get<int>();
      set.candidates = s.at("candidates").get<std::vector<std::string>>();
      set.scores = s.at("scores").get<std::vector<int>>();
      set.has_reference = s.at("has_reference").get<bool>();
      set.chosen = s.at("chosen").get<int>();
      set.rejected = s.at("rejected").get<int>();
      sample.sets.push_back(std::move(set));
    }
    sample.prefix_chain = j.at("prefix_chain").get<std::vector<std::string>>();
    samples.push_back(std::move(sample));
  });
  return samples;
}

std::vector<LossCheckRecord> read_loss_inputs(std::istream& in) {
  std::vector<LossCheckRecord> records;
  for_each_record(in, "loss inputs", [&](const nlohmann::json& j) {
    LossCheckRecord r;
    r.input.beta = j.at("beta").get<double>();
    r.input.policy_chosen = j.at("policy_chosen").get<double>();
    r.input.policy_rejected = j.at("policy_rejected").get<double>();
    r.input.ref_chosen = j.at("ref_chosen").get<double>();
    r.input.ref_rejected = j.at("ref_rejected").get<double>();
    r.weight = j.at("weight").get<double>();
    records.push_back(r);
  });
  return records;
}

}  // namespace hermes
