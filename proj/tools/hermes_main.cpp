// hermes - interlingual subtitling pipeline tool.
//
// Subcommands cover the full offline pipeline: bitext alignment, speaker
// diarization over precomputed embeddings, terminology collection and
// retrieval, SFT/preference dataset emission, a reference loss calculator,
// and the evaluation metrics. Every command reads declared inputs, writes
// declared outputs plus a config manifest, and prints a one-line JSON
// summary to stdout.
//
// Exit codes: 0 success, 1 validation error, 2 runtime/transport error,
// 64 unknown command.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "hermes/config.hpp"
#include "hermes/diarization.hpp"
#include "hermes/diarization_metrics.hpp"
#include "hermes/errors.hpp"
#include "hermes/evaluation.hpp"
#include "hermes/io.hpp"
#include "hermes/model_clients.hpp"
#include "hermes/parallel.hpp"
#include "hermes/pipeline.hpp"
#include "hermes/sapo.hpp"
#include "hermes/subtitle_io.hpp"
#include "hermes/terminology.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace hermes;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool mock = false;
  std::optional<double> epsilon, eta, max_start_delta, holdout_fraction;
  std::optional<int> n_max, k, min_support, k_max;
  std::string noise_regex;
  bool noise_regex_set = false;
};

// Precedence: flag > HERMES_SEED > config file > defaults.
PipelineConfig effective_config(const GlobalOptions& opts) {
  PipelineConfig config = opts.config_path.empty()
                              ? PipelineConfig{}
                              : PipelineConfig::load(opts.config_path);
  if (const char* env_seed = std::getenv("HERMES_SEED")) {
    config.seed = std::strtoull(env_seed, nullptr, 10);
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.jobs) config.jobs = *opts.jobs;
  if (opts.mock) config.mock = true;
  if (opts.epsilon) config.thresholds.epsilon = *opts.epsilon;
  if (opts.eta) config.thresholds.eta = *opts.eta;
  if (opts.max_start_delta) config.thresholds.max_start_delta = *opts.max_start_delta;
  if (opts.holdout_fraction) config.thresholds.holdout_fraction = *opts.holdout_fraction;
  if (opts.n_max) config.thresholds.n_max = *opts.n_max;
  if (opts.k) config.thresholds.k = *opts.k;
  if (opts.min_support) config.thresholds.min_support = *opts.min_support;
  if (opts.k_max) config.thresholds.k_max = *opts.k_max;
  if (opts.noise_regex_set) config.noise_regex = opts.noise_regex;
  config.validate();
  return config;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

Subtitle load_subtitle(const std::string& path, const std::string& language) {
  const std::string text = slurp(path);
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".ass" || ext == ".ssa") return parse_ass(text, language);
  if (ext == ".srt") return parse_srt(text, language);
  throw ValidationError("unsupported subtitle format '" + ext + "' for " + path);
}

void write_text_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <typename Fn>
void write_stream_file(const fs::path& path, Fn&& fn) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_manifest(const fs::path& out_dir, const PipelineConfig& config) {
  write_text_file(out_dir / "config_manifest.json", config.to_json());
}

void print_summary(const ojson& summary) {
  std::cout << summary.dump() << std::endl;
}

double round1(double v) { return std::floor(v * 10.0 + 0.5) / 10.0; }

std::vector<LineFeatures> load_features(const std::string& jsonl_path,
                                        const std::vector<std::string>& manifests,
                                        const std::vector<std::string>& data_files) {
  if (manifests.size() != data_files.size()) {
    throw ValidationError("--manifest and --data must be paired");
  }
  std::map<int, LineFeatures> features;
  if (!jsonl_path.empty()) {
    auto in = open_input(jsonl_path);
    for (auto& f : load_embeddings_jsonl(in)) {
      features[f.line_id] = std::move(f);
    }
  }
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    load_embeddings_binary(manifests[i], data_files[i], features);
  }
  if (features.empty()) {
    throw ValidationError("no embeddings given (need --embeddings or "
                          "--manifest/--data)");
  }
  return features_map_to_vector(std::move(features));
}

// ---------------------------------------------------------------- align --

struct AlignArgs {
  std::string src, tgt, src_lang, tgt_lang, out_dir;
};

int run_align(const GlobalOptions& gopts, const AlignArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  Subtitle src = load_subtitle(args.src, args.src_lang);
  Subtitle tgt = load_subtitle(args.tgt, args.tgt_lang);
  if (!config.noise_regex.empty()) {
    src = drop_noise_lines(src, config.noise_regex);
    tgt = drop_noise_lines(tgt, config.noise_regex);
  }
  const AlignedCorpus corpus =
      align_bitext(src, tgt, config.thresholds.max_start_delta);

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "aligned.jsonl",
                    [&](std::ostream& out) { write_aligned_corpus(corpus, src, tgt, out); });
  write_stream_file(out_dir / "unmatched.jsonl",
                    [&](std::ostream& out) { write_unmatched(corpus, src, tgt, out); });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "align";
  summary["pairs"] = corpus.pairs.size();
  summary["unmatched_source"] = corpus.unmatched_source.size();
  summary["unmatched_target"] = corpus.unmatched_target.size();
  summary["output"] = (out_dir / "aligned.jsonl").string();
  print_summary(summary);
  return 0;
}

// -------------------------------------------------------------- diarize --

struct DiarizeArgs {
  std::string embeddings;
  std::vector<std::string> manifests, data_files;
  std::string out_dir;
};

int run_diarize(const GlobalOptions& gopts, const DiarizeArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto features = load_features(args.embeddings, args.manifests, args.data_files);

  DiarizeParams params;
  params.epsilon = config.thresholds.epsilon;
  params.eta = config.thresholds.eta;
  params.k_max = config.thresholds.k_max;
  params.seed = config.seed;
  const DiarizationResult result = diarize(std::move(features), params);

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "diarization.jsonl",
                    [&](std::ostream& out) { write_diarization(result, out); });
  write_stream_file(out_dir / "registry.jsonl", [&](std::ostream& out) {
    for (const auto& entry : result.registry.entries) {
      ojson record;
      record["speaker_id"] = entry.speaker_id;
      record["origin"] = to_string(entry.origin);
      record["member_line_ids"] = entry.member_line_ids;
      record["prototype"] = std::vector<double>(
          entry.prototype.data(), entry.prototype.data() + entry.prototype.size());
      out << record.dump() << '\n';
    }
  });
  write_stream_file(out_dir / "decisions.jsonl", [&](std::ostream& out) {
    for (const auto& d : result.decisions) {
      ojson record;
      record["group_id"] = d.group_id;
      record["sigma_mean"] = d.sigma_mean;
      record["action"] = to_string(d.action);
      record["speaker_id"] = d.speaker_id;
      record["merge_similarity"] = d.merge_similarity;
      out << record.dump() << '\n';
    }
  });
  write_manifest(out_dir, config);

  int supplemented = 0;
  for (const auto& e : result.registry.entries) {
    supplemented += e.origin == SpeakerOrigin::supplemented;
  }
  ojson summary;
  summary["command"] = "diarize";
  summary["lines"] = result.lines.size();
  summary["speakers"] = result.registry.entries.size();
  summary["supplemented"] = supplemented;
  summary["output"] = (out_dir / "diarization.jsonl").string();
  print_summary(summary);
  return 0;
}

// -------------------------------------------------------- diarize-score --

struct ScoreArgs {
  std::string pred, ref, subtitle, lang, out_dir;
};

int run_diarize_score(const GlobalOptions& gopts, const ScoreArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto pred_in = open_input(args.pred);
  auto ref_in = open_input(args.ref);
  const auto pred = read_predicted_labels(pred_in);
  const auto ref = read_reference_labels(ref_in);
  const Subtitle lines = load_subtitle(args.subtitle, args.lang);
  const DiarizationMetrics metrics = score_diarization(pred, ref, lines);

  ojson summary;
  summary["command"] = "diarize-score";
  summary["der"] = metrics.der;
  summary["jer"] = metrics.jer;
  summary["text_der"] = metrics.text_der;
  if (!args.out_dir.empty()) {
    const fs::path out_dir(args.out_dir);
    write_text_file(out_dir / "diarization_metrics.json", summary.dump(2) + "\n");
    write_manifest(out_dir, config);
  }
  print_summary(summary);
  return 0;
}

// --------------------------------------------------------- sweep-epsilon --

struct SweepArgs {
  std::string embeddings;
  std::vector<std::string> manifests, data_files;
  std::string ref_turns, grid = "-0.95:0.95:0.05", out_dir;
};

int run_sweep(const GlobalOptions& gopts, const SweepArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto features = load_features(args.embeddings, args.manifests, args.data_files);

  std::vector<bool> turns;
  {
    auto in = open_input(args.ref_turns);
    std::string row;
    while (std::getline(in, row)) {
      if (row.empty()) continue;
      const auto j = nlohmann::json::parse(row);
      turns.push_back(j.at("turn").get<bool>());
    }
  }

  std::vector<double> grid;
  {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(args.grid.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
        step <= 0 || hi < lo) {
      throw ValidationError("--grid must be start:stop:step with step > 0");
    }
    for (double e = lo; e <= hi + 1e-12; e += step) grid.push_back(e);
  }

  const std::vector<double> accuracy = sweep_epsilon(features, turns, grid);

  std::size_t best = 0;
  for (std::size_t i = 1; i < accuracy.size(); ++i) {
    if (accuracy[i] > accuracy[best]) best = i;
  }

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "sweep.jsonl", [&](std::ostream& out) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      ojson record;
      record["epsilon"] = grid[i];
      record["accuracy"] = accuracy[i];
      out << record.dump() << '\n';
    }
  });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "sweep-epsilon";
  summary["points"] = grid.size();
  summary["best_epsilon"] = grid[best];
  summary["best_accuracy"] = accuracy[best];
  print_summary(summary);
  return 0;
}

// ---------------------------------------------------------------- terms --

struct TermsCollectArgs {
  std::string groups, mock_terms, out_dir;
  std::string subtitle, lang, diarization, aligned;
};

// Bilingual groups either come prebuilt (--groups) or are segmented here
// from the subtitle at diarization speaker turns, pairing each line with
// its aligned target; lines without a target are left out.
std::vector<BilingualGroup> collect_input_groups(const TermsCollectArgs& args,
                                                 const PipelineConfig& config) {
  if (!args.groups.empty()) {
    auto in = open_input(args.groups);
    return read_bilingual_groups(in);
  }
  if (args.subtitle.empty() || args.diarization.empty() || args.aligned.empty()) {
    throw ValidationError("terms collect: pass --groups, or --subtitle with "
                          "--diarization and --aligned");
  }
  const Subtitle src = load_subtitle(args.subtitle, args.lang);
  auto pred_in = open_input(args.diarization);
  const auto pred = read_predicted_labels(pred_in);
  const std::map<int, int> speaker_by_line(pred.begin(), pred.end());
  auto aligned_in = open_input(args.aligned);
  const auto targets = read_aligned_targets(aligned_in);

  std::vector<std::string> labels;
  for (const auto& line : src.lines) {
    auto it = speaker_by_line.find(line.line_id);
    if (it == speaker_by_line.end()) {
      throw ValidationError("no speaker label for line " +
                            std::to_string(line.line_id));
    }
    labels.push_back(std::to_string(it->second));
  }

  std::map<int, const Line*> line_by_id;
  for (const auto& line : src.lines) line_by_id[line.line_id] = &line;

  std::vector<BilingualGroup> groups;
  for (const auto& prompt : segment_prompts(src, labels, config.thresholds.n_max)) {
    BilingualGroup group;
    group.group_id = prompt.group_id;
    for (int line_id : prompt.line_ids) {
      auto tgt = targets.find(line_id);
      if (tgt == targets.end()) continue;
      group.source_lines.push_back(line_by_id.at(line_id)->text);
      group.target_lines.push_back(tgt->second);
    }
    if (!group.source_lines.empty()) groups.push_back(std::move(group));
  }
  return groups;
}

std::unique_ptr<TermExtractorClient> make_extractor(const PipelineConfig& config,
                                                    const std::string& mock_terms) {
  if (config.mock) {
    std::vector<TermTuple> dictionary;
    if (!mock_terms.empty()) {
      auto in = open_input(mock_terms);
      dictionary = read_term_dictionary(in);
    }
    return std::make_unique<MockTermExtractor>(std::move(dictionary));
  }
  if (config.extractor.base_url.empty()) {
    throw ValidationError("config: endpoints.extractor.base_url required "
                          "(or pass --mock)");
  }
  return std::make_unique<HttpModelClient>(config.extractor, config.retry);
}

int run_terms_collect(const GlobalOptions& gopts, const TermsCollectArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  const auto groups = collect_input_groups(args, config);
  auto extractor = make_extractor(config, args.mock_terms);
  const CollectReport report =
      collect_candidates(groups, *extractor, config.jobs);

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "t_raw.jsonl", [&](std::ostream& out) {
    write_raw_candidates(report.candidates, out);
  });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "terms-collect";
  summary["groups"] = groups.size();
  summary["candidates"] = report.candidates.size();
  summary["dropped_surfaces"] = report.dropped_surfaces;
  summary["skipped_groups"] = report.skipped_groups.size();
  print_summary(summary);
  return 0;
}

struct TermsVoteArgs {
  std::string raw, out_dir;
};

int run_terms_vote(const GlobalOptions& gopts, const TermsVoteArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto raw_in = open_input(args.raw);
  const auto raw = read_raw_candidates(raw_in);
  const TermTable table = filter_and_vote(raw, config.thresholds.min_support);

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "t_filter.jsonl",
                    [&](std::ostream& out) { write_term_table(table, out); });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "terms-vote";
  summary["raw_candidates"] = raw.size();
  summary["surfaces"] = table.records.size();
  summary["min_support"] = config.thresholds.min_support;
  print_summary(summary);
  return 0;
}

struct TermsRetrieveArgs {
  std::string table, subtitle, lang, out_dir;
};

int run_terms_retrieve(const GlobalOptions& gopts, const TermsRetrieveArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto table_in = open_input(args.table);
  const TermTable table = read_term_table(table_in);
  const TermTrie trie(table);
  const Subtitle src = load_subtitle(args.subtitle, args.lang);

  std::vector<TermHit> hits;
  for (const auto& line : src.lines) {
    for (auto& hit : trie.retrieve(line.text, line.line_id)) {
      hits.push_back(std::move(hit));
    }
  }

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "term_hits.jsonl",
                    [&](std::ostream& out) { write_term_hits(hits, out); });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "terms-retrieve";
  summary["lines"] = src.size();
  summary["hits"] = hits.size();
  print_summary(summary);
  return 0;
}

struct TermsEmitArgs {
  std::string table, subtitle, lang, diarization, preamble, preamble_file, out_dir;
};

int run_terms_emit(const GlobalOptions& gopts, const TermsEmitArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto table_in = open_input(args.table);
  const TermTable table = read_term_table(table_in);
  const TermTrie trie(table);
  const Subtitle src = load_subtitle(args.subtitle, args.lang);

  auto pred_in = open_input(args.diarization);
  const auto pred = read_predicted_labels(pred_in);
  std::vector<std::string> labels;
  {
    std::map<int, int> by_line(pred.begin(), pred.end());
    for (const auto& line : src.lines) {
      auto it = by_line.find(line.line_id);
      if (it == by_line.end()) {
        throw ValidationError("no speaker label for line " +
                              std::to_string(line.line_id));
      }
      labels.push_back(std::to_string(it->second));
    }
  }
  const auto groups = segment_prompts(src, labels, config.thresholds.n_max);

  const std::string preamble =
      args.preamble_file.empty() ? args.preamble : slurp(args.preamble_file);
  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "ti_dataset.jsonl", [&](std::ostream& out) {
    emit_ti_dataset(src, groups, trie, preamble, out);
  });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "terms-emit";
  summary["groups"] = groups.size();
  summary["output"] = (out_dir / "ti_dataset.jsonl").string();
  print_summary(summary);
  return 0;
}

// ------------------------------------------------------- prompt building --

struct ContextArgs {
  std::string subtitle, lang, diarization, aligned, table, descriptors, preamble,
      preamble_file;
};

ContextBundle load_context_bundle(const ContextArgs& args,
                                  const PipelineConfig& config) {
  const Subtitle src = load_subtitle(args.subtitle, args.lang);

  auto pred_in = open_input(args.diarization);
  const auto pred = read_predicted_labels(pred_in);
  const std::map<int, int> speaker_by_line(pred.begin(), pred.end());

  std::map<int, std::string> targets;
  if (!args.aligned.empty()) {
    auto in = open_input(args.aligned);
    targets = read_aligned_targets(in);
  }

  std::optional<TermTrie> trie;
  if (!args.table.empty()) {
    auto in = open_input(args.table);
    trie.emplace(read_term_table(in));
  }

  std::map<int, SpeakerDescriptor> descriptors;
  if (!args.descriptors.empty()) {
    auto in = open_input(args.descriptors);
    descriptors = read_descriptors(in);
  }

  const std::string preamble =
      args.preamble_file.empty() ? args.preamble : slurp(args.preamble_file);
  return build_prompt_contexts(src, speaker_by_line,
                               trie ? &*trie : nullptr, targets, descriptors,
                               preamble, config.thresholds.n_max);
}

// ------------------------------------------------------------- sft-emit --

struct SftEmitArgs {
  ContextArgs context;
  std::string out_dir;
};

int run_sft_emit(const GlobalOptions& gopts, const SftEmitArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  const ContextBundle bundle = load_context_bundle(args.context, config);

  SftEmitStats stats;
  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "sft.jsonl", [&](std::ostream& out) {
    stats = emit_sft_dataset(bundle.contexts, bundle.targets, out);
  });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "sft-emit";
  summary["prompts"] = bundle.contexts.size();
  summary["emitted"] = stats.emitted;
  summary["skipped"] = stats.skipped;
  summary["template_version"] = kPromptTemplateVersion;
  print_summary(summary);
  return 0;
}

// ----------------------------------------------------------------- sapo --

struct SapoSampleArgs {
  ContextArgs context;
  std::string out_dir;
};

int run_sapo_sample(const GlobalOptions& gopts, const SapoSampleArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  const ContextBundle bundle = load_context_bundle(args.context, config);

  std::vector<std::string> prompt_ids;
  for (const auto& context : bundle.contexts) {
    prompt_ids.push_back(context.prompt_id);
  }
  const auto [sft_ids, sapo_ids] = split_holdout(
      prompt_ids, config.thresholds.holdout_fraction, config.seed);

  std::unique_ptr<TranslatorClient> translator;
  std::unique_ptr<JudgeClient> judge;
  if (config.mock) {
    translator = std::make_unique<MockTranslator>(config.seed);
    judge = std::make_unique<MockJudge>();
  } else {
    if (config.translator.base_url.empty() || config.judge.base_url.empty()) {
      throw ValidationError("config: endpoints.translator and endpoints.judge "
                            "required (or pass --mock)");
    }
    translator = std::make_unique<HttpModelClient>(config.translator, config.retry);
    judge = std::make_unique<HttpModelClient>(config.judge, config.retry);
  }

  // Index the holdout prompts; sampling runs only on those.
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < bundle.contexts.size(); ++i) {
    if (std::find(sapo_ids.begin(), sapo_ids.end(),
                  bundle.contexts[i].prompt_id) != sapo_ids.end()) {
      selected.push_back(i);
    }
  }

  SamplingParams params = config.sampling;
  if (!params.seed) params.seed = static_cast<std::int64_t>(config.seed);

  std::vector<SegmentSample> samples(selected.size());
  parallel_for(config.jobs, selected.size(), [&](std::size_t s) {
    const std::size_t i = selected[s];
    std::vector<std::string> references;
    for (const auto& target : bundle.targets[i]) {
      references.push_back(target.value_or(""));
    }
    samples[s] = sample_segments(bundle.contexts[i], *translator, *judge,
                                 config.thresholds.k, params, references);
  });

  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "samples.jsonl",
                    [&](std::ostream& out) { write_segment_samples(samples, out); });
  write_text_file(out_dir / "holdout.json",
                  ojson{{"sft_ids", sft_ids}, {"sapo_ids", sapo_ids}}.dump(2) + "\n");
  write_manifest(out_dir, config);

  std::size_t total_lines = 0;
  for (const auto& sample : samples) total_lines += sample.sets.size();

  ojson summary;
  summary["command"] = "sapo-sample";
  summary["prompts_total"] = bundle.contexts.size();
  summary["prompts_sampled"] = samples.size();
  summary["lines"] = total_lines;
  summary["k"] = config.thresholds.k;
  print_summary(summary);
  return 0;
}

struct SapoWeightsArgs {
  std::string samples, out_dir;
};

int run_sapo_weights(const GlobalOptions& gopts, const SapoWeightsArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto in = open_input(args.samples);
  const auto samples = read_segment_samples(in);

  int gated_on = 0, lines = 0;
  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "weights.jsonl", [&](std::ostream& out) {
    for (const auto& sample : samples) {
      for (const auto& w : adaptive_weights(sample)) {
        ojson record;
        record["prompt_id"] = sample.prompt_id;
        record["line_index"] = w.line_index + 1;
        record["gate"] = w.gate;
        record["importance"] = w.importance;
        record["weight"] = w.weight;
        out << record.dump() << '\n';
        gated_on += w.gate;
        ++lines;
      }
    }
  });
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "sapo-weights";
  summary["lines"] = lines;
  summary["gated_on"] = gated_on;
  print_summary(summary);
  return 0;
}

struct SapoEmitArgs {
  ContextArgs context;
  std::string samples, out_dir;
};

int run_sapo_emit(const GlobalOptions& gopts, const SapoEmitArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  const ContextBundle bundle = load_context_bundle(args.context, config);
  auto in = open_input(args.samples);
  const auto samples = read_segment_samples(in);

  // Pick out the sampled prompts' contexts by id, in sample order.
  std::map<std::string, const PromptContext*> by_id;
  for (const auto& context : bundle.contexts) {
    by_id[context.prompt_id] = &context;
  }
  std::vector<PromptContext> contexts;
  for (const auto& sample : samples) {
    auto it = by_id.find(sample.prompt_id);
    if (it == by_id.end()) {
      throw ValidationError("samples reference unknown prompt " +
                            sample.prompt_id);
    }
    contexts.push_back(*it->second);
  }

  PreferenceEmitStats stats;
  const fs::path out_dir(args.out_dir);
  write_stream_file(out_dir / "preference.jsonl", [&](std::ostream& out) {
    stats = emit_preference_dataset(contexts, samples, out);
  });
  write_text_file(out_dir / "preference_summary.json",
                  ojson{{"total_lines", stats.total_lines},
                        {"gated_off_size", stats.gated_off_size},
                        {"gated_off_range", stats.gated_off_range},
                        {"emitted", stats.emitted}}
                          .dump(2) +
                      "\n");
  write_manifest(out_dir, config);

  ojson summary;
  summary["command"] = "sapo-emit";
  summary["total_lines"] = stats.total_lines;
  summary["gated_off_size"] = stats.gated_off_size;
  summary["gated_off_range"] = stats.gated_off_range;
  summary["emitted"] = stats.emitted;
  print_summary(summary);
  return 0;
}

// ------------------------------------------------------------ loss-check --

struct LossCheckArgs {
  std::string input, out_dir;
};

int run_loss_check(const GlobalOptions& gopts, const LossCheckArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto in = open_input(args.input);
  const auto records = read_loss_inputs(in);
  if (records.empty()) throw ValidationError("loss-check: no records");

  std::vector<AdaptiveWeight> weights;
  std::vector<double> losses;
  for (const auto& record : records) {
    AdaptiveWeight w;
    w.line_index = static_cast<int>(weights.size());
    w.weight = record.weight;
    w.gate = record.weight > 0 ? 1 : 0;
    w.importance = record.weight;
    weights.push_back(w);
    losses.push_back(dpo_segment_loss(record.input));
  }
  const double total = sapo_loss(weights, losses);

  if (!args.out_dir.empty()) {
    const fs::path out_dir(args.out_dir);
    write_stream_file(out_dir / "loss_report.jsonl", [&](std::ostream& out) {
      for (std::size_t i = 0; i < records.size(); ++i) {
        ojson record;
        record["index"] = i;
        record["l_po"] = losses[i];
        record["weight"] = records[i].weight;
        record["weighted"] = -records[i].weight * losses[i];
        out << record.dump() << '\n';
      }
    });
    write_manifest(out_dir, config);
  }

  ojson summary;
  summary["command"] = "loss-check";
  summary["records"] = records.size();
  summary["sapo_loss"] = total;
  print_summary(summary);
  return 0;
}

// ------------------------------------------------------------------ eval --

struct EvalPaArgs {
  std::string annotations, outputs, subtitle, lang, out_dir;
};

int run_eval_pa(const GlobalOptions& gopts, const EvalPaArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto ann_in = open_input(args.annotations);
  const auto annotations = read_pronoun_annotations(ann_in);
  const Subtitle src = load_subtitle(args.subtitle, args.lang);
  validate_annotations(annotations, src);
  auto out_in = open_input(args.outputs);
  const auto outputs = read_line_outputs(out_in);

  const double pa = round1(pronoun_accuracy(annotations, outputs));

  ojson summary;
  summary["command"] = "eval-pa";
  summary["pa"] = pa;
  summary["annotations"] = annotations.size();
  if (!args.out_dir.empty()) {
    const fs::path out_dir(args.out_dir);
    write_text_file(out_dir / "report.json", ojson{{"pa", pa}}.dump(2) + "\n");
    char table[64];
    std::snprintf(table, sizeof(table), "%-10s %8s\n%-10s %8.1f\n", "metric",
                  "value", "pa", pa);
    write_text_file(out_dir / "report.txt", table);
    write_manifest(out_dir, config);
  }
  print_summary(summary);
  return 0;
}

struct EvalTcArgs {
  std::string table, subtitle, lang, outputs, out_dir;
};

int run_eval_tc(const GlobalOptions& gopts, const EvalTcArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto table_in = open_input(args.table);
  const TermTable table = read_term_table(table_in);
  const TermTrie trie(table);
  const Subtitle src = load_subtitle(args.subtitle, args.lang);
  auto out_in = open_input(args.outputs);
  const auto outputs = read_line_outputs(out_in);

  const std::optional<double> tc = terminology_consistency(trie, src, outputs);

  ojson summary;
  summary["command"] = "eval-tc";
  if (tc) {
    summary["tc"] = round1(*tc);
  } else {
    summary["tc"] = "n/a";
  }
  if (!args.out_dir.empty()) {
    const fs::path out_dir(args.out_dir);
    ojson report;
    if (tc) {
      report["tc"] = round1(*tc);
    } else {
      report["tc"] = "n/a";
    }
    write_text_file(out_dir / "report.json", report.dump(2) + "\n");
    char table[64];
    if (tc) {
      std::snprintf(table, sizeof(table), "%-10s %8s\n%-10s %8.1f\n", "metric",
                    "value", "tc", round1(*tc));
    } else {
      std::snprintf(table, sizeof(table), "%-10s %8s\n%-10s %8s\n", "metric",
                    "value", "tc", "n/a");
    }
    write_text_file(out_dir / "report.txt", table);
    write_manifest(out_dir, config);
  }
  print_summary(summary);
  return 0;
}

struct EvalAggArgs {
  std::vector<std::string> scores;
  std::string out_dir;
};

int run_eval_aggregate(const GlobalOptions& gopts, const EvalAggArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  std::vector<std::vector<SegmentScores>> streams;
  for (const auto& path : args.scores) {
    auto in = open_input(path);
    streams.push_back(read_segment_scores(in));
  }
  const auto means = aggregate_scores(streams);

  ojson dims;
  for (const auto& [dim, mean] : means) dims[dim] = round1(mean);

  ojson summary;
  summary["command"] = "eval-aggregate";
  summary["dims"] = dims;
  summary["evaluators"] = streams.size();
  if (!args.out_dir.empty()) {
    const fs::path out_dir(args.out_dir);
    write_text_file(out_dir / "report.json", ojson{{"dims", dims}}.dump(2) + "\n");
    std::string table = "dimension    value\n";
    for (const auto& [dim, mean] : means) {
      char row[64];
      std::snprintf(row, sizeof(row), "%-12s %5.1f\n", dim.c_str(), round1(mean));
      table += row;
    }
    write_text_file(out_dir / "report.txt", table);
    write_manifest(out_dir, config);
  }
  print_summary(summary);
  return 0;
}

struct EvalWinArgs {
  std::string outcomes, out_dir;
};

int run_eval_winrate(const GlobalOptions& gopts, const EvalWinArgs& args) {
  const PipelineConfig config = effective_config(gopts);
  auto in = open_input(args.outcomes);
  const auto outcomes = read_pairwise_outcomes(in);
  const auto rates = win_rate(outcomes);

  ojson rates_json;
  for (const auto& [dim, rate] : rates) rates_json[dim] = rate.to_string();

  ojson summary;
  summary["command"] = "eval-winrate";
  summary["win_rate"] = rates_json;
  if (!args.out_dir.empty()) {
    const fs::path out_dir(args.out_dir);
    write_text_file(out_dir / "report.json",
                    ojson{{"win_rate", rates_json}}.dump(2) + "\n");
    std::string table = "dimension    win:tie:loss\n";
    for (const auto& [dim, rate] : rates) {
      char row[80];
      std::snprintf(row, sizeof(row), "%-12s %s\n", dim.c_str(),
                    rate.to_string().c_str());
      table += row;
    }
    write_text_file(out_dir / "report.txt", table);
    write_manifest(out_dir, config);
  }
  print_summary(summary);
  return 0;
}

void add_global_options(CLI::App& app, GlobalOptions& gopts) {
  app.add_option("--config", gopts.config_path, "JSON config file");
  app.add_option("--seed", gopts.seed, "Run seed (overrides HERMES_SEED and config)");
  app.add_option("--jobs", gopts.jobs, "Concurrency cap (default 1)");
  app.add_flag("--mock", gopts.mock, "Use in-process deterministic mock clients");
  app.add_option("--epsilon", gopts.epsilon, "Speaker-turn similarity threshold");
  app.add_option("--eta", gopts.eta, "New-speaker score threshold");
  app.add_option("--max-start-delta", gopts.max_start_delta,
                 "Alignment start-time tolerance, seconds");
  app.add_option("--n-max", gopts.n_max, "Lines per prompt");
  app.add_option("--k", gopts.k, "Sampled candidates per line");
  app.add_option("--holdout-fraction", gopts.holdout_fraction,
                 "Preference-holdout fraction");
  app.add_option("--min-support", gopts.min_support, "Term vote support cutoff");
  app.add_option("--k-max", gopts.k_max, "Cluster-count upper bound");
  app.add_option("--noise-regex", gopts.noise_regex,
                 "Drop lines matching this regex before alignment")
      ->each([&](const std::string&) { gopts.noise_regex_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hermes - interlingual subtitling pipeline"};
  app.require_subcommand(1);

  GlobalOptions gopts;
  add_global_options(app, gopts);

  AlignArgs align_args;
  auto* align_cmd = app.add_subcommand("align", "Align a bilingual subtitle pair");
  align_cmd->add_option("--src", align_args.src, "Source subtitle (.ass/.srt)")->required();
  align_cmd->add_option("--tgt", align_args.tgt, "Target subtitle (.ass/.srt)")->required();
  align_cmd->add_option("--src-lang", align_args.src_lang, "Source language tag");
  align_cmd->add_option("--tgt-lang", align_args.tgt_lang, "Target language tag");
  align_cmd->add_option("--out-dir", align_args.out_dir, "Output directory")->required();

  DiarizeArgs diarize_args;
  auto* diarize_cmd = app.add_subcommand("diarize", "Diarize per-line embeddings");
  diarize_cmd->add_option("--embeddings", diarize_args.embeddings,
                          "Embedding records (JSONL)");
  diarize_cmd->add_option("--manifest", diarize_args.manifests,
                          "Binary embedding manifest (repeatable)");
  diarize_cmd->add_option("--data", diarize_args.data_files,
                          "Binary embedding data file (repeatable)");
  diarize_cmd->add_option("--out-dir", diarize_args.out_dir, "Output directory")->required();

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("diarize-score", "Score a diarization");
  score_cmd->add_option("--pred", score_args.pred, "Predicted labels (JSONL)")->required();
  score_cmd->add_option("--ref", score_args.ref, "Reference labels (JSONL)")->required();
  score_cmd->add_option("--subtitle", score_args.subtitle, "Subtitle file")->required();
  score_cmd->add_option("--lang", score_args.lang, "Language tag");
  score_cmd->add_option("--out-dir", score_args.out_dir, "Output directory");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep-epsilon", "Turn-threshold sweep");
  sweep_cmd->add_option("--embeddings", sweep_args.embeddings, "Embedding records (JSONL)");
  sweep_cmd->add_option("--manifest", sweep_args.manifests, "Binary manifest (repeatable)");
  sweep_cmd->add_option("--data", sweep_args.data_files, "Binary data (repeatable)");
  sweep_cmd->add_option("--ref-turns", sweep_args.ref_turns,
                        "Reference turn booleans (JSONL, one per adjacent pair)")->required();
  sweep_cmd->add_option("--grid", sweep_args.grid, "Grid as start:stop:step");
  sweep_cmd->add_option("--out-dir", sweep_args.out_dir, "Output directory")->required();

  auto* terms_cmd = app.add_subcommand("terms", "Terminology pipeline");
  terms_cmd->require_subcommand(1);

  TermsCollectArgs terms_collect_args;
  auto* terms_collect_cmd = terms_cmd->add_subcommand("collect", "Collect raw candidates");
  terms_collect_cmd->add_option("--groups", terms_collect_args.groups,
                                "Prebuilt bilingual groups (JSONL)");
  terms_collect_cmd->add_option("--subtitle", terms_collect_args.subtitle,
                                "Source subtitle (with --diarization/--aligned)");
  terms_collect_cmd->add_option("--lang", terms_collect_args.lang, "Language tag");
  terms_collect_cmd->add_option("--diarization", terms_collect_args.diarization,
                                "Diarization labels (JSONL)");
  terms_collect_cmd->add_option("--aligned", terms_collect_args.aligned,
                                "Aligned corpus (JSONL)");
  terms_collect_cmd->add_option("--mock-terms", terms_collect_args.mock_terms,
                                "Planted dictionary for --mock (JSONL)");
  terms_collect_cmd->add_option("--out-dir", terms_collect_args.out_dir,
                                "Output directory")->required();

  TermsVoteArgs terms_vote_args;
  auto* terms_vote_cmd = terms_cmd->add_subcommand("vote", "Filter and vote");
  terms_vote_cmd->add_option("--raw", terms_vote_args.raw, "Raw candidates (JSONL)")->required();
  terms_vote_cmd->add_option("--out-dir", terms_vote_args.out_dir, "Output directory")->required();

  TermsRetrieveArgs terms_retrieve_args;
  auto* terms_retrieve_cmd = terms_cmd->add_subcommand("retrieve", "Retrieve term hits");
  terms_retrieve_cmd->add_option("--table", terms_retrieve_args.table,
                                 "Term table (JSONL)")->required();
  terms_retrieve_cmd->add_option("--subtitle", terms_retrieve_args.subtitle,
                                 "Source subtitle")->required();
  terms_retrieve_cmd->add_option("--lang", terms_retrieve_args.lang, "Language tag");
  terms_retrieve_cmd->add_option("--out-dir", terms_retrieve_args.out_dir,
                                 "Output directory")->required();

  TermsEmitArgs terms_emit_args;
  auto* terms_emit_cmd = terms_cmd->add_subcommand("emit", "Emit the TI dataset");
  terms_emit_cmd->add_option("--table", terms_emit_args.table, "Term table (JSONL)")->required();
  terms_emit_cmd->add_option("--subtitle", terms_emit_args.subtitle, "Source subtitle")->required();
  terms_emit_cmd->add_option("--lang", terms_emit_args.lang, "Language tag");
  terms_emit_cmd->add_option("--diarization", terms_emit_args.diarization,
                             "Diarization labels (JSONL)")->required();
  terms_emit_cmd->add_option("--preamble", terms_emit_args.preamble, "Context preamble text");
  terms_emit_cmd->add_option("--preamble-file", terms_emit_args.preamble_file,
                             "Context preamble template file (overrides --preamble)");
  terms_emit_cmd->add_option("--out-dir", terms_emit_args.out_dir, "Output directory")->required();

  auto add_context_options = [](CLI::App* cmd, ContextArgs& args) {
    cmd->add_option("--subtitle", args.subtitle, "Source subtitle")->required();
    cmd->add_option("--lang", args.lang, "Language tag");
    cmd->add_option("--diarization", args.diarization,
                    "Diarization labels (JSONL)")->required();
    cmd->add_option("--aligned", args.aligned, "Aligned corpus (JSONL)");
    cmd->add_option("--table", args.table, "Term table (JSONL)");
    cmd->add_option("--descriptors", args.descriptors, "Speaker descriptors (JSONL)");
    cmd->add_option("--preamble", args.preamble, "Context preamble text");
    cmd->add_option("--preamble-file", args.preamble_file,
                    "Context preamble template file (overrides --preamble)");
  };

  SftEmitArgs sft_args;
  auto* sft_cmd = app.add_subcommand("sft-emit", "Emit the SFT dataset");
  add_context_options(sft_cmd, sft_args.context);
  sft_cmd->add_option("--out-dir", sft_args.out_dir, "Output directory")->required();

  auto* sapo_cmd = app.add_subcommand("sapo", "Preference dataset pipeline");
  sapo_cmd->require_subcommand(1);

  SapoSampleArgs sapo_sample_args;
  auto* sapo_sample_cmd = sapo_cmd->add_subcommand("sample", "Segment-wise sampling");
  add_context_options(sapo_sample_cmd, sapo_sample_args.context);
  sapo_sample_cmd->add_option("--out-dir", sapo_sample_args.out_dir,
                              "Output directory")->required();

  SapoWeightsArgs sapo_weights_args;
  auto* sapo_weights_cmd = sapo_cmd->add_subcommand("weights", "Adaptive weights");
  sapo_weights_cmd->add_option("--samples", sapo_weights_args.samples,
                               "Segment samples (JSONL)")->required();
  sapo_weights_cmd->add_option("--out-dir", sapo_weights_args.out_dir,
                               "Output directory")->required();

  SapoEmitArgs sapo_emit_args;
  auto* sapo_emit_cmd = sapo_cmd->add_subcommand("emit", "Emit the preference dataset");
  add_context_options(sapo_emit_cmd, sapo_emit_args.context);
  sapo_emit_cmd->add_option("--samples", sapo_emit_args.samples,
                            "Segment samples (JSONL)")->required();
  sapo_emit_cmd->add_option("--out-dir", sapo_emit_args.out_dir,
                            "Output directory")->required();

  LossCheckArgs loss_args;
  auto* loss_cmd = app.add_subcommand("loss-check", "Reference loss calculator");
  loss_cmd->add_option("--input", loss_args.input, "Loss inputs (JSONL)")->required();
  loss_cmd->add_option("--out-dir", loss_args.out_dir, "Output directory");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluation metrics");
  eval_cmd->require_subcommand(1);

  EvalPaArgs pa_args;
  auto* pa_cmd = eval_cmd->add_subcommand("pa", "Pronoun accuracy");
  pa_cmd->add_option("--annotations", pa_args.annotations,
                     "Pronoun annotations (JSONL)")->required();
  pa_cmd->add_option("--outputs", pa_args.outputs, "Model outputs (JSONL)")->required();
  pa_cmd->add_option("--subtitle", pa_args.subtitle, "Source subtitle")->required();
  pa_cmd->add_option("--lang", pa_args.lang, "Language tag");
  pa_cmd->add_option("--out-dir", pa_args.out_dir, "Output directory");

  EvalTcArgs tc_args;
  auto* tc_cmd = eval_cmd->add_subcommand("tc", "Terminology consistency");
  tc_cmd->add_option("--table", tc_args.table, "Term table (JSONL)")->required();
  tc_cmd->add_option("--subtitle", tc_args.subtitle, "Source subtitle")->required();
  tc_cmd->add_option("--lang", tc_args.lang, "Language tag");
  tc_cmd->add_option("--outputs", tc_args.outputs, "Model outputs (JSONL)")->required();
  tc_cmd->add_option("--out-dir", tc_args.out_dir, "Output directory");

  EvalAggArgs agg_args;
  auto* agg_cmd = eval_cmd->add_subcommand("aggregate", "Aggregate judge scores");
  agg_cmd->add_option("--scores", agg_args.scores,
                      "Per-evaluator segment scores (JSONL, repeatable)")
      ->required();
  agg_cmd->add_option("--out-dir", agg_args.out_dir, "Output directory");

  EvalWinArgs win_args;
  auto* win_cmd = eval_cmd->add_subcommand("winrate", "Pairwise win rate");
  win_cmd->add_option("--outcomes", win_args.outcomes,
                      "Pairwise outcomes (JSONL)")->required();
  win_cmd->add_option("--out-dir", win_args.out_dir, "Output directory");

  // Global options remain usable after a subcommand name.
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
    for (CLI::App* sub : cmd->get_subcommands({})) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 64;
  } catch (const CLI::RequiredError& e) {
    // A missing subcommand is a usage problem; a missing option value is
    // a validation problem.
    if (std::string(e.what()).find("subcommand") != std::string::npos) {
      std::cerr << e.what() << "\n\n" << app.help() << std::flush;
      return 64;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*align_cmd) return run_align(gopts, align_args);
    if (*diarize_cmd) return run_diarize(gopts, diarize_args);
    if (*score_cmd) return run_diarize_score(gopts, score_args);
    if (*sweep_cmd) return run_sweep(gopts, sweep_args);
    if (*terms_collect_cmd) return run_terms_collect(gopts, terms_collect_args);
    if (*terms_vote_cmd) return run_terms_vote(gopts, terms_vote_args);
    if (*terms_retrieve_cmd) return run_terms_retrieve(gopts, terms_retrieve_args);
    if (*terms_emit_cmd) return run_terms_emit(gopts, terms_emit_args);
    if (*sft_cmd) return run_sft_emit(gopts, sft_args);
    if (*sapo_sample_cmd) return run_sapo_sample(gopts, sapo_sample_args);
    if (*sapo_weights_cmd) return run_sapo_weights(gopts, sapo_weights_args);
    if (*sapo_emit_cmd) return run_sapo_emit(gopts, sapo_emit_args);
    if (*loss_cmd) return run_loss_check(gopts, loss_args);
    if (*pa_cmd) return run_eval_pa(gopts, pa_args);
    if (*tc_cmd) return run_eval_tc(gopts, tc_args);
    if (*agg_cmd) return run_eval_aggregate(gopts, agg_args);
    if (*win_cmd) return run_eval_winrate(gopts, win_args);
    std::cerr << app.help() << std::flush;
    return 64;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ProtocolError& e) {
    std::cerr << "error: " << e.what() << "\nraw response: " << e.raw_body()
              << "\n";
    return 2;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
