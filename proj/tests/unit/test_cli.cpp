#include <doctest.h>
#include <json.hpp>

#include "testing/fixtures.hpp"
#include "testing/tmpdir.hpp"

using namespace hermes::testing;

namespace {

const std::string kCli = HERMES_CLI_PATH;

std::string quoted(const std::filesystem::path& p) {
  return "'" + p.string() + "'";
}

}  // namespace

TEST_CASE("align on the drama fixture pairs all seven lines") {
  TmpDir dir("cli_align");
  const auto src = dir.write("en.ass", fixture_ass_en());
  const auto tgt = dir.write("zh.ass", fixture_ass_zh());
  const auto result = run_command(kCli + " align --src " + quoted(src) +
                                  " --tgt " + quoted(tgt) + " --out-dir " +
                                  quoted(dir.path() / "out"));
  REQUIRE(result.exit_code == 0);
  const auto summary = nlohmann::json::parse(result.output);
  CHECK(summary["pairs"] == 7);
  CHECK(summary["unmatched_source"] == 0);
  CHECK(summary["unmatched_target"] == 0);
  CHECK(std::filesystem::exists(dir.path() / "out" / "aligned.jsonl"));
  CHECK(std::filesystem::exists(dir.path() / "out" / "unmatched.jsonl"));
  CHECK(std::filesystem::exists(dir.path() / "out" / "config_manifest.json"));
}

TEST_CASE("config validation failures exit 1 naming the field") {
  TmpDir dir("cli_config");
  const auto config = dir.write("config.json", R"({"thresholds": {"epsilon": 1.5}})");
  const auto src = dir.write("en.ass", fixture_ass_en());
  const auto tgt = dir.write("zh.ass", fixture_ass_zh());
  const auto stderr_file = dir.path() / "stderr.txt";
  const auto result = run_command(
      kCli + " align --config " + quoted(config) + " --src " + quoted(src) +
          " --tgt " + quoted(tgt) + " --out-dir " + quoted(dir.path() / "out"),
      stderr_file.string());
  CHECK(result.exit_code == 1);
  CHECK(TmpDir::read(stderr_file).find("epsilon") != std::string::npos);
}

TEST_CASE("unknown commands exit 64 with usage text") {
  TmpDir dir("cli_unknown");
  const auto stderr_file = dir.path() / "stderr.txt";
  const auto result = run_command(kCli + " transmogrify", stderr_file.string());
  CHECK(result.exit_code == 64);
  CHECK(TmpDir::read(stderr_file).find("Usage") != std::string::npos);
  const auto bare = run_command(kCli, (dir.path() / "e2.txt").string());
  CHECK(bare.exit_code == 64);
}

TEST_CASE("flag overrides shadow the config file") {
  TmpDir dir("cli_override");
  // The config file's delta is too small for the first line's 0.5 s skew;
  // the flag widens it back and all seven pair again.
  const auto config =
      dir.write("config.json", R"({"thresholds": {"max_start_delta": 0.2}})");
  const auto src = dir.write("en.ass", fixture_ass_en());
  const auto tgt = dir.write("zh.ass", fixture_ass_zh());

  const auto narrow = run_command(kCli + " align --config " + quoted(config) +
                                  " --src " + quoted(src) + " --tgt " + quoted(tgt) +
                                  " --out-dir " + quoted(dir.path() / "narrow"));
  REQUIRE(narrow.exit_code == 0);
  CHECK(nlohmann::json::parse(narrow.output)["pairs"] == 6);

  const auto wide = run_command(kCli + " align --config " + quoted(config) +
                                " --max-start-delta 0.7 --src " + quoted(src) +
                                " --tgt " + quoted(tgt) + " --out-dir " +
                                quoted(dir.path() / "wide"));
  REQUIRE(wide.exit_code == 0);
  CHECK(nlohmann::json::parse(wide.output)["pairs"] == 7);

  // The manifest records the effective configuration.
  const auto manifest = nlohmann::json::parse(
      TmpDir::read(dir.path() / "wide" / "config_manifest.json"));
  CHECK(manifest["thresholds"]["max_start_delta"] == 0.7);
}

TEST_CASE("loss-check summarizes the weighted loss") {
  TmpDir dir("cli_loss");
  const auto input = dir.write(
      "loss.jsonl",
      R"({"beta": 1.0, "policy_chosen": 0, "policy_rejected": 0, "ref_chosen": 0, "ref_rejected": 0, "weight": 0.5})"
      "\n"
      R"({"beta": 1.0, "policy_chosen": 1, "policy_rejected": 0, "ref_chosen": 0, "ref_rejected": 0, "weight": 0.0})"
      "\n");
  const auto result = run_command(kCli + " loss-check --input " + quoted(input));
  REQUIRE(result.exit_code == 0);
  const auto summary = nlohmann::json::parse(result.output);
  CHECK(summary["records"] == 2);
  // Only the first record carries weight: 0.5 * 0.693147.
  CHECK(summary["sapo_loss"].get<double>() == doctest::Approx(0.346574).epsilon(1e-5));
}

TEST_CASE("eval winrate reproduces the text triple") {
  TmpDir dir("cli_win");
  std::string rows;
  auto add = [&](const char* result, int count) {
    for (int i = 0; i < count; ++i) {
      rows += std::string(R"({"item_id": "i)") + std::to_string(rows.size()) +
              R"(", "dimension": "accuracy", "result": ")" + result + "\"}\n";
    }
  };
  add("win", 29);
  add("tie", 49);
  add("loss", 22);
  const auto input = dir.write("outcomes.jsonl", rows);
  const auto result = run_command(kCli + " eval winrate --outcomes " + quoted(input));
  REQUIRE(result.exit_code == 0);
  const auto summary = nlohmann::json::parse(result.output);
  CHECK(summary["win_rate"]["accuracy"] == "29:49:22");
}

TEST_CASE("missing input files exit 1") {
  TmpDir dir("cli_missing");
  const auto result = run_command(
      kCli + " align --src /nonexistent.ass --tgt /nonexistent.ass --out-dir " +
          quoted(dir.path() / "out"),
      (dir.path() / "stderr.txt").string());
  CHECK(result.exit_code == 1);
}

TEST_CASE("unreachable endpoints exit 2 after retries") {
  TmpDir dir("cli_transport");
  // Port 9 is discard; nothing listens on it here.
  const auto config = dir.write("config.json", R"({
    "endpoints": {"extractor": {"base_url": "http://127.0.0.1:9/model"}},
    "retry": {"max_attempts": 2, "base_backoff_ms": 1}
  })");
  const auto groups = dir.write(
      "groups.jsonl",
      R"({"group_id": 1, "source_lines": ["hello"], "target_lines": ["hola"]})"
      "\n");
  const auto result = run_command(
      kCli + " terms collect --config " + quoted(config) + " --groups " +
          quoted(groups) + " --out-dir " + quoted(dir.path() / "out"),
      (dir.path() / "stderr.txt").string());
  // Transport failures during collection skip the group, so the command
  // itself succeeds and reports the skip.
  REQUIRE(result.exit_code == 0);
  CHECK(nlohmann::json::parse(result.output)["skipped_groups"] == 1);

  // A command that needs the endpoint inline surfaces the failure as exit 2.
  const auto sampling_config = dir.write("sampling.json", R"({
    "endpoints": {
      "translator": {"base_url": "http://127.0.0.1:9/model"},
      "judge": {"base_url": "http://127.0.0.1:9/model"}
    },
    "retry": {"max_attempts": 2, "base_backoff_ms": 1}
  })");
  const auto src = dir.write("src.ass", fixture_ass_en());
  std::string labels;
  for (int i = 1; i <= 7; ++i) {
    labels += R"({"line_id": )" + std::to_string(i) + R"(, "speaker": 1})" "\n";
  }
  const auto diar = dir.write("diar.jsonl", labels);
  const auto sample = run_command(
      kCli + " sapo sample --config " + quoted(sampling_config) +
          " --subtitle " + quoted(src) + " --diarization " + quoted(diar) +
          " --out-dir " + quoted(dir.path() / "out2"),
      (dir.path() / "stderr2.txt").string());
  CHECK(sample.exit_code == 2);
}

TEST_CASE("diarize, scoring, and the epsilon sweep run end to end") {
  TmpDir dir("cli_diar");
  // Twelve lines, two speakers in runs of three, every third line undetected.
  std::string subtitle =
      "[Script Info]\n\n[Events]\n"
      "Format: Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, Effect, Text\n";
  std::string embeddings, refs, turns;
  for (int i = 0; i < 12; ++i) {
    const int speaker = (i / 3) % 2;
    char start[32], end[32];
    std::snprintf(start, sizeof(start), "0:00:%02d.00", i * 2);
    std::snprintf(end, sizeof(end), "0:00:%02d.50", i * 2 + 1);
    subtitle += "Dialogue: 0," + std::string(start) + "," + end +
                ",Default,,0,0,0,,line " + std::to_string(i + 1) + "\n";
    const std::string axis = speaker == 0 ? "[1.0, 0.0, 0.02]" : "[0.0, 1.0, 0.02]";
    embeddings += R"({"line_id": )" + std::to_string(i + 1) +
                  R"(, "modality": "timbre", "vector": )" + axis + "}\n";
    if (i % 3 != 2) {
      embeddings += R"({"line_id": )" + std::to_string(i + 1) +
                    R"(, "modality": "face", "vector": )" + axis + "}\n";
    }
    refs += R"({"line_id": )" + std::to_string(i + 1) + R"(, "speaker": "s)" +
            std::to_string(speaker) + "\"}\n";
    if (i < 11) {
      turns += R"({"turn": )" + std::string((i + 1) % 3 == 0 ? "true" : "false") +
               "}\n";
    }
  }
  const auto sub_file = dir.write("prog.ass", subtitle);
  const auto emb_file = dir.write("emb.jsonl", embeddings);
  const auto ref_file = dir.write("refs.jsonl", refs);
  const auto turn_file = dir.write("turns.jsonl", turns);

  const auto diarize = run_command(kCli + " diarize --embeddings " +
                                   quoted(emb_file) + " --out-dir " +
                                   quoted(dir.path() / "diar"));
  REQUIRE(diarize.exit_code == 0);
  const auto diar_summary = nlohmann::json::parse(diarize.output);
  CHECK(diar_summary["lines"] == 12);
  CHECK(diar_summary["speakers"].get<int>() >= 2);

  const auto score = run_command(
      kCli + " diarize-score --pred " + quoted(dir.path() / "diar" / "diarization.jsonl") +
      " --ref " + quoted(ref_file) + " --subtitle " + quoted(sub_file));
  REQUIRE(score.exit_code == 0);
  const auto metrics = nlohmann::json::parse(score.output);
  CHECK(metrics["text_der"].get<double>() == doctest::Approx(0.0));
  CHECK(metrics["der"].get<double>() == doctest::Approx(0.0));

  const auto sweep = run_command(kCli + " sweep-epsilon --embeddings " +
                                 quoted(emb_file) + " --ref-turns " +
                                 quoted(turn_file) + " --out-dir " +
                                 quoted(dir.path() / "sweep"));
  REQUIRE(sweep.exit_code == 0);
  const auto sweep_summary = nlohmann::json::parse(sweep.output);
  // Same-speaker cosine is ~1, cross-speaker ~0: a mid grid point separates
  // them perfectly.
  CHECK(sweep_summary["best_accuracy"].get<double>() == doctest::Approx(1.0));
  CHECK(std::filesystem::exists(dir.path() / "sweep" / "sweep.jsonl"));
}

TEST_CASE("terms and eval subcommands run end to end") {
  TmpDir dir("cli_terms");
  const auto table = dir.write(
      "t_filter.jsonl",
      R"({"surface": "沧澜城", "type": "location", "translation": "Canglan City", "support": 3})"
      "\n");
  std::string subtitle =
      "[Script Info]\n\n[Events]\n"
      "Format: Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, Effect, Text\n"
      "Dialogue: 0,0:00:01.00,0:00:02.00,Default,,0,0,0,,他去了沧澜城\n"
      "Dialogue: 0,0:00:03.00,0:00:04.00,Default,,0,0,0,,她回来了\n";
  const auto sub_file = dir.write("prog.ass", subtitle);

  const auto retrieve = run_command(kCli + " terms retrieve --table " +
                                    quoted(table) + " --subtitle " + quoted(sub_file) +
                                    " --out-dir " + quoted(dir.path() / "hits"));
  REQUIRE(retrieve.exit_code == 0);
  CHECK(nlohmann::json::parse(retrieve.output)["hits"] == 1);

  const auto labels = dir.write("diar.jsonl",
                                R"({"line_id": 1, "speaker": 1})" "\n"
                                R"({"line_id": 2, "speaker": 2})" "\n");
  const auto emit = run_command(kCli + " terms emit --table " + quoted(table) +
                                " --subtitle " + quoted(sub_file) +
                                " --diarization " + quoted(labels) +
                                " --preamble 'Find the terms.' --out-dir " +
                                quoted(dir.path() / "ti"));
  REQUIRE(emit.exit_code == 0);
  CHECK(nlohmann::json::parse(emit.output)["groups"] == 2);
  const auto ti = TmpDir::read(dir.path() / "ti" / "ti_dataset.jsonl");
  CHECK(ti.find("Canglan City") != std::string::npos);

  // Pronoun accuracy across the two lines.
  const auto annotations = dir.write(
      "ann.jsonl",
      R"({"line_id": 1, "pronoun": "他", "acceptable": ["he", "him"]})" "\n"
      R"({"line_id": 2, "pronoun": "她", "acceptable": ["she"]})" "\n");
  const auto outputs = dir.write(
      "outputs.jsonl",
      R"({"line_id": 1, "text": "he went to Canglan City"})" "\n"
      R"({"line_id": 2, "text": "the person returned"})" "\n");
  const auto pa = run_command(kCli + " eval pa --annotations " + quoted(annotations) +
                              " --outputs " + quoted(outputs) + " --subtitle " +
                              quoted(sub_file) + " --out-dir " +
                              quoted(dir.path() / "pa"));
  REQUIRE(pa.exit_code == 0);
  CHECK(nlohmann::json::parse(pa.output)["pa"].get<double>() == doctest::Approx(50.0));

  const auto tc = run_command(kCli + " eval tc --table " + quoted(table) +
                              " --subtitle " + quoted(sub_file) + " --outputs " +
                              quoted(outputs));
  REQUIRE(tc.exit_code == 0);
  CHECK(nlohmann::json::parse(tc.output)["tc"].get<double>() == doctest::Approx(100.0));

  const auto scores_a = dir.write(
      "scores_a.jsonl",
      R"({"segment_id": "s1", "accuracy": 80, "naturalness": 70, "vividness": 60})" "\n");
  const auto scores_b = dir.write(
      "scores_b.jsonl",
      R"({"segment_id": "s1", "accuracy": 90, "naturalness": 80, "vividness": 70})" "\n");
  const auto agg = run_command(kCli + " eval aggregate --scores " + quoted(scores_a) +
                               " --scores " + quoted(scores_b));
  REQUIRE(agg.exit_code == 0);
  const auto dims = nlohmann::json::parse(agg.output)["dims"];
  CHECK(dims["accuracy"].get<double>() == doctest::Approx(85.0));
  CHECK(dims["naturalness"].get<double>() == doctest::Approx(75.0));
  CHECK(dims["vividness"].get<double>() == doctest::Approx(65.0));
}

TEST_CASE("HERMES_SEED overrides config, flags override the environment") {
  TmpDir dir("cli_seed");
  const auto src = dir.write("en.ass", fixture_ass_en());
  const auto tgt = dir.write("zh.ass", fixture_ass_zh());
  auto manifest_seed = [&](const std::string& env_prefix,
                           const std::string& extra_flags,
                           const std::string& out) {
    const auto result = run_command(
        env_prefix + kCli + " align" + extra_flags + " --src " + quoted(src) +
        " --tgt " + quoted(tgt) + " --out-dir " + quoted(dir.path() / out));
    REQUIRE(result.exit_code == 0);
    const auto manifest = nlohmann::json::parse(
        TmpDir::read(dir.path() / out / "config_manifest.json"));
    return manifest["seed"].get<std::uint64_t>();
  };
  CHECK(manifest_seed("HERMES_SEED=123 ", "", "env_only") == 123);
  CHECK(manifest_seed("HERMES_SEED=123 ", " --seed 7", "flag_wins") == 7);
  CHECK(manifest_seed("", "", "default") == 0);
}
