#include <doctest.h>
#include <cmath>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "hermes/errors.hpp"
#include "hermes/sapo.hpp"

using namespace hermes;

namespace {

PromptContext simple_context(int n_lines) {
  PromptContext context;
  context.prompt_id = "p000001";
  context.preamble = "Translate the dialogue.";
  for (int i = 0; i < n_lines; ++i) {
    context.lines.push_back("source line " + std::to_string(i + 1));
    context.speaker_labels.push_back(i % 2 == 0 ? "A" : "B");
  }
  context.term_hits.assign(context.lines.size(), {});
  context.descriptors["A"] = {"adult", "female"};
  context.descriptors["B"] = {"unknown", "unknown"};
  return context;
}

// Judge that replays a fixed score table, keyed by call order.
class ScriptedJudge : public JudgeClient {
 public:
  explicit ScriptedJudge(std::vector<std::vector<int>> script)
      : script_(std::move(script)) {}
  std::vector<int> judge_scores(const std::string&, const std::string&,
                                const std::vector<std::string>& candidates) override {
    std::vector<int> scores = script_.at(call_++);
    scores.resize(candidates.size(), 50);
    return scores;
  }

 private:
  std::vector<std::vector<int>> script_;
  std::size_t call_ = 0;
};

// Translator returning a fixed candidate list regardless of input.
class FixedTranslator : public TranslatorClient {
 public:
  explicit FixedTranslator(std::vector<std::string> candidates)
      : candidates_(std::move(candidates)) {}
  std::vector<std::string> translate(const std::string&,
                                     const std::vector<std::string>&,
                                     const std::vector<std::string>&,
                                     const SamplingParams&, int k) override {
    std::vector<std::string> out = candidates_;
    while (static_cast<int>(out.size()) < k) out.push_back(candidates_.back());
    out.resize(static_cast<std::size_t>(k));
    return out;
  }

 private:
  std::vector<std::string> candidates_;
};

CandidateSet scored_set(std::vector<std::string> candidates, std::vector<int> scores) {
  CandidateSet set;
  set.candidates = std::move(candidates);
  set.scores = std::move(scores);
  return set;
}

}  // namespace

TEST_CASE("split_holdout sizes and determinism") {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("p" + std::to_string(1000 + i));

  const auto [sft, sapo] = split_holdout(ids, 0.2, 7);
  CHECK(sft.size() == 80);
  CHECK(sapo.size() == 20);

  // Disjoint and exhaustive.
  std::set<std::string> all(sft.begin(), sft.end());
  for (const auto& id : sapo) CHECK(all.insert(id).second);
  CHECK(all.size() == 100);

  const auto [sft2, sapo2] = split_holdout(ids, 0.2, 7);
  CHECK(sft == sft2);
  CHECK(sapo == sapo2);
  const auto [sft3, sapo3] = split_holdout(ids, 0.2, 8);
  CHECK(sapo != sapo3);  // different seed, different split

  // Round-half-up with a floor of one prompt.
  const std::vector<std::string> three = {"a", "b", "c"};
  const auto [rest, holdout] = split_holdout(three, 0.2, 1);
  CHECK(holdout.size() == 1);  // round(0.6) = 1
  CHECK(rest.size() == 2);

  CHECK_THROWS_AS(split_holdout({}, 0.2, 1), ValidationError);
  CHECK_THROWS_AS(split_holdout(three, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(split_holdout(three, 1.0, 1), ValidationError);
}

TEST_CASE("render_prompt labels speakers and lists terms") {
  PromptContext context = simple_context(2);
  TermHit hit;
  hit.surface = "沧澜城";
  hit.term_type = "location";
  hit.translation = "Canglan City";
  context.term_hits[0].push_back(hit);

  const std::string rendered = render_prompt(context);
  CHECK(rendered.find("[A] source line 1") != std::string::npos);
  CHECK(rendered.find("[B] source line 2") != std::string::npos);
  CHECK(rendered.find("沧澜城 -> Canglan City (location)") != std::string::npos);
  CHECK(rendered.find("[A] female, adult") != std::string::npos);
  CHECK(rendered.find("Translate the dialogue.") != std::string::npos);

  CHECK(render_prompt(context) == rendered);  // bit-stable
  CHECK_THROWS_AS(render_prompt(PromptContext{}), ValidationError);
}

TEST_CASE("emit_sft_dataset emits complete prompts and skips gaps") {
  std::vector<PromptContext> contexts = {simple_context(2), simple_context(1),
                                         simple_context(3), simple_context(2)};
  for (std::size_t p = 0; p < contexts.size(); ++p) {
    contexts[p].prompt_id = "p" + std::to_string(p + 1);
  }
  std::vector<std::vector<std::optional<std::string>>> targets = {
      {std::string("t1"), std::string("t2")},
      {std::string("u1")},
      {std::string("v1"), std::string("v2"), std::string("v3")},
      {std::string("t1"), std::nullopt},  // missing -> skipped
  };
  std::ostringstream out;
  const SftEmitStats stats = emit_sft_dataset(contexts, targets, out);
  CHECK(stats.emitted == 3);
  CHECK(stats.skipped == 1);

  std::ostringstream again;
  emit_sft_dataset(contexts, targets, again);
  CHECK(again.str() == out.str());

  const std::string first_line = out.str().substr(0, out.str().find('\n'));
  CHECK(first_line.find("\"input\"") != std::string::npos);
  CHECK(first_line.find("\"target\":[\"t1\",\"t2\"]") != std::string::npos);
}

TEST_CASE("sample_segments: degenerate k=1 sampling") {
  PromptContext context = simple_context(1);
  FixedTranslator translator({"only candidate"});
  ScriptedJudge judge(std::vector<std::vector<int>>{{77}});
  const SegmentSample sample =
      sample_segments(context, translator, judge, 1, {});
  REQUIRE(sample.sets.size() == 1);
  CHECK(sample.sets[0].candidates.size() == 1);
  CHECK(sample.sets[0].chosen == 0);
  CHECK(sample.sets[0].rejected == 0);
  CHECK(gate(sample.sets[0]) == 0);  // |T| = 1 <= 3
  CHECK(sample.prefix_chain == std::vector<std::string>{"only candidate"});
}

TEST_CASE("sample_segments picks extreme scores") {
  // Five scored candidates; 92 wins, 70 is rejected.
  PromptContext context = simple_context(1);
  FixedTranslator translator({"c70", "c90", "c85", "c88", "c92"});
  ScriptedJudge judge(std::vector<std::vector<int>>{{70, 90, 85, 88, 92}});
  const SegmentSample sample =
      sample_segments(context, translator, judge, 5, {});
  REQUIRE(sample.sets.size() == 1);
  const CandidateSet& set = sample.sets[0];
  CHECK(set.candidates[static_cast<std::size_t>(set.chosen)] == "c92");
  CHECK(set.candidates[static_cast<std::size_t>(set.rejected)] == "c70");
  CHECK(gate(set) == 1);  // |T| = 5, range 22
}

TEST_CASE("sample_segments deduplicates, trims, and prefers the reference") {
  PromptContext context = simple_context(1);
  FixedTranslator translator({" spaced ", "spaced", "other", "other", "third"});
  // Scores arrive for the deduplicated list with the reference in front:
  // [ref, spaced, other, third]; the reference ties the max.
  ScriptedJudge judge(std::vector<std::vector<int>>{{90, 90, 60, 80}});
  const std::vector<std::string> references = {"the reference"};
  const SegmentSample sample =
      sample_segments(context, translator, judge, 5, {}, references);
  const CandidateSet& set = sample.sets[0];
  REQUIRE(set.candidates.size() == 4);
  CHECK(set.has_reference);
  CHECK(set.candidates[0] == "the reference");
  CHECK(set.candidates[1] == "spaced");  // trimmed, deduplicated
  CHECK(set.chosen == 0);   // tie prefers the lowest index = the reference
  CHECK(set.rejected == 2); // lowest score, highest index among minima
  CHECK(sample.prefix_chain[0] == "the reference");
}

TEST_CASE("sample_segments threads the chosen prefix forward") {
  PromptContext context = simple_context(3);

  class EchoTranslator : public TranslatorClient {
   public:
    std::vector<std::string> translate(const std::string&,
                                       const std::vector<std::string>& lines,
                                       const std::vector<std::string>& prefix,
                                       const SamplingParams&, int k) override {
      prefixes.push_back(prefix);
      std::vector<std::string> out;
      for (int j = 0; j < k; ++j) {
        out.push_back("t" + std::to_string(prefix.size() + 1) + "_" +
                      std::to_string(j) + " of " + lines[prefix.size()]);
      }
      return out;
    }
    std::vector<std::vector<std::string>> prefixes;
  };

  EchoTranslator translator;
  ScriptedJudge judge(std::vector<std::vector<int>>{{50, 99}, {99, 50}, {50, 99}});
  const SegmentSample sample =
      sample_segments(context, translator, judge, 2, {});

  REQUIRE(translator.prefixes.size() == 3);
  CHECK(translator.prefixes[0].empty());
  CHECK(translator.prefixes[1] ==
        std::vector<std::string>{sample.prefix_chain[0]});
  CHECK(translator.prefixes[2] ==
        std::vector<std::string>(sample.prefix_chain.begin(),
                                 sample.prefix_chain.begin() + 2));
  // The chosen candidate of each line extends the chain.
  for (std::size_t i = 0; i < sample.sets.size(); ++i) {
    const CandidateSet& set = sample.sets[i];
    CHECK(sample.prefix_chain[i] ==
          set.candidates[static_cast<std::size_t>(set.chosen)]);
  }
}

TEST_CASE("gate boundaries") {
  CHECK(gate(scored_set({"a", "b", "c"}, {0, 50, 100})) == 0);       // |T| = 3
  CHECK(gate(scored_set({"a", "b", "c", "d"}, {80, 80, 85, 85})) == 0);  // range 5
  CHECK(gate(scored_set({"a", "b", "c", "d"}, {80, 80, 86, 85})) == 1);  // range 6
  CHECK(gate(scored_set({"a", "b", "c", "d", "e"}, {70, 90, 85, 88, 92})) == 1);
  CHECK_THROWS_AS(gate(CandidateSet{}), ValidationError);
}

TEST_CASE("importance is proportional to set sizes") {
  const std::vector<std::size_t> equal = {4, 4, 4, 4};
  for (double d : importance(equal)) CHECK(d == doctest::Approx(0.25));

  const std::vector<std::size_t> skewed = {2, 6};
  const auto delta = importance(skewed);
  CHECK(delta[0] == doctest::Approx(0.25));
  CHECK(delta[1] == doctest::Approx(0.75));

  const std::vector<std::size_t> single = {9};
  CHECK(importance(single)[0] == doctest::Approx(1.0));

  std::mt19937_64 rng(19);
  std::uniform_int_distribution<std::size_t> size(1, 20);
  for (int round = 0; round < 100; ++round) {
    std::vector<std::size_t> sizes;
    std::uniform_int_distribution<int> n(1, 40);
    for (int i = n(rng); i > 0; --i) sizes.push_back(size(rng));
    double sum = 0.0;
    for (double d : importance(sizes)) sum += d;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }

  const std::vector<std::size_t> with_zero = {3, 0};
  CHECK_THROWS_AS(importance(with_zero), ValidationError);
}

TEST_CASE("adaptive weights combine gate and importance") {
  SegmentSample sample;
  sample.prompt_id = "p1";
  sample.sets.push_back(scored_set({"a", "b", "c", "d", "e"}, {10, 60, 40, 50, 70}));
  sample.sets.push_back(scored_set({"a", "b", "c", "d", "e"}, {50, 50, 50, 50, 50}));
  sample.sets[0].line_index = 0;
  sample.sets[1].line_index = 1;

  const auto weights = adaptive_weights(sample);
  REQUIRE(weights.size() == 2);
  CHECK(weights[0].gate == 1);
  CHECK(weights[1].gate == 0);  // no score spread
  CHECK(weights[0].importance == doctest::Approx(0.5));
  CHECK(weights[1].importance == doctest::Approx(0.5));
  CHECK(weights[0].weight == doctest::Approx(0.5));
  CHECK(weights[1].weight == 0.0);

  // The importance denominator keeps gated lines in the sum, so the total
  // emitted weight can fall below one.
  double emitted = 0.0;
  for (const auto& w : weights) emitted += w.weight;
  CHECK(emitted == doctest::Approx(0.5));
}

TEST_CASE("dpo_segment_loss reference points") {
  // Policy equal to reference: log sigmoid(0) = log 0.5.
  for (double beta : {0.01, 0.1, 1.0, 10.0}) {
    PoLossInput input;
    input.beta = beta;
    CHECK(dpo_segment_loss(input) == doctest::Approx(-0.693147).epsilon(1e-6));
  }

  // Independent scalar oracle for log sigmoid(1).
  const double expected = std::log(1.0 / (1.0 + std::exp(-1.0)));
  PoLossInput one;
  one.beta = 1.0;
  one.policy_chosen = 1.0;
  CHECK(expected == doctest::Approx(-0.313262).epsilon(1e-6));
  CHECK(dpo_segment_loss(one) == doctest::Approx(expected).epsilon(1e-9));

  // Stability far into the tails: log sigmoid(x) = x - log(1 + e^x).
  PoLossInput deep;
  deep.beta = 0.1;
  deep.policy_chosen = -10000.0;
  const double loss = dpo_segment_loss(deep);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(-1000.0).epsilon(1e-9));

  PoLossInput positive;
  positive.beta = 1.0;
  positive.policy_chosen = 10000.0;
  CHECK(dpo_segment_loss(positive) == doctest::Approx(0.0));

  PoLossInput bad;
  bad.policy_chosen = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(dpo_segment_loss(bad), ValidationError);
  PoLossInput zero_beta;
  zero_beta.beta = 0.0;
  CHECK_THROWS_AS(dpo_segment_loss(zero_beta), ValidationError);
}

TEST_CASE("dpo_segment_loss is monotonic in the deltas") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  for (int round = 0; round < 200; ++round) {
    PoLossInput input;
    input.beta = 0.5;
    input.policy_chosen = value(rng);
    input.policy_rejected = value(rng);
    input.ref_chosen = value(rng);
    input.ref_rejected = value(rng);
    const double base = dpo_segment_loss(input);

    PoLossInput up = input;
    up.policy_chosen += 0.1;
    CHECK(dpo_segment_loss(up) > base);

    PoLossInput down = input;
    down.policy_rejected += 0.1;
    CHECK(dpo_segment_loss(down) < base);
  }
}

TEST_CASE("sapo_loss composes weights and segment losses") {
  // Three lines at sigma(0), total emitted weight 0.6.
  std::vector<AdaptiveWeight> weights(3);
  weights[0].weight = 0.3;
  weights[1].weight = 0.3;
  weights[2].weight = 0.0;
  const double at_zero = std::log(0.5);
  const std::vector<double> losses = {at_zero, at_zero, at_zero};
  CHECK(sapo_loss(weights, losses) ==
        doctest::Approx(0.6 * 0.693147).epsilon(1e-6));

  for (auto& w : weights) w.weight = 0.0;
  CHECK(sapo_loss(weights, losses) == 0.0);

  std::vector<AdaptiveWeight> one(1);
  one[0].weight = 1.0;
  CHECK(sapo_loss(one, std::vector<double>{-0.31326}) ==
        doctest::Approx(0.31326));

  CHECK_THROWS_AS(sapo_loss(one, losses), ValidationError);

  // Non-negativity whenever every segment loss is <= 0.
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> weight(0.0, 1.0);
  std::uniform_real_distribution<double> loss(-3.0, 0.0);
  for (int round = 0; round < 100; ++round) {
    std::vector<AdaptiveWeight> ws(5);
    std::vector<double> ls(5);
    for (int i = 0; i < 5; ++i) {
      ws[static_cast<std::size_t>(i)].weight = weight(rng);
      ls[static_cast<std::size_t>(i)] = loss(rng);
    }
    CHECK(sapo_loss(ws, ls) >= 0.0);
  }
}

TEST_CASE("emit_preference_dataset emits gated lines with sidecar counts") {
  PromptContext context = simple_context(5);
  SegmentSample sample;
  sample.prompt_id = context.prompt_id;
  // Lines: gated on, too few candidates, no range, gated on, too few.
  sample.sets.push_back(scored_set({"a", "b", "c", "d"}, {10, 90, 50, 50}));
  sample.sets.push_back(scored_set({"a", "b"}, {10, 90}));
  sample.sets.push_back(scored_set({"a", "b", "c", "d"}, {50, 50, 52, 55}));
  sample.sets.push_back(scored_set({"a", "b", "c", "d", "e"}, {70, 90, 85, 88, 92}));
  sample.sets.push_back(scored_set({"a"}, {50}));
  for (std::size_t i = 0; i < sample.sets.size(); ++i) {
    auto& set = sample.sets[i];
    set.line_index = static_cast<int>(i);
    set.chosen = static_cast<int>(std::max_element(set.scores.begin(), set.scores.end()) -
                                  set.scores.begin());
    set.rejected = static_cast<int>(std::min_element(set.scores.begin(), set.scores.end()) -
                                    set.scores.begin());
    sample.prefix_chain.push_back(set.candidates[static_cast<std::size_t>(set.chosen)]);
  }

  std::ostringstream out;
  const PreferenceEmitStats stats =
      emit_preference_dataset({context}, {sample}, out);
  CHECK(stats.total_lines == 5);
  CHECK(stats.gated_off_size == 2);
  CHECK(stats.gated_off_range == 1);
  CHECK(stats.emitted == 2);

  // Two records; prefix causality: line 4's prefix is chosen 1..3.
  std::istringstream lines(out.str());
  std::string row;
  std::vector<nlohmann::json> records;
  while (std::getline(lines, row)) records.push_back(nlohmann::json::parse(row));
  REQUIRE(records.size() == 2);
  CHECK(records[0]["line_index"] == 1);
  CHECK(records[1]["line_index"] == 4);
  const auto prefix = records[1]["prefix"].get<std::vector<std::string>>();
  CHECK(prefix == std::vector<std::string>(sample.prefix_chain.begin(),
                                           sample.prefix_chain.begin() + 3));
  CHECK(records[0]["chosen"] == "b");
  CHECK(records[0]["rejected"] == "a");
  CHECK(records[0]["weight"].get<double>() > 0.0);

  std::ostringstream again;
  emit_preference_dataset({context}, {sample}, again);
  CHECK(again.str() == out.str());
}

TEST_CASE("emit_preference_dataset refuses inverted pairs") {
  PromptContext context = simple_context(1);
  SegmentSample sample;
  sample.prompt_id = context.prompt_id;
  CandidateSet set = scored_set({"a", "b", "c", "d"}, {10, 90, 50, 50});
  set.chosen = 0;    // corrupted on purpose: chosen holds the lowest score
  set.rejected = 1;
  sample.sets.push_back(set);
  sample.prefix_chain.push_back("a");
  std::ostringstream out;
  CHECK_THROWS_AS(emit_preference_dataset({context}, {sample}, out),
                  ValidationError);
}
