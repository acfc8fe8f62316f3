#include "hermes/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "hermes/errors.hpp"

namespace hermes {

namespace {

using ojson = nlohmann::ordered_json;

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key)) {
      throw ValidationError("unknown config field '" + prefix + key + "'");
    }
  }
}

Endpoint endpoint_from_json(const nlohmann::json& j, const std::string& prefix) {
  reject_unknown(j, {"base_url", "auth_env", "timeout_s"}, prefix + ".");
  Endpoint e;
  e.base_url = j.value("base_url", "");
  e.auth_env = j.value("auth_env", "");
  e.timeout_s = j.value("timeout_s", 30.0);
  return e;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }

  PipelineConfig config;
  reject_unknown(j,
                 {"thresholds", "sampling", "retry", "endpoints", "noise_regex",
                  "seed", "jobs", "mock"},
                 "");

  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    reject_unknown(t,
                   {"epsilon", "eta", "max_start_delta", "n_max", "k",
                    "holdout_fraction", "min_support", "k_max"},
                   "thresholds.");
    auto& out = config.thresholds;
    out.epsilon = t.value("epsilon", out.epsilon);
    out.eta = t.value("eta", out.eta);
    out.max_start_delta = t.value("max_start_delta", out.max_start_delta);
    out.n_max = t.value("n_max", out.n_max);
    out.k = t.value("k", out.k);
    out.holdout_fraction = t.value("holdout_fraction", out.holdout_fraction);
    out.min_support = t.value("min_support", out.min_support);
    out.k_max = t.value("k_max", out.k_max);
  }
  if (j.contains("sampling")) {
    const auto& s = j["sampling"];
    reject_unknown(s, {"temperature", "top_k", "top_p", "seed"}, "sampling.");
    config.sampling.temperature = s.value("temperature", 1.0);
    config.sampling.top_k = s.value("top_k", 40);
    config.sampling.top_p = s.value("top_p", 0.9);
    if (s.contains("seed")) config.sampling.seed = s["seed"].get<std::int64_t>();
  }
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    reject_unknown(r,
                   {"max_attempts", "base_backoff_ms", "backoff_multiplier",
                    "retryable_statuses"},
                   "retry.");
    config.retry.max_attempts = r.value("max_attempts", 3);
    config.retry.base_backoff_ms = r.value("base_backoff_ms", 200);
    config.retry.backoff_multiplier = r.value("backoff_multiplier", 2.0);
    if (r.contains("retryable_statuses")) {
      config.retry.retryable_statuses =
          r["retryable_statuses"].get<std::vector<int>>();
    }
  }
  if (j.contains("endpoints")) {
    const auto& e = j["endpoints"];
    reject_unknown(e, {"translator", "judge", "extractor"}, "endpoints.");
    if (e.contains("translator")) {
      config.translator = endpoint_from_json(e["translator"], "endpoints.translator");
    }
    if (e.contains("judge")) {
      config.judge = endpoint_from_json(e["judge"], "endpoints.judge");
    }
    if (e.contains("extractor")) {
      config.extractor = endpoint_from_json(e["extractor"], "endpoints.extractor");
    }
  }
  config.noise_regex = j.value("noise_regex", "");
  config.seed = j.value("seed", std::uint64_t{0});
  config.jobs = j.value("jobs", 1);
  config.mock = j.value("mock", false);

  return config;
}

void PipelineConfig::validate() const {
  const auto& t = thresholds;
  if (!(t.epsilon > -1.0 && t.epsilon < 1.0)) {
    throw ValidationError("config: thresholds.epsilon must be in (-1, 1)");
  }
  if (!(t.eta > 0.0 && t.eta < 1.0)) {
    throw ValidationError("config: thresholds.eta must be in (0, 1)");
  }
  if (!(t.max_start_delta > 0.0)) {
    throw ValidationError("config: thresholds.max_start_delta must be > 0");
  }
  if (t.n_max < 1) {
    throw ValidationError("config: thresholds.n_max must be >= 1");
  }
  if (t.k < 1) throw ValidationError("config: thresholds.k must be >= 1");
  if (!(t.holdout_fraction > 0.0 && t.holdout_fraction < 1.0)) {
    throw ValidationError(
        "config: thresholds.holdout_fraction must be in (0, 1)");
  }
  if (t.min_support < 1) {
    throw ValidationError("config: thresholds.min_support must be >= 1");
  }
  if (t.k_max < 1) {
    throw ValidationError("config: thresholds.k_max must be >= 1");
  }
  if (!(sampling.temperature >= 0.0)) {
    throw ValidationError("config: sampling.temperature must be >= 0");
  }
  if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0)) {
    throw ValidationError("config: sampling.top_p must be in (0, 1]");
  }
  if (retry.max_attempts < 1) {
    throw ValidationError("config: retry.max_attempts must be >= 1");
  }
  if (!(retry.backoff_multiplier > 1.0)) {
    throw ValidationError(
        "config: retry.backoff_multiplier must be > 1 (strictly increasing "
        "backoff)");
  }
  if (jobs < 1) throw ValidationError("config: jobs must be >= 1");
}

std::string PipelineConfig::to_json() const {
  ojson j;
  j["thresholds"] = {{"epsilon", thresholds.epsilon},
                     {"eta", thresholds.eta},
                     {"max_start_delta", thresholds.max_start_delta},
                     {"n_max", thresholds.n_max},
                     {"k", thresholds.k},
                     {"holdout_fraction", thresholds.holdout_fraction},
                     {"min_support", thresholds.min_support},
                     {"k_max", thresholds.k_max}};
  ojson sampling_json = {{"temperature", sampling.temperature},
                         {"top_k", sampling.top_k},
                         {"top_p", sampling.top_p}};
  if (sampling.seed) sampling_json["seed"] = *sampling.seed;
  j["sampling"] = sampling_json;
  j["retry"] = {{"max_attempts", retry.max_attempts},
                {"base_backoff_ms", retry.base_backoff_ms},
                {"backoff_multiplier", retry.backoff_multiplier},
                {"retryable_statuses", retry.retryable_statuses}};
  auto endpoint_json = [](const Endpoint& e) {
    return ojson{{"base_url", e.base_url},
                 {"auth_env", e.auth_env},
                 {"timeout_s", e.timeout_s}};
  };
  j["endpoints"] = {{"translator", endpoint_json(translator)},
                    {"judge", endpoint_json(judge)},
                    {"extractor", endpoint_json(extractor)}};
  j["noise_regex"] = noise_regex;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["mock"] = mock;
  return j.dump(2) + "\n";
}

}  // namespace hermes
