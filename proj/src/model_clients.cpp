#include "hermes/model_clients.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <thread>

#include "hermes/errors.hpp"

// httplib spawns no threads of its own here; keep the include local to
// this translation unit.
#include <httplib.h>

namespace hermes {

bool RetryPolicy::is_retryable(int status) const {
  return std::find(retryable_statuses.begin(), retryable_statuses.end(),
                   status) != retryable_statuses.end();
}

int RetryPolicy::backoff_ms(int attempt) const {
  double delay = base_backoff_ms;
  for (int i = 1; i < attempt; ++i) delay *= backoff_multiplier;
  return static_cast<int>(delay);
}

int clip_score(double raw) {
  const int rounded = static_cast<int>(std::floor(raw + 0.5));
  return std::clamp(rounded, 0, 100);
}

std::uint64_t stable_hash64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

HttpModelClient::HttpModelClient(Endpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(std::move(retry)) {
  if (retry_.max_attempts < 1) {
    throw ValidationError("retry policy: max_attempts must be >= 1");
  }
  if (!(retry_.backoff_multiplier > 1.0)) {
    throw ValidationError("retry policy: backoff must strictly increase");
  }
  const auto scheme_end = endpoint_.base_url.find("://");
  if (scheme_end == std::string::npos ||
      endpoint_.base_url.substr(0, scheme_end) != "http") {
    throw ValidationError("endpoint URL must be http://host[:port][/path]");
  }
  const auto path_start = endpoint_.base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_ = endpoint_.base_url;
    path_ = "/";
  } else {
    host_ = endpoint_.base_url.substr(0, path_start);
    path_ = endpoint_.base_url.substr(path_start);
  }
  if (!(endpoint_.timeout_s > 0)) {
    throw ValidationError("endpoint timeout must be > 0");
  }
}

std::string HttpModelClient::post(const std::string& body) {
  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(retry_.backoff_ms(attempt - 1)));
    }
    httplib::Client client(host_);
    const auto timeout_sec = static_cast<time_t>(endpoint_.timeout_s);
    const auto timeout_usec = static_cast<time_t>(
        (endpoint_.timeout_s - static_cast<double>(timeout_sec)) * 1e6);
    client.set_connection_timeout(timeout_sec, timeout_usec);
    client.set_read_timeout(timeout_sec, timeout_usec);
    if (!endpoint_.auth_env.empty()) {
      if (const char* token = std::getenv(endpoint_.auth_env.c_str())) {
        client.set_bearer_token_auth(token);
      }
    }
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (retry_.is_retryable(res->status)) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    throw TransportError("endpoint returned status " +
                         std::to_string(res->status));
  }
  throw TransportError("request failed after " +
                       std::to_string(retry_.max_attempts) +
                       " attempts (" + last_error + ")");
}

namespace {

nlohmann::json parse_response(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what(), body);
  }
}

}  // namespace

std::vector<std::string> HttpModelClient::translate(
    const std::string& context, const std::vector<std::string>& lines,
    const std::vector<std::string>& prefix, const SamplingParams& params,
    int k) {
  nlohmann::json request = {
      {"role", "translator"}, {"context", context},   {"lines", lines},
      {"prefix", prefix},     {"k", k},
  };
  nlohmann::json p = {{"temperature", params.temperature},
                      {"top_k", params.top_k},
                      {"top_p", params.top_p}};
  if (params.seed) p["seed"] = *params.seed;
  request["params"] = p;

  const std::string body = post(request.dump());
  const nlohmann::json response = parse_response(body);
  if (!response.contains("candidates") || !response["candidates"].is_array()) {
    throw ProtocolError("translator response lacks 'candidates'", body);
  }
  std::vector<std::string> candidates;
  for (const auto& c : response["candidates"]) {
    if (!c.is_string()) {
      throw ProtocolError("non-string candidate", body);
    }
    candidates.push_back(c.get<std::string>());
  }
  if (static_cast<int>(candidates.size()) != k) {
    throw ProtocolError("expected " + std::to_string(k) + " candidates, got " +
                            std::to_string(candidates.size()),
                        body);
  }
  return candidates;
}

std::vector<int> HttpModelClient::judge_scores(
    const std::string& source_line, const std::string& context,
    const std::vector<std::string>& candidates) {
  const nlohmann::json request = {{"role", "judge"},
                                  {"source", source_line},
                                  {"context", context},
                                  {"candidates", candidates}};
  const std::string body = post(request.dump());
  const nlohmann::json response = parse_response(body);
  if (!response.contains("scores") || !response["scores"].is_array()) {
    throw ProtocolError("judge response lacks 'scores'", body);
  }
  if (response["scores"].size() != candidates.size()) {
    throw ProtocolError("expected " + std::to_string(candidates.size()) +
                            " scores, got " +
                            std::to_string(response["scores"].size()),
                        body);
  }
  std::vector<int> scores;
  for (const auto& s : response["scores"]) {
    if (!s.is_number()) {
      throw ProtocolError("non-numeric score", body);
    }
    scores.push_back(clip_score(s.get<double>()));
  }
  return scores;
}

std::vector<TermTuple> HttpModelClient::extract_terms(
    const std::vector<std::string>& source_lines,
    const std::vector<std::string>& target_lines) {
  if (source_lines.size() != target_lines.size()) {
    throw ValidationError("extract_terms: line lists must have equal length");
  }
  const nlohmann::json request = {{"role", "extractor"},
                                  {"source_lines", source_lines},
                                  {"target_lines", target_lines}};
  const std::string body = post(request.dump());
  const nlohmann::json response = parse_response(body);
  if (!response.contains("terms") || !response["terms"].is_array()) {
    throw ProtocolError("extractor response lacks 'terms'", body);
  }
  std::vector<TermTuple> terms;
  for (const auto& t : response["terms"]) {
    if (!t.contains("surface") || !t.contains("type") ||
        !t.contains("translation")) {
      throw ProtocolError("term record missing surface/type/translation", body);
    }
    terms.push_back({t["surface"].get<std::string>(),
                     t["type"].get<std::string>(),
                     t["translation"].get<std::string>()});
  }
  return terms;
}

std::vector<std::string> MockTranslator::translate(
    const std::string& context, const std::vector<std::string>& lines,
    const std::vector<std::string>& prefix, const SamplingParams& params,
    int k) {
  (void)context;
  (void)params;
  if (lines.empty() || prefix.size() >= lines.size()) {
    throw ValidationError("mock translator: prefix must be shorter than lines");
  }
  const std::string& line = lines[prefix.size()];
  std::string prefix_key;
  for (const auto& p : prefix) {
    prefix_key += p;
    prefix_key += '\x1f';
  }

  std::vector<std::string> candidates;
  candidates.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const std::string key = line + '\x1f' + prefix_key + '\x1f' +
                            std::to_string(seed_) + '\x1f' + std::to_string(j);
    switch (stable_hash64(key) % 8) {
      case 0: candidates.push_back(line); break;
      case 1: candidates.push_back("Well, " + line); break;
      case 2: candidates.push_back(line + " indeed"); break;
      case 3: candidates.push_back("Oh, " + line); break;
      case 4: candidates.push_back(line + ", you see"); break;
      case 5: candidates.push_back("So " + line); break;
      case 6: candidates.push_back(line + " after all"); break;
      default: candidates.push_back("Ah, " + line); break;
    }
  }
  return candidates;
}

std::vector<int> MockJudge::judge_scores(
    const std::string& source_line, const std::string& context,
    const std::vector<std::string>& candidates) {
  (void)source_line;
  (void)context;
  std::vector<int> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    scores.push_back(static_cast<int>(50 + stable_hash64(c) % 51));
  }
  return scores;
}

std::vector<TermTuple> MockTermExtractor::extract_terms(
    const std::vector<std::string>& source_lines,
    const std::vector<std::string>& target_lines) {
  if (source_lines.size() != target_lines.size()) {
    throw ValidationError("extract_terms: line lists must have equal length");
  }
  std::string joined;
  for (const auto& line : source_lines) {
    joined += line;
    joined += '\n';
  }
  std::vector<TermTuple> found;
  for (const auto& entry : dictionary_) {
    if (joined.find(entry.surface) != std::string::npos) {
      found.push_back(entry);
    }
  }
  // Order by first occurrence in the group text.
  std::stable_sort(found.begin(), found.end(),
                   [&](const TermTuple& a, const TermTuple& b) {
                     return joined.find(a.surface) < joined.find(b.surface);
                   });
  return found;
}

}  // namespace hermes
