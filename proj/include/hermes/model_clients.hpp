#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hermes {

// Sampling knobs forwarded verbatim to the translator endpoint.
struct SamplingParams {
  double temperature = 1.0;
  int top_k = 40;
  double top_p = 0.9;
  std::optional<std::int64_t> seed;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_backoff_ms = 200;
  double backoff_multiplier = 2.0;  // > 1 so the backoff strictly increases
  std::vector<int> retryable_statuses = {408, 429, 500, 502, 503, 504};

  bool is_retryable(int status) const;
  int backoff_ms(int attempt) const;  // attempt is 1-based
};

struct Endpoint {
  std::string base_url;      // http://host:port[/path]
  std::string auth_env;      // name of the env var holding the bearer token
  double timeout_s = 30.0;
};

struct TermTuple {
  std::string surface;
  std::string term_type;
  std::string translation;
};

class TranslatorClient {
 public:
  virtual ~TranslatorClient() = default;
  // Returns exactly k candidate translations of lines[prefix.size()],
  // given the chosen translations of the preceding lines as prefix.
  virtual std::vector<std::string> translate(
      const std::string& context, const std::vector<std::string>& lines,
      const std::vector<std::string>& prefix, const SamplingParams& params,
      int k) = 0;
};

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  // One integer score in [0, 100] per candidate, same order.
  virtual std::vector<int> judge_scores(
      const std::string& source_line, const std::string& context,
      const std::vector<std::string>& candidates) = 0;
};

class TermExtractorClient {
 public:
  virtual ~TermExtractorClient() = default;
  virtual std::vector<TermTuple> extract_terms(
      const std::vector<std::string>& source_lines,
      const std::vector<std::string>& target_lines) = 0;
};

// JSON-over-HTTP client for all three roles. One POST per call:
//   translator: {"role":"translator","context",...,"lines":[...],"prefix":[...],
//                "k":int,"params":{...}}              -> {"candidates":[...]}
//   judge:      {"role":"judge","source",...,"candidates":[...]} -> {"scores":[...]}
//   extractor:  {"role":"extractor","source_lines":[...],"target_lines":[...]}
//                                                     -> {"terms":[{...}...]}
// Transport failures and retryable statuses are retried per policy with
// the identical body; protocol violations raise ProtocolError carrying the
// raw response. The bearer token is read from the endpoint's env var and
// never logged.
class HttpModelClient : public TranslatorClient,
                        public JudgeClient,
                        public TermExtractorClient {
 public:
  HttpModelClient(Endpoint endpoint, RetryPolicy retry);

  std::vector<std::string> translate(const std::string& context,
                                     const std::vector<std::string>& lines,
                                     const std::vector<std::string>& prefix,
                                     const SamplingParams& params,
                                     int k) override;
  std::vector<int> judge_scores(const std::string& source_line,
                                const std::string& context,
                                const std::vector<std::string>& candidates) override;
  std::vector<TermTuple> extract_terms(
      const std::vector<std::string>& source_lines,
      const std::vector<std::string>& target_lines) override;

 private:
  std::string post(const std::string& body);

  Endpoint endpoint_;
  RetryPolicy retry_;
  std::string host_;  // scheme://host:port
  std::string path_;
};

// FNV-1a, stable across platforms and runs.
std::uint64_t stable_hash64(std::string_view data);

// Deterministic in-process stand-ins: pure functions of (inputs, seed),
// so repeated calls are bit-identical and the full pipeline runs without
// a network.
class MockTranslator : public TranslatorClient {
 public:
  explicit MockTranslator(std::uint64_t seed) : seed_(seed) {}
  std::vector<std::string> translate(const std::string& context,
                                     const std::vector<std::string>& lines,
                                     const std::vector<std::string>& prefix,
                                     const SamplingParams& params,
                                     int k) override;

 private:
  std::uint64_t seed_;
};

class MockJudge : public JudgeClient {
 public:
  std::vector<int> judge_scores(const std::string& source_line,
                                const std::string& context,
                                const std::vector<std::string>& candidates) override;
};

class MockTermExtractor : public TermExtractorClient {
 public:
  explicit MockTermExtractor(std::vector<TermTuple> dictionary)
      : dictionary_(std::move(dictionary)) {}
  std::vector<TermTuple> extract_terms(
      const std::vector<std::string>& source_lines,
      const std::vector<std::string>& target_lines) override;

 private:
  std::vector<TermTuple> dictionary_;
};

// Rounds half up, clips to [0, 100].
int clip_score(double raw);

}  // namespace hermes
