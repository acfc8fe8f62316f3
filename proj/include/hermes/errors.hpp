#pragma once

#include <stdexcept>
#include <string>

namespace hermes {

// Malformed input file (subtitle, embedding, annotation, ...).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input parsed but violates a documented precondition or schema.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A model endpoint answered, but not in the agreed wire format.
// Keeps the raw response body so failures can be audited offline.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& msg, std::string raw_body)
      : std::runtime_error(msg), raw_body_(std::move(raw_body)) {}
  const std::string& raw_body() const { return raw_body_; }

 private:
  std::string raw_body_;
};

// Transport-level failure that survived the retry policy.
class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hermes
