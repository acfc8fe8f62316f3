#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hermes {

// Duration from media start at centisecond resolution.
// Text form is the ASS style "H:MM:SS.cc"; rendering and parsing
// round-trip bit-exactly.
class Timecode {
 public:
  Timecode() = default;
  explicit Timecode(std::int64_t centiseconds);

  static Timecode from_components(std::int64_t hours, int minutes, int seconds,
                                  int centis);
  // Parses "H:MM:SS.cc" (one or more hour digits). Throws ParseError.
  static Timecode parse(std::string_view text);
  // Parses the SRT form "HH:MM:SS,mmm". Sub-centisecond digits are
  // truncated, not rounded, so values land on the ASS centisecond grid.
  static Timecode parse_srt(std::string_view text);

  std::int64_t total_centiseconds() const { return cs_; }
  double seconds() const { return static_cast<double>(cs_) / 100.0; }

  std::string to_string() const;

  friend bool operator==(const Timecode& a, const Timecode& b) = default;
  friend auto operator<=>(const Timecode& a, const Timecode& b) = default;

 private:
  std::int64_t cs_ = 0;
};

}  // namespace hermes
