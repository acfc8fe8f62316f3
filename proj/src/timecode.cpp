#include "hermes/timecode.hpp"

#include <cctype>
#include <charconv>

#include "hermes/errors.hpp"

namespace hermes {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::int64_t to_int(std::string_view s) {
  std::int64_t v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace

Timecode::Timecode(std::int64_t centiseconds) : cs_(centiseconds) {
  if (cs_ < 0) throw ValidationError("timecode must be non-negative");
}

Timecode Timecode::from_components(std::int64_t hours, int minutes,
                                   int seconds, int centis) {
  if (hours < 0 || minutes < 0 || minutes > 59 || seconds < 0 ||
      seconds > 59 || centis < 0 || centis > 99) {
    throw ValidationError("timecode component out of range");
  }
  return Timecode(((hours * 60 + minutes) * 60 + seconds) * 100 + centis);
}

Timecode Timecode::parse(std::string_view text) {
  // H:MM:SS.cc
  auto c1 = text.find(':');
  auto c2 = text.find(':', c1 == std::string_view::npos ? 0 : c1 + 1);
  auto dot = text.rfind('.');
  if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
      dot == std::string_view::npos || dot < c2) {
    throw ParseError("malformed timecode '" + std::string(text) + "'");
  }
  std::string_view h = text.substr(0, c1);
  std::string_view m = text.substr(c1 + 1, c2 - c1 - 1);
  std::string_view s = text.substr(c2 + 1, dot - c2 - 1);
  std::string_view cc = text.substr(dot + 1);
  if (!all_digits(h) || !all_digits(m) || m.size() != 2 || !all_digits(s) ||
      s.size() != 2 || !all_digits(cc) || cc.size() != 2) {
    throw ParseError("malformed timecode '" + std::string(text) + "'");
  }
  std::int64_t minutes = to_int(m);
  std::int64_t seconds = to_int(s);
  if (minutes > 59 || seconds > 59) {
    throw ParseError("malformed timecode '" + std::string(text) + "'");
  }
  return Timecode(((to_int(h) * 60 + minutes) * 60 + seconds) * 100 +
                  to_int(cc));
}

Timecode Timecode::parse_srt(std::string_view text) {
  // HH:MM:SS,mmm
  auto c1 = text.find(':');
  auto c2 = text.find(':', c1 == std::string_view::npos ? 0 : c1 + 1);
  auto comma = text.rfind(',');
  if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
      comma == std::string_view::npos || comma < c2) {
    throw ParseError("malformed SRT timecode '" + std::string(text) + "'");
  }
  std::string_view h = text.substr(0, c1);
  std::string_view m = text.substr(c1 + 1, c2 - c1 - 1);
  std::string_view s = text.substr(c2 + 1, comma - c2 - 1);
  std::string_view ms = text.substr(comma + 1);
  if (!all_digits(h) || !all_digits(m) || !all_digits(s) || !all_digits(ms) ||
      ms.size() != 3) {
    throw ParseError("malformed SRT timecode '" + std::string(text) + "'");
  }
  std::int64_t minutes = to_int(m);
  std::int64_t seconds = to_int(s);
  if (minutes > 59 || seconds > 59) {
    throw ParseError("malformed SRT timecode '" + std::string(text) + "'");
  }
  return Timecode(((to_int(h) * 60 + minutes) * 60 + seconds) * 100 +
                  to_int(ms) / 10);
}

std::string Timecode::to_string() const {
  std::int64_t total_s = cs_ / 100;
  int cc = static_cast<int>(cs_ % 100);
  std::int64_t h = total_s / 3600;
  int m = static_cast<int>((total_s / 60) % 60);
  int s = static_cast<int>(total_s % 60);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld:%02d:%02d.%02d",
                static_cast<long long>(h), m, s, cc);
  return buf;
}

}  // namespace hermes
