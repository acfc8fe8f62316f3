#include "hermes/subtitle_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>

#include "hermes/errors.hpp"

namespace hermes {

const char* to_string(BoundaryReason reason) {
  switch (reason) {
    case BoundaryReason::speaker_turn: return "speaker_turn";
    case BoundaryReason::max_lines: return "max_lines";
    case BoundaryReason::document_end: return "document_end";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    std::string_view row = text.substr(pos, nl - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    out.push_back(row);
    pos = nl + 1;
  }
  if (!out.empty() && !text.empty() && text.back() == '\n') out.pop_back();
  return out;
}

// Strips {...} override blocks and turns \N, \n, \h into spaces.
std::string clean_ass_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool in_brace = false;
  for (size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c == '{') {
      in_brace = true;
      continue;
    }
    if (c == '}') {
      in_brace = false;
      continue;
    }
    if (in_brace) continue;
    if (c == '\\' && i + 1 < raw.size()) {
      char n = raw[i + 1];
      if (n == 'N' || n == 'n' || n == 'h') {
        out.push_back(' ');
        ++i;
        continue;
      }
    }
    out.push_back(c);
  }
  return trim(out);
}

void sort_and_number(Subtitle& sub) {
  std::stable_sort(sub.lines.begin(), sub.lines.end(),
                   [](const Line& a, const Line& b) { return a.start < b.start; });
  int id = 1;
  for (auto& line : sub.lines) line.line_id = id++;
}

}  // namespace

Subtitle parse_ass(std::string_view text, std::string language) {
  Subtitle sub;
  sub.language = std::move(language);

  // Field order of Dialogue rows, from the most recent Format: row.
  std::vector<std::string> format = {"Layer",   "Start",   "End",
                                     "Style",   "Name",    "MarginL",
                                     "MarginR", "MarginV", "Effect",
                                     "Text"};
  auto rows = split_lines(text);
  for (size_t row_no = 0; row_no < rows.size(); ++row_no) {
    std::string row = trim(rows[row_no]);
    if (row.starts_with("Format:")) {
      format.clear();
      std::stringstream ss(row.substr(7));
      std::string field;
      while (std::getline(ss, field, ',')) format.push_back(trim(field));
      continue;
    }
    if (!row.starts_with("Dialogue:")) continue;

    std::string body = row.substr(9);
    // All fields but the last are comma-free; Text may contain commas.
    std::vector<std::string> fields;
    size_t pos = 0;
    for (size_t i = 0; i + 1 < format.size(); ++i) {
      size_t comma = body.find(',', pos);
      if (comma == std::string::npos) {
        throw ParseError("line " + std::to_string(row_no + 1) +
                         ": Dialogue event has too few fields");
      }
      fields.push_back(trim(body.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    fields.push_back(body.substr(pos));

    Line line;
    for (size_t i = 0; i < format.size(); ++i) {
      const std::string& name = format[i];
      try {
        if (name == "Start") line.start = Timecode::parse(fields[i]);
        if (name == "End") line.end = Timecode::parse(fields[i]);
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(row_no + 1) + ": " +
                         e.what());
      }
      if (name == "Text") line.text = clean_ass_text(fields[i]);
    }
    if (line.start > line.end) {
      throw ParseError("line " + std::to_string(row_no + 1) +
                       ": start is after end");
    }
    if (line.text.empty()) continue;
    sub.lines.push_back(std::move(line));
  }

  if (sub.lines.empty()) {
    throw ParseError("empty document: no Dialogue events");
  }
  sort_and_number(sub);
  return sub;
}

Subtitle parse_srt(std::string_view text, std::string language,
                   std::vector<std::string>* warnings) {
  Subtitle sub;
  sub.language = std::move(language);

  auto rows = split_lines(text);
  size_t i = 0;
  int block_index = 0;
  long long last_cue_index = -1;
  while (i < rows.size()) {
    while (i < rows.size() && trim(rows[i]).empty()) ++i;
    if (i >= rows.size()) break;
    ++block_index;

    std::string first = trim(rows[i]);
    // Optional numeric cue index row.
    if (!first.empty() &&
        std::all_of(first.begin(), first.end(), [](unsigned char c) {
          return std::isdigit(c);
        })) {
      long long idx = std::atoll(first.c_str());
      if (idx <= last_cue_index && warnings) {
        warnings->push_back("block " + std::to_string(block_index) +
                            ": non-monotonic cue index " + first);
      }
      last_cue_index = std::max(last_cue_index, idx);
      ++i;
      if (i >= rows.size()) {
        throw ParseError("block " + std::to_string(block_index) +
                         ": missing time line");
      }
      first = trim(rows[i]);
    }

    size_t arrow = first.find("-->");
    if (arrow == std::string::npos) {
      throw ParseError("block " + std::to_string(block_index) +
                       ": missing '-->' time line");
    }
    Line line;
    try {
      line.start = Timecode::parse_srt(trim(first.substr(0, arrow)));
      line.end = Timecode::parse_srt(trim(first.substr(arrow + 3)));
    } catch (const ParseError& e) {
      throw ParseError("block " + std::to_string(block_index) + ": " +
                       e.what());
    }
    if (line.start > line.end) {
      throw ParseError("block " + std::to_string(block_index) +
                       ": start is after end");
    }
    ++i;

    std::string joined;
    while (i < rows.size() && !trim(rows[i]).empty()) {
      if (!joined.empty()) joined += ' ';
      joined += trim(rows[i]);
      ++i;
    }
    line.text = joined;
    if (line.text.empty()) {
      throw ParseError("block " + std::to_string(block_index) +
                       ": cue has no text");
    }
    sub.lines.push_back(std::move(line));
  }

  if (sub.lines.empty()) throw ParseError("empty document: no cues");
  sort_and_number(sub);
  return sub;
}

std::string render_ass(const Subtitle& sub) {
  std::string out;
  out += "[Script Info]\n";
  out += "ScriptType: v4.00+\n";
  if (!sub.language.empty()) out += "; Language: " + sub.language + "\n";
  out += "\n[Events]\n";
  out +=
      "Format: Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, "
      "Effect, Text\n";
  for (const Line& line : sub.lines) {
    out += "Dialogue: 0," + line.start.to_string() + "," +
           line.end.to_string() + ",Default,,0,0,0,," + line.text + "\n";
  }
  return out;
}

Subtitle drop_noise_lines(const Subtitle& in, const std::string& denylist_regex) {
  if (denylist_regex.empty()) return in;
  std::regex re(denylist_regex);
  Subtitle out;
  out.language = in.language;
  for (const Line& line : in.lines) {
    if (!std::regex_search(line.text, re)) out.lines.push_back(line);
  }
  return out;
}

AlignedCorpus align_bitext(const Subtitle& src, const Subtitle& tgt,
                           double max_start_delta) {
  if (src.empty() || tgt.empty()) {
    throw ValidationError("align_bitext: both documents must be non-empty");
  }
  if (!(max_start_delta > 0)) {
    throw ValidationError("align_bitext: max_start_delta must be > 0");
  }

  const auto n_src = static_cast<std::ptrdiff_t>(src.size());
  const auto n_tgt = static_cast<std::ptrdiff_t>(tgt.size());
  const std::ptrdiff_t margin = std::abs(n_src - n_tgt);

  AlignedCorpus corpus;
  std::vector<bool> target_taken(tgt.size(), false);

  for (std::ptrdiff_t i = 0; i < n_src; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - margin);
    const std::ptrdiff_t hi = std::min(n_tgt - 1, i + margin);
    const double s_start = src.lines[i].start.seconds();

    std::ptrdiff_t best = -1;
    double best_delta = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (target_taken[j]) continue;
      double delta = std::abs(s_start - tgt.lines[j].start.seconds());
      if (delta > max_start_delta) continue;
      if (best < 0 || delta < best_delta) {
        best = j;
        best_delta = delta;
      }
    }
    if (best >= 0) {
      target_taken[best] = true;
      corpus.pairs.emplace_back(src.lines[i].line_id, tgt.lines[best].line_id);
    } else {
      corpus.unmatched_source.push_back(src.lines[i].line_id);
    }
  }
  for (std::ptrdiff_t j = 0; j < n_tgt; ++j) {
    if (!target_taken[j]) corpus.unmatched_target.push_back(tgt.lines[j].line_id);
  }
  return corpus;
}

std::vector<PromptGroup> segment_prompts(const Subtitle& src,
                                         std::span<const std::string> speaker_labels,
                                         int n_max) {
  if (speaker_labels.size() != src.size()) {
    throw ValidationError("segment_prompts: one speaker label per line required");
  }
  if (n_max < 1) throw ValidationError("segment_prompts: n_max must be >= 1");

  std::vector<PromptGroup> groups;
  PromptGroup current;
  current.group_id = 1;

  auto close = [&](BoundaryReason reason) {
    current.boundary_reason = reason;
    groups.push_back(std::move(current));
    current = PromptGroup{};
    current.group_id = static_cast<int>(groups.size()) + 1;
  };

  for (size_t i = 0; i < src.size(); ++i) {
    current.line_ids.push_back(src.lines[i].line_id);
    const bool last = (i + 1 == src.size());
    if (last) {
      close(BoundaryReason::document_end);
      break;
    }
    if (speaker_labels[i + 1] != speaker_labels[i]) {
      close(BoundaryReason::speaker_turn);
    } else if (static_cast<int>(current.line_ids.size()) >= n_max) {
      close(BoundaryReason::max_lines);
    }
  }
  return groups;
}

}  // namespace hermes
