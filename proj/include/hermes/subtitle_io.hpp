#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hermes/subtitle.hpp"

namespace hermes {

// Parses ASS (v4+) text. One Line per Dialogue event; override blocks in
// braces are stripped from the text; events that end up with empty text
// are dropped. Throws ParseError on malformed timecodes (naming the file
// line number) and when no Dialogue event survives.
Subtitle parse_ass(std::string_view text, std::string language = "");

// Parses SRT text. Cue blocks are separated by blank lines; multi-row cue
// text is joined with a single space. Non-monotonic cue indices produce a
// warning, not an error.
Subtitle parse_srt(std::string_view text, std::string language = "",
                   std::vector<std::string>* warnings = nullptr);

// Renders a minimal ASS document. parse_ass(render_ass(s)) reproduces the
// timing of s bit-exactly.
std::string render_ass(const Subtitle& sub);

// Removes lines whose text matches the denylist regex (scene titles,
// annotations and similar noise). line_ids of surviving lines keep their
// original values.
Subtitle drop_noise_lines(const Subtitle& in, const std::string& denylist_regex);

// Pairs source and target lines by start time. For source index i the
// candidate targets are indices [i-M, i+M] clamped to bounds, with
// M = abs(|src| - |tgt|); when M = 0 the window is the single index i.
// The in-window candidate minimizing |start(s) - start(t)| is paired iff
// the difference is <= max_start_delta seconds and the target is still
// free (first come, in source order; ties prefer the lower target index).
AlignedCorpus align_bitext(const Subtitle& src, const Subtitle& tgt,
                           double max_start_delta = 0.7);

// Splits the document into prompt groups: a new group starts at every
// speaker change, and runs longer than n_max lines are hard-split.
// speaker_labels holds one label per line, in line order.
std::vector<PromptGroup> segment_prompts(const Subtitle& src,
                                         std::span<const std::string> speaker_labels,
                                         int n_max);

}  // namespace hermes
