#pragma once

#include <array>
#include <cstdio>
#include <string>

namespace hermes::testing {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

// Runs a shell command, capturing stdout; stderr goes to a caller-given
// file (or /dev/null).
inline RunResult run_command(const std::string& command,
                             const std::string& stderr_file = "/dev/null") {
  const std::string full = command + " 2>" + stderr_file;
  FILE* pipe = ::popen(full.c_str(), "r");
  RunResult result;
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = ::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

// Seven-line bilingual fixture modeled on a real drama excerpt: matching
// start times within 0.5 s everywhere, so the whole document pairs up at
// the 0.7 s rule.
inline std::string fixture_ass_en() {
  return
      "[Script Info]\n"
      "ScriptType: v4.00+\n"
      "\n"
      "[Events]\n"
      "Format: Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, Effect, Text\n"
      "Dialogue: 0,0:17:47.50,0:17:50.25,Default,,0,0,0,,My son isn't in his right mind.\n"
      "Dialogue: 0,0:17:51.04,0:17:53.95,Default,,0,0,0,,His entire life, he's chased an impossible dream.\n"
      "Dialogue: 0,0:17:59.83,0:18:04.20,Default,,0,0,0,,But he has a good heart. Please, let him come home.\n"
      "Dialogue: 0,0:18:04.29,0:18:08.66,Default,,0,0,0,,A crime like this can't be overlooked.\n"
      "Dialogue: 0,0:18:08.75,0:18:12.16,Default,,0,0,0,,A violation of the Ethos calls for banishment,\n"
      "Dialogue: 0,0:18:12.25,0:18:16.25,Default,,0,0,0,,but I can sympathize with a young man's dream to change the world.\n"
      "Dialogue: 0,0:18:16.33,0:18:20.58,Default,,0,0,0,,Perhaps in this matter, a lesser sentence may suffice.\n";
}

inline std::string fixture_ass_zh() {
  return
      "[Script Info]\n"
      "ScriptType: v4.00+\n"
      "\n"
      "[Events]\n"
      "Format: Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, Effect, Text\n"
      "Dialogue: 0,0:17:47.00,0:17:50.25,Default,,0,0,0,,我这儿子确实犯了不可饶恕的错误\n"
      "Dialogue: 0,0:17:51.04,0:17:53.95,Default,,0,0,0,,他这辈子 都在追逐一个不可能实现的梦想\n"
      "Dialogue: 0,0:17:59.83,0:18:04.25,Default,,0,0,0,,但他并没有坏心 求你们 放他回家吧\n"
      "Dialogue: 0,0:18:04.33,0:18:06.70,Default,,0,0,0,,这样严重的罪行不能轻易放过\n"
      "Dialogue: 0,0:18:08.75,0:18:12.20,Default,,0,0,0,,违反社会共识的人确实应该遭到驱逐\n"
      "Dialogue: 0,0:18:12.29,0:18:16.25,Default,,0,0,0,,但我也能体会一个年轻人梦想改变世界的雄心\n"
      "Dialogue: 0,0:18:16.33,0:18:20.58,Default,,0,0,0,,就这个案子来说 还是酌情予以轻判为好\n";
}

}  // namespace hermes::testing
