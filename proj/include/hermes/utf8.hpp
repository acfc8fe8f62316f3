#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hermes {

// One decoded Unicode scalar with its byte extent in the source string.
struct Utf8Scalar {
  char32_t value = 0;
  std::size_t byte_offset = 0;
  std::size_t byte_length = 0;
};

// Decodes UTF-8 into scalars. Invalid sequences decode as U+FFFD covering
// one byte, so offsets always tile the input.
std::vector<Utf8Scalar> decode_utf8(std::string_view text);

std::u32string to_u32(std::string_view text);
std::string to_utf8(std::u32string_view text);

}  // namespace hermes
