#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xlie {
namespace utf8 {

// Decodes UTF-8 into code points. Invalid byte sequences decode byte-wise as
// U+FFFD so that offsets stay well defined on arbitrary model output.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);

// Number of code points in a UTF-8 string.
std::size_t length(std::string_view text);

// Half-open code-point interval [start, end).
struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;

  bool overlaps(const Interval& other) const {
    return start < other.end && other.start < end;
  }
  bool operator==(const Interval& other) const = default;
};

// Leftmost occurrence of `needle` in `haystack` at or after code-point
// position `from`. Empty needles never match.
std::optional<std::size_t> find(const std::u32string& haystack,
                                const std::u32string& needle,
                                std::size_t from = 0);

bool contains(std::string_view haystack, std::string_view needle);

// Code-point substring, clamped to the string bounds.
std::string substr(std::string_view text, std::size_t pos, std::size_t count);

// Maps full-width ASCII forms (U+FF01..U+FF5E) and the ideographic space to
// their ASCII counterparts. Used only behind the explicit span-normalization
// flag; never applied silently.
std::string fold_fullwidth(std::string_view text);

}  // namespace utf8
}  // namespace xlie
