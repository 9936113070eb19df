#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcdst {

/// A token together with the byte range it was cut from in the source text.
struct TokenSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lowercases ASCII, splits punctuation into separate tokens and drops
/// whitespace. Apostrophes between letters ("doesn't") and ':' or '.'
/// between digits ("15:30", "3.5") stay inside the token.
std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens with single spaces.
std::string detokenize(std::span<const std::string> tokens);

/// Canonical form used for every value comparison: tokenized, re-joined with
/// single spaces, and the don't-care surface variants folded to "dontcare".
std::string normalize_value(std::string_view value);

inline constexpr std::string_view kDontCare = "dontcare";

}  // namespace rcdst
