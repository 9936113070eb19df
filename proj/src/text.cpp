#include "rcdst/text.hpp"

#include <cctype>

namespace rcdst {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Bytes >= 0x80 belong to UTF-8 sequences and are kept inside words.
bool is_word(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

bool is_alpha(unsigned char c) { return c >= 0x80 || std::isalpha(c) != 0; }

bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

bool is_connector(std::string_view text, std::size_t i) {
  if (i == 0 || i + 1 >= text.size()) return false;
  const auto prev = static_cast<unsigned char>(text[i - 1]);
  const auto next = static_cast<unsigned char>(text[i + 1]);
  switch (text[i]) {
    case '\'':
      return is_alpha(prev) && is_alpha(next);
    case ':':
    case '.':
      return is_digit(prev) && is_digit(next);
    default:
      return false;
  }
}

}  // namespace

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (!is_word(c)) {
      out.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size()) {
      const auto d = static_cast<unsigned char>(text[j]);
      if (is_word(d) || is_connector(text, j)) {
        ++j;
      } else {
        break;
      }
    }
    std::string token(text.substr(i, j - i));
    for (auto& ch : token) {
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    out.push_back({std::move(token), i, j});
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string normalize_value(std::string_view value) {
  const auto tokens = tokenize(value);
  std::string joined = detokenize(tokens);
  if (joined == "dont care" || joined == "don't care" || joined == "do n't care" ||
      joined == "dontcare") {
    return std::string(kDontCare);
  }
  return joined;
}

}  // namespace rcdst
