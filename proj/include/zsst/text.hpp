#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace zsst {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool is_punct_only(std::string_view s);

// A whitespace-delimited token with leading/trailing ASCII punctuation
// stripped. begin/end are the character span of the stripped core inside
// the original text, so masking can replace exactly that occurrence.
struct TokenSpan {
  std::string token;  // original case, punctuation-stripped core
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open
};

// Whitespace split; per token, leading and trailing punctuation is stripped
// (inner punctuation such as apostrophes and hyphens is kept). Tokens that
// are empty after stripping are dropped.
std::vector<TokenSpan> tokenize_with_spans(std::string_view text);

// Lowercased punctuation-stripped tokens only (no spans).
std::vector<std::string> tokenize_lower(std::string_view text);

}  // namespace zsst
