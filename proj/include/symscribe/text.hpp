#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace symscribe {

// Half-open character range. Offsets count Unicode scalar values, not bytes.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool contains(const Span& other) const { return start <= other.start && other.end <= end; }
  bool overlaps(const Span& other) const { return start < other.end && other.start < end; }

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

namespace utf8 {

// Invalid byte sequences decode to U+FFFD, one replacement per offending byte.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

// Re-encodes so the result is always valid UTF-8.
std::string sanitize(std::string_view bytes);

std::size_t length(std::string_view bytes);

}  // namespace utf8

bool is_space(char32_t c);
bool is_word_char(char32_t c);
char32_t fold_case(char32_t c);

// True when a match may start or end at `pos`: the characters on either side
// are not both word characters.
bool is_word_boundary(std::u32string_view text, std::size_t pos);

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
std::u32string_view trim(std::u32string_view s);

struct NormalizationPolicy {
  bool case_fold = true;
  bool collapse_whitespace = true;

  friend bool operator==(const NormalizationPolicy&, const NormalizationPolicy&) = default;
};

// Normalized text plus, for each normalized character, the index of the
// source character it came from.
struct NormalizedText {
  std::u32string text;
  std::vector<std::size_t> source;
};

NormalizedText normalize_mapped(std::u32string_view text, const NormalizationPolicy& policy);
std::u32string normalize(std::u32string_view text, const NormalizationPolicy& policy);
std::string normalize_utf8(std::string_view text, const NormalizationPolicy& policy);

// Non-empty, non-'#' lines of a plain-text list file, trimmed.
std::vector<std::string> read_list_file(const std::string& path);
std::vector<std::string> parse_list(std::string_view content);

std::string read_file(const std::string& path);

}  // namespace symscribe
