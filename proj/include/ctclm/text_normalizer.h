// include/ctclm/text_normalizer.h
//
// Rule-driven transcript normalization and the character token inventory
// that fixes the column order of acoustic logits.

#ifndef CTCLM_TEXT_NORMALIZER_H_
#define CTCLM_TEXT_NORMALIZER_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctclm {

struct CodepointRange {
  char32_t first = 0;
  char32_t last = 0;  // inclusive
};

struct WhitespacePolicy {
  bool collapse = true;
  bool trim = true;
};

// Rules are applied in a fixed order: codepoint_map, punctuation_map,
// range filter, whitespace policy.
struct NormalizationRules {
  // Source code point sequence -> canonical sequence. Longest match wins.
  std::map<std::u32string, std::u32string> codepoint_map;
  // Punctuation code point -> replacement (empty deletes it). Replacement
  // code points survive the range filter.
  std::map<char32_t, std::u32string> punctuation_map;
  // Sorted, non-overlapping.
  std::vector<CodepointRange> allowed_ranges;
  WhitespacePolicy whitespace;
};

// Throws ConfigError when the invariants do not hold (overlapping or unsorted
// ranges, a map whose outputs are rewritten by the map itself, ...).
void ValidateRules(const NormalizationRules &rules);

// Parses the JSON rules document. Code points are written as hex strings;
// sequences are space separated ("09A1 09BC").
NormalizationRules ParseRules(std::string_view json_text);
NormalizationRules LoadRules(const std::string &path);
std::string SerializeRules(const NormalizationRules &rules);

// The rule set bundled with the library (data/bn_rules.json).
const NormalizationRules &DefaultRules();

std::string NormalizeTranscript(std::string_view raw,
                                const NormalizationRules &rules);

inline constexpr std::string_view kBlankToken = "<blank>";
inline constexpr std::string_view kDelimiterToken = "|";
inline constexpr std::string_view kUnkToken = "<unk>";

class TokenInventory {
 public:
  // Throws ConfigError on duplicate tokens, out-of-range or colliding
  // special indices, or a non-special token that is not one code point.
  TokenInventory(std::vector<std::string> tokens, int blank_index,
                 int delimiter_index, std::optional<int> unk_index);

  static TokenInventory FromJson(std::string_view json_text);
  static TokenInventory Load(const std::string &path);
  std::string ToJson() const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string &token(int index) const { return tokens_.at(index); }
  const std::vector<std::string> &tokens() const { return tokens_; }
  int blank_index() const { return blank_index_; }
  int delimiter_index() const { return delimiter_index_; }
  std::optional<int> unk_index() const { return unk_index_; }

  bool IsSpecial(int index) const {
    return index == blank_index_ || index == delimiter_index_ ||
           (unk_index_ && index == *unk_index_);
  }
  std::optional<int> IndexOf(std::string_view token) const;

  bool operator==(const TokenInventory &other) const = default;

 private:
  std::vector<std::string> tokens_;
  int blank_index_;
  int delimiter_index_;
  std::optional<int> unk_index_;
};

// Distinct non-whitespace characters of `corpus` plus `extra_tokens`,
// sorted by code point, followed by blank, delimiter and (optionally) unk.
TokenInventory BuildTokenInventory(const std::vector<std::string> &corpus,
                                   const std::vector<std::string> &extra_tokens,
                                   bool with_unk = true);

}  // namespace ctclm

#endif  // CTCLM_TEXT_NORMALIZER_H_
