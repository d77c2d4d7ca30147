// src/text_normalizer.cc

#include "ctclm/text_normalizer.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ctclm/default_rules.h"
#include "ctclm/error.h"
#include "ctclm/utf8.h"
#include "json.hpp"

namespace ctclm {

namespace {

using nlohmann::json;

// Upper bound on whole-pipeline passes. Validated rule sets converge in one
// or two; the bound only guards against pathological maps.
constexpr int kMaxPasses = 8;

char32_t ParseHexCodepoint(const std::string &s) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &used, 16);
  } catch (const std::exception &) {
    throw ConfigError("bad hex code point '" + s + "'");
  }
  if (used != s.size() || v > 0x10FFFF) {
    throw ConfigError("bad hex code point '" + s + "'");
  }
  return static_cast<char32_t>(v);
}

std::u32string ParseHexSequence(const std::string &s) {
  std::u32string out;
  std::istringstream in(s);
  std::string item;
  while (in >> item) out.push_back(ParseHexCodepoint(item));
  return out;
}

std::string HexSequence(std::u32string_view cps) {
  std::string out;
  char buf[16];
  for (char32_t cp : cps) {
    std::snprintf(buf, sizeof(buf), "%04X", static_cast<unsigned>(cp));
    if (!out.empty()) out.push_back(' ');
    out += buf;
  }
  return out;
}

std::size_t MaxKeyLength(const NormalizationRules &rules) {
  std::size_t n = 0;
  for (const auto &[k, v] : rules.codepoint_map) n = std::max(n, k.size());
  return n;
}

std::u32string ApplyCodepointMap(std::u32string_view in,
                                 const NormalizationRules &rules,
                                 std::size_t max_key) {
  if (rules.codepoint_map.empty()) return std::u32string(in);
  std::u32string out;
  out.reserve(in.size());
  std::size_t i = 0;
  std::u32string key;
  while (i < in.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_key, in.size() - i); len > 0; --len) {
      key.assign(in.substr(i, len));
      auto it = rules.codepoint_map.find(key);
      if (it != rules.codepoint_map.end()) {
        out += it->second;
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(in[i++]);
  }
  return out;
}

std::u32string ApplyPunctuationMap(std::u32string_view in,
                                   const NormalizationRules &rules) {
  std::u32string out;
  out.reserve(in.size());
  for (char32_t cp : in) {
    auto it = rules.punctuation_map.find(cp);
    if (it != rules.punctuation_map.end()) {
      out += it->second;
    } else {
      out.push_back(cp);
    }
  }
  return out;
}

bool InRanges(char32_t cp, const std::vector<CodepointRange> &ranges) {
  auto it = std::upper_bound(
      ranges.begin(), ranges.end(), cp,
      [](char32_t v, const CodepointRange &r) { return v < r.first; });
  if (it == ranges.begin()) return false;
  --it;
  return cp >= it->first && cp <= it->last;
}

std::set<char32_t> PunctuationOutputs(const NormalizationRules &rules) {
  std::set<char32_t> out;
  for (const auto &[k, v] : rules.punctuation_map) {
    out.insert(v.begin(), v.end());
  }
  return out;
}

std::u32string NormalizeOnce(std::u32string_view in,
                             const NormalizationRules &rules,
                             std::size_t max_key,
                             const std::set<char32_t> &punct_out) {
  std::u32string s = ApplyCodepointMap(in, rules, max_key);
  s = ApplyPunctuationMap(s, rules);

  std::u32string kept;
  kept.reserve(s.size());
  for (char32_t cp : s) {
    if (IsWhitespace(cp) || InRanges(cp, rules.allowed_ranges) ||
        punct_out.count(cp)) {
      kept.push_back(cp);
    }
  }

  std::u32string out;
  out.reserve(kept.size());
  for (char32_t cp : kept) {
    if (IsWhitespace(cp)) {
      if (rules.whitespace.collapse && !out.empty() && out.back() == U' ') {
        continue;
      }
      out.push_back(U' ');
    } else {
      out.push_back(cp);
    }
  }
  if (rules.whitespace.trim) {
    const auto first = out.find_first_not_of(U' ');
    if (first == std::u32string::npos) return {};
    const auto last = out.find_last_not_of(U' ');
    out = out.substr(first, last - first + 1);
  }
  return out;
}

}  // namespace

void ValidateRules(const NormalizationRules &rules) {
  for (std::size_t i = 0; i < rules.allowed_ranges.size(); ++i) {
    const auto &r = rules.allowed_ranges[i];
    if (r.first > r.last) {
      throw ConfigError("allowed range " + HexSequence({&r.first, 1}) +
                        " has first > last");
    }
    if (i > 0 && rules.allowed_ranges[i - 1].last >= r.first) {
      throw ConfigError("allowed_ranges must be sorted and non-overlapping");
    }
  }
  const std::size_t max_key = MaxKeyLength(rules);
  for (const auto &[k, v] : rules.codepoint_map) {
    if (k.empty()) throw ConfigError("codepoint_map has an empty key");
    if (ApplyCodepointMap(v, rules, max_key) != v) {
      throw ConfigError("codepoint_map output " + HexSequence(v) +
                        " is itself rewritten by the map");
    }
  }
  for (const auto &[k, v] : rules.punctuation_map) {
    const std::u32string again =
        ApplyPunctuationMap(ApplyCodepointMap(v, rules, max_key), rules);
    if (again != v) {
      throw ConfigError("punctuation_map output " + HexSequence(v) +
                        " is itself rewritten by the rules");
    }
  }
}

NormalizationRules ParseRules(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw FormatError(std::string("rules: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("rules: top level must be an object");

  NormalizationRules rules;
  try {
    if (doc.contains("codepoint_map")) {
      for (const auto &[k, v] : doc.at("codepoint_map").items()) {
        rules.codepoint_map[ParseHexSequence(k)] =
            ParseHexSequence(v.get<std::string>());
      }
    }
    if (doc.contains("punctuation_map")) {
      for (const auto &[k, v] : doc.at("punctuation_map").items()) {
        const std::u32string key = ParseHexSequence(k);
        if (key.size() != 1) {
          throw ConfigError("punctuation_map key '" + k +
                            "' must be a single code point");
        }
        rules.punctuation_map[key[0]] = ParseHexSequence(v.get<std::string>());
      }
    }
    if (doc.contains("allowed_ranges")) {
      for (const auto &pair : doc.at("allowed_ranges")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw FormatError("rules: allowed_ranges entries are [first, last]");
        }
        rules.allowed_ranges.push_back(
            {ParseHexCodepoint(pair[0].get<std::string>()),
             ParseHexCodepoint(pair[1].get<std::string>())});
      }
    }
    if (doc.contains("whitespace")) {
      const auto &ws = doc.at("whitespace");
      rules.whitespace.collapse = ws.value("collapse", true);
      rules.whitespace.trim = ws.value("trim", true);
    }
  } catch (const json::exception &e) {
    throw FormatError(std::string("rules: ") + e.what());
  }
  ValidateRules(rules);
  return rules;
}

NormalizationRules LoadRules(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open rules file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseRules(ss.str());
}

std::string SerializeRules(const NormalizationRules &rules) {
  json doc;
  doc["codepoint_map"] = json::object();
  for (const auto &[k, v] : rules.codepoint_map) {
    doc["codepoint_map"][HexSequence(k)] = HexSequence(v);
  }
  doc["punctuation_map"] = json::object();
  for (const auto &[k, v] : rules.punctuation_map) {
    doc["punctuation_map"][HexSequence({&k, 1})] = HexSequence(v);
  }
  doc["allowed_ranges"] = json::array();
  for (const auto &r : rules.allowed_ranges) {
    doc["allowed_ranges"].push_back(
        {HexSequence({&r.first, 1}), HexSequence({&r.last, 1})});
  }
  doc["whitespace"] = {{"collapse", rules.whitespace.collapse},
                       {"trim", rules.whitespace.trim}};
  return doc.dump(2) + "\n";
}

const NormalizationRules &DefaultRules() {
  static const NormalizationRules rules = ParseRules(kDefaultRulesJson);
  return rules;
}

std::string NormalizeTranscript(std::string_view raw,
                                const NormalizationRules &rules) {
  const std::size_t max_key = MaxKeyLength(rules);
  const std::set<char32_t> punct_out = PunctuationOutputs(rules);
  std::u32string cur = DecodeUtf8(raw);
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    std::u32string next = NormalizeOnce(cur, rules, max_key, punct_out);
    if (next == cur) break;
    cur = std::move(next);
  }
  return EncodeUtf8(cur);
}

// ---------------------------------------------------------------------------

TokenInventory::TokenInventory(std::vector<std::string> tokens,
                               int blank_index, int delimiter_index,
                               std::optional<int> unk_index)
    : tokens_(std::move(tokens)),
      blank_index_(blank_index),
      delimiter_index_(delimiter_index),
      unk_index_(unk_index) {
  const int n = size();
  auto in_range = [n](int i) { return i >= 0 && i < n; };
  if (!in_range(blank_index_) || !in_range(delimiter_index_) ||
      (unk_index_ && !in_range(*unk_index_))) {
    throw ConfigError("token inventory: special index out of range");
  }
  if (blank_index_ == delimiter_index_ ||
      (unk_index_ &&
       (*unk_index_ == blank_index_ || *unk_index_ == delimiter_index_))) {
    throw ConfigError("token inventory: special indices must be distinct");
  }
  std::set<std::string> seen;
  for (int i = 0; i < n; ++i) {
    if (!seen.insert(tokens_[i]).second) {
      throw ConfigError("token inventory: duplicate token '" + tokens_[i] +
                        "'");
    }
    if (!IsSpecial(i) && DecodeUtf8(tokens_[i]).size() != 1) {
      throw ConfigError("token inventory: token '" + tokens_[i] +
                        "' is not a single code point");
    }
  }
}

std::optional<int> TokenInventory::IndexOf(std::string_view token) const {
  for (int i = 0; i < size(); ++i) {
    if (tokens_[i] == token) return i;
  }
  return std::nullopt;
}

TokenInventory TokenInventory::FromJson(std::string_view json_text) {
  try {
    const json doc = json::parse(json_text);
    std::optional<int> unk;
    if (doc.contains("unk_index") && !doc.at("unk_index").is_null()) {
      unk = doc.at("unk_index").get<int>();
    }
    return TokenInventory(doc.at("tokens").get<std::vector<std::string>>(),
                          doc.at("blank_index").get<int>(),
                          doc.at("delimiter_index").get<int>(), unk);
  } catch (const json::exception &e) {
    throw FormatError(std::string("inventory: ") + e.what());
  }
}

TokenInventory TokenInventory::Load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open inventory file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

std::string TokenInventory::ToJson() const {
  json doc;
  doc["tokens"] = tokens_;
  doc["blank_index"] = blank_index_;
  doc["delimiter_index"] = delimiter_index_;
  doc["unk_index"] = unk_index_ ? json(*unk_index_) : json(nullptr);
  return doc.dump(2) + "\n";
}

TokenInventory BuildTokenInventory(const std::vector<std::string> &corpus,
                                   const std::vector<std::string> &extra_tokens,
                                   bool with_unk) {
  std::set<char32_t> chars;
  for (const auto &line : corpus) {
    for (char32_t cp : DecodeUtf8(line)) {
      if (!IsWhitespace(cp)) chars.insert(cp);
    }
  }
  for (const auto &tok : extra_tokens) {
    const std::u32string cps = DecodeUtf8(tok);
    if (cps.size() != 1) {
      throw ConfigError("extra token '" + tok +
                        "' must be exactly one code point");
    }
    chars.insert(cps[0]);
  }
  if (chars.empty()) {
    throw ConfigError("token inventory: no characters in corpus or extras");
  }

  std::vector<std::string> tokens;
  tokens.reserve(chars.size() + 3);
  for (char32_t cp : chars) {
    std::string s = EncodeUtf8(cp);
    if (s == kDelimiterToken) {
      throw ConfigError("corpus character '|' collides with the delimiter");
    }
    tokens.push_back(std::move(s));
  }
  const int blank = static_cast<int>(tokens.size());
  tokens.emplace_back(kBlankToken);
  const int delim = static_cast<int>(tokens.size());
  tokens.emplace_back(kDelimiterToken);
  std::optional<int> unk;
  if (with_unk) {
    unk = static_cast<int>(tokens.size());
    tokens.emplace_back(kUnkToken);
  }
  return TokenInventory(std::move(tokens), blank, delim, unk);
}

}  // namespace ctclm
