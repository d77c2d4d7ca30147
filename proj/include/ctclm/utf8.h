// include/ctclm/utf8.h
//
// Minimal UTF-8 <-> code point conversion. Invalid byte sequences decode to
// U+FFFD so that downstream filtering can drop them.

#ifndef CTCLM_UTF8_H_
#define CTCLM_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace ctclm {

std::u32string DecodeUtf8(std::string_view bytes);

std::string EncodeUtf8(std::u32string_view cps);

std::string EncodeUtf8(char32_t cp);

// True for the whitespace code points we collapse (ASCII space/controls,
// NBSP, the U+2000 block spaces, line/paragraph separators, ideographic
// space).
bool IsWhitespace(char32_t cp);

// Splits on runs of whitespace; no empty fields.
std::vector<std::string> SplitWords(std::string_view text);

}  // namespace ctclm

#endif  // CTCLM_UTF8_H_
