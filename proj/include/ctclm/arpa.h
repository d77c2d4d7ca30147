// include/ctclm/arpa.h
//
// ARPA text serialization. The writer is byte-deterministic: entries are
// sorted by their word strings, values carry 7 fractional digits, fields are
// tab separated and the backoff column is omitted for n-grams that are not
// contexts.

#ifndef CTCLM_ARPA_H_
#define CTCLM_ARPA_H_

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ctclm/ngram_lm.h"

namespace ctclm {

void WriteArpa(const NGramModel &model, std::ostream &out);

// Throws ParseError (with line number) on malformed headers, non-numeric
// fields, or a declared count that disagrees with the section body. A file
// without <unk> gets one at `unk_floor_log10`.
NGramModel ReadArpa(std::istream &in, double unk_floor_log10 = -7.0);

NGramModel LoadArpa(const std::string &path);

// Header counts and body entries per order, without building a model.
struct ArpaStats {
  int order = 0;
  std::vector<std::size_t> declared;  // index k-1
  std::vector<std::size_t> actual;
};

ArpaStats ReadArpaStats(std::istream &in);

}  // namespace ctclm

#endif  // CTCLM_ARPA_H_
