// include/ctclm/eval_metrics.h
//
// Edit-distance metrics: Levenshtein distance, WER, CER and corpus-level
// aggregation.

#ifndef CTCLM_EVAL_METRICS_H_
#define CTCLM_EVAL_METRICS_H_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctclm {

// Minimum number of single-token insertions, deletions and substitutions
// turning `a` into `b`. Keeps one DP row over the shorter sequence.
template <typename T>
std::size_t Levenshtein(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // b is the shorter one.
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

template <typename T>
std::size_t Levenshtein(const std::vector<T> &a, const std::vector<T> &b) {
  return Levenshtein(std::span<const T>(a), std::span<const T>(b));
}

// Character-level distance over Unicode scalar values.
std::size_t CharLevenshtein(std::string_view a, std::string_view b);
// Word-level distance over whitespace-separated words.
std::size_t WordLevenshtein(std::string_view a, std::string_view b);

// Throw UndefinedMetricError when the reference has no words / characters.
double Wer(std::string_view ref, std::string_view hyp);
double Cer(std::string_view ref, std::string_view hyp);

struct EvalPair {
  std::string reference;
  std::string hypothesis;
};

enum class Granularity { kWordCorpus, kCharCorpus, kBoth };

struct SentenceStats {
  std::size_t ref_words = 0;
  std::size_t word_edits = 0;
  std::size_t ref_chars = 0;
  std::size_t char_edits = 0;
};

// Pooled WER/CER (edits summed over the corpus before dividing) and the mean
// per-sentence character distance.
struct EvalReport {
  std::optional<double> wer;
  std::optional<double> cer;
  double mean_levenshtein = 0.0;
  std::size_t num_pairs = 0;
  std::size_t total_ref_words = 0;
  std::size_t total_ref_chars = 0;
  std::size_t total_word_edits = 0;
  std::size_t total_char_edits = 0;
  std::vector<SentenceStats> per_sentence;
};

// Throws ConfigError for an empty pair list and UndefinedMetricError when the
// requested pooled ratio has a zero denominator. Sentences are scored on up
// to `jobs` threads; the result does not depend on the schedule.
EvalReport CorpusReport(const std::vector<EvalPair> &pairs,
                        Granularity granularity = Granularity::kBoth,
                        int jobs = 1);

}  // namespace ctclm

#endif  // CTCLM_EVAL_METRICS_H_
