// src/eval_metrics.cc

#include "ctclm/eval_metrics.h"

#include <thread>

#include "ctclm/error.h"
#include "ctclm/utf8.h"

namespace ctclm {

std::size_t CharLevenshtein(std::string_view a, std::string_view b) {
  const std::u32string ca = DecodeUtf8(a);
  const std::u32string cb = DecodeUtf8(b);
  return Levenshtein(std::span<const char32_t>(ca),
                     std::span<const char32_t>(cb));
}

std::size_t WordLevenshtein(std::string_view a, std::string_view b) {
  return Levenshtein(SplitWords(a), SplitWords(b));
}

double Wer(std::string_view ref, std::string_view hyp) {
  const auto r = SplitWords(ref);
  if (r.empty()) throw UndefinedMetricError("WER undefined: empty reference");
  return static_cast<double>(Levenshtein(r, SplitWords(hyp))) /
         static_cast<double>(r.size());
}

double Cer(std::string_view ref, std::string_view hyp) {
  const std::u32string r = DecodeUtf8(ref);
  if (r.empty()) throw UndefinedMetricError("CER undefined: empty reference");
  const std::u32string h = DecodeUtf8(hyp);
  return static_cast<double>(Levenshtein(std::span<const char32_t>(r),
                                         std::span<const char32_t>(h))) /
         static_cast<double>(r.size());
}

EvalReport CorpusReport(const std::vector<EvalPair> &pairs,
                        Granularity granularity, int jobs) {
  if (pairs.empty()) throw ConfigError("corpus report: no sentence pairs");

  EvalReport rep;
  rep.num_pairs = pairs.size();
  rep.per_sentence.resize(pairs.size());

  auto score = [&](std::size_t i) {
    SentenceStats &s = rep.per_sentence[i];
    const auto rw = SplitWords(pairs[i].reference);
    s.ref_words = rw.size();
    s.word_edits = Levenshtein(rw, SplitWords(pairs[i].hypothesis));
    s.ref_chars = DecodeUtf8(pairs[i].reference).size();
    s.char_edits = CharLevenshtein(pairs[i].reference, pairs[i].hypothesis);
  };
  const std::size_t workers =
      std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, pairs.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) score(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < pairs.size(); i += workers) score(i);
      });
    }
    for (auto &th : pool) th.join();
  }

  for (const auto &s : rep.per_sentence) {
    rep.total_ref_words += s.ref_words;
    rep.total_word_edits += s.word_edits;
    rep.total_ref_chars += s.ref_chars;
    rep.total_char_edits += s.char_edits;
  }
  rep.mean_levenshtein = static_cast<double>(rep.total_char_edits) /
                         static_cast<double>(rep.num_pairs);

  if (granularity != Granularity::kCharCorpus) {
    if (rep.total_ref_words == 0) {
      throw UndefinedMetricError("WER undefined: references have no words");
    }
    rep.wer = static_cast<double>(rep.total_word_edits) /
              static_cast<double>(rep.total_ref_words);
  }
  if (granularity != Granularity::kWordCorpus) {
    if (rep.total_ref_chars == 0) {
      throw UndefinedMetricError("CER undefined: references are empty");
    }
    rep.cer = static_cast<double>(rep.total_char_edits) /
              static_cast<double>(rep.total_ref_chars);
  }
  return rep;
}

}  // namespace ctclm
