// include/ctclm/ctc_decoder.h
//
// CTC decoding of frame-level logits: greedy (best path) decoding, the exact
// labeling marginal, and prefix beam search with optional n-gram shallow
// fusion.
//
// Fusion objective for a hypothesis with collapsed prefix y and completed
// words w_1..w_n:
//
//   ln P_ctc(y) + alpha * ln(10) * sum_i log10 P_lm(w_i | w_<i) + beta * n
//
// LM terms are added when the delimiter closes a word and, optionally, for a
// trailing partial word at the end of the utterance.

#ifndef CTCLM_CTC_DECODER_H_
#define CTCLM_CTC_DECODER_H_

#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ctclm/ngram_lm.h"
#include "ctclm/text_normalizer.h"

namespace ctclm {

// T x V pre-softmax scores, frame-major, with the inventory that names the
// columns.
class LogitMatrix {
 public:
  // Throws ConfigError if T < 1, V != inventory size, the value count is not
  // T * V, or any value is not finite.
  LogitMatrix(int num_frames, std::vector<float> values,
              std::shared_ptr<const TokenInventory> inventory,
              std::optional<double> frame_duration_s = std::nullopt);

  int num_frames() const { return num_frames_; }
  int vocab_size() const { return vocab_size_; }
  float at(int t, int v) const { return values_[t * vocab_size_ + v]; }
  std::span<const float> frame(int t) const {
    return {values_.data() + static_cast<std::size_t>(t) * vocab_size_,
            static_cast<std::size_t>(vocab_size_)};
  }
  const std::vector<float> &values() const { return values_; }
  const TokenInventory &inventory() const { return *inventory_; }
  const std::shared_ptr<const TokenInventory> &shared_inventory() const {
    return inventory_;
  }
  std::optional<double> frame_duration_s() const { return frame_duration_s_; }

  // Per-frame natural-log softmax, frame-major.
  std::vector<double> LogSoftmax() const;

 private:
  int num_frames_;
  int vocab_size_;
  std::vector<float> values_;
  std::shared_ptr<const TokenInventory> inventory_;
  std::optional<double> frame_duration_s_;
};

// "CTCL1": magic "CTCL", version byte 1, u32 T, u32 V, T*V little-endian
// float32. A V that disagrees with the inventory is a FormatError.
LogitMatrix ReadLogitsBinary(std::istream &in,
                             std::shared_ptr<const TokenInventory> inventory);
void WriteLogitsBinary(std::ostream &out, const LogitMatrix &logits);

// One frame per line, space-separated decimals.
LogitMatrix ReadLogitsText(std::istream &in,
                           std::shared_ptr<const TokenInventory> inventory);

// Sniffs the magic and dispatches to the binary or text reader.
LogitMatrix LoadLogits(const std::string &path,
                       std::shared_ptr<const TokenInventory> inventory);
void SaveLogits(const std::string &path, const LogitMatrix &logits);

struct DecodeConfig {
  int beam_width = 100;
  double alpha = 0.7;
  double beta = 0.5;
  // ln(1e-4); non-blank tokens below this are not expanded.
  double token_min_logprob = -9.21;
  // Non-blank expansion candidates per frame; blank is always expanded.
  int top_k_tokens = 16;
  bool score_partial_final = true;

  // Throws ConfigError.
  void Validate() const;
};

// Search state for one collapsed prefix, exposed to frame observers.
struct BeamHypothesis {
  std::vector<int> prefix;
  double log_p_blank = 0.0;
  double log_p_nonblank = 0.0;
  // Last order-1 completed words (LM context). Empty without an LM.
  std::vector<WordId> lm_state;
  int completed_words = 0;
  double lm_log10_prob = 0.0;
  double fused_score = 0.0;
};

struct Hypothesis {
  std::vector<int> tokens;
  std::string text;
  double acoustic_log_prob = 0.0;
  double lm_log10_prob = 0.0;
  double fused_score = 0.0;
  int word_count = 0;

  bool operator==(const Hypothesis &) const = default;
};

struct DecodeResult {
  std::string text;
  double acoustic_log_prob = 0.0;
  double lm_log10_prob = 0.0;
  double fused_score = 0.0;
  // Sorted by fused score, best first.
  std::vector<Hypothesis> n_best;

  bool operator==(const DecodeResult &) const = default;
};

// Delimiter runs become one space (leading/trailing ones are dropped); blank
// and unk are dropped; everything else is concatenated.
std::string Detokenize(std::span<const int> prefix,
                       const TokenInventory &inventory);

// Argmax per frame (lowest index wins ties), collapse repeats, drop blanks.
DecodeResult GreedyDecode(const LogitMatrix &logits);

// log P(labeling | logits) summed over all CTC alignments. `labeling` must
// not contain blank (ConfigError). Returns -infinity when the labeling cannot
// be aligned in T frames.
double CtcLabelingLogProb(const LogitMatrix &logits,
                          std::span<const int> labeling);

using FrameObserver =
    std::function<void(int frame, std::span<const BeamHypothesis> beam)>;

// Prefix beam search. `model` may be null; alpha > 0 then is a ConfigError.
// With alpha == 0 the model is not consulted at all. `observer`, if set,
// sees the surviving beam after every frame.
DecodeResult BeamDecode(const LogitMatrix &logits, const DecodeConfig &cfg,
                        const NGramModel *model = nullptr,
                        const FrameObserver &observer = nullptr);

}  // namespace ctclm

#endif  // CTCLM_CTC_DECODER_H_
