// include/ctclm/ngram_lm.h
//
// Word n-gram language models with interpolated modified Kneser-Ney
// smoothing, stored in backoff form (ARPA semantics).
//
// Sentences are padded with order-1 <s> markers and one </s>. <s> is only
// ever a context: it is never predicted and has no probability mass. </s> is
// predicted like any other word. <unk> is always in the vocabulary.

#ifndef CTCLM_NGRAM_LM_H_
#define CTCLM_NGRAM_LM_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctclm {

using WordId = std::int32_t;

inline constexpr std::string_view kUnkWord = "<unk>";
inline constexpr std::string_view kBosWord = "<s>";
inline constexpr std::string_view kEosWord = "</s>";

// log10 value used for "probability zero" (ARPA convention).
inline constexpr double kLog10Zero = -99.0;

class Vocabulary {
 public:
  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;

  Vocabulary();

  WordId Intern(std::string_view word);
  std::optional<WordId> Find(std::string_view word) const;
  // Unknown words map to kUnk.
  WordId Lookup(std::string_view word) const;
  const std::string &Word(WordId id) const { return words_.at(id); }
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

using NGram = std::vector<WordId>;

struct NGramHash {
  std::size_t operator()(const NGram &g) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (WordId w : g) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(w));
      h *= 1099511628211ULL;
    }
    return h;
  }
};

using NGramCounts = std::unordered_map<NGram, std::int64_t, NGramHash>;

struct CountTable {
  int order = 0;
  Vocabulary vocab;
  // Index k-1 holds k-grams, k = 1..order.
  std::vector<NGramCounts> counts;
  // Number of distinct one-word left extensions of each k-gram, k < order.
  std::vector<NGramCounts> continuation_counts;
  // counts_of_counts[k-1][j], j = 1..4: distinct k-grams whose adjusted count
  // is exactly j. k-grams ending in <s> are not counted (never predicted).
  std::vector<std::array<std::int64_t, 5>> counts_of_counts;

  // Raw count at the highest order, continuation count below it.
  std::int64_t AdjustedCount(const NGram &g) const;
};

// Counts all k-grams (k = 1..order) of whitespace-tokenized lines. Blank
// lines are skipped. Throws ConfigError for order < 1 or an empty corpus.
CountTable CountNGrams(const std::vector<std::string> &lines, int order);

// Re-derives continuation counts and counts-of-counts from `counts`.
void RefreshDerivedCounts(CountTable &ct);

struct OrderDiscount {
  double d1 = 0.5;
  double d2 = 0.5;
  double d3plus = 0.5;
  bool fallback = false;

  double For(std::int64_t count) const {
    return count == 1 ? d1 : count == 2 ? d2 : d3plus;
  }
};

inline constexpr double kFallbackDiscount = 0.5;

// Closed-form modified Kneser-Ney estimates from counts-of-counts:
//   Y = n1 / (n1 + 2 n2)
//   D1 = 1 - 2Y n2/n1, D2 = 2 - 3Y n3/n2, D3+ = 3 - 4Y n4/n3
// clamped to [0,1], [0,2], [0,3]. If n1, n2 or n3 is zero every discount is
// kFallbackDiscount and `fallback` is set.
OrderDiscount DiscountsFromCountsOfCounts(std::int64_t n1, std::int64_t n2,
                                          std::int64_t n3, std::int64_t n4);

struct Discounts {
  // per_order[k] for k = 2..order; entries 0 and 1 are unused.
  std::vector<OrderDiscount> per_order;

  const OrderDiscount &ForOrder(int k) const { return per_order.at(k); }
  bool any_fallback() const;
};

Discounts EstimateDiscounts(const CountTable &ct);

// How <unk> gets unigram mass.
struct UnkPolicy {
  // When set, <unk> gets the continuation mass of singleton words:
  // P(<unk>) = n1 / (total + n1). Falls back to the floor when n1 == 0.
  bool from_singletons = false;
  // Otherwise P(<unk>) = 10^floor_log10 and known words share the rest.
  double floor_log10 = -7.0;
};

class NGramModel {
 public:
  struct Entry {
    double log10_prob = kLog10Zero;
    double log10_backoff = 0.0;
    bool has_backoff = false;
  };

  explicit NGramModel(int order, Vocabulary vocab = Vocabulary());

  int order() const { return order_; }
  const Vocabulary &vocab() const { return vocab_; }
  Vocabulary &mutable_vocab() { return vocab_; }

  // Backoff recursion. The context is truncated to its last order-1 words.
  double ScoreWord(std::span<const WordId> context, WordId word) const;
  double ScoreWord(const std::vector<std::string> &context,
                   std::string_view word) const;

  // Chain rule with order-1 <s> of context and a final </s>.
  double ScoreSentence(const std::vector<std::string> &words) const;

  const Entry *Find(std::span<const WordId> ngram) const;
  // Inserts or overwrites. Missing prefix nodes are created implicitly and
  // do not count as entries.
  void Set(std::span<const WordId> ngram, double log10_prob);
  void SetBackoff(std::span<const WordId> ngram, double log10_backoff);

  std::size_t NumEntries(int k) const;
  // Visits every stored k-gram (unspecified order).
  void ForEachEntry(
      int k,
      const std::function<void(const NGram &, const Entry &)> &fn) const;

  bool discount_fallback() const { return discount_fallback_; }
  void set_discount_fallback(bool v) { discount_fallback_ = v; }

 private:
  struct Node {
    Entry entry;
    std::int32_t parent = -1;
    WordId word = -1;
    std::int16_t depth = 0;
    bool stored = false;
  };

  std::int32_t Child(std::int32_t node, WordId word) const;
  std::int32_t FindNode(std::span<const WordId> ngram) const;
  std::int32_t EnsureNode(std::span<const WordId> ngram);
  NGram Path(std::int32_t node) const;

  static std::uint64_t Key(std::int32_t parent, WordId word) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(parent))
            << 32) |
           static_cast<std::uint32_t>(word);
  }

  int order_;
  Vocabulary vocab_;
  std::vector<Node> nodes_;  // nodes_[0] is the empty context
  std::unordered_map<std::uint64_t, std::int32_t> children_;
  std::vector<std::size_t> entries_per_order_;
  bool discount_fallback_ = false;
};

NGramModel BuildModel(const CountTable &ct, const Discounts &discounts,
                      const UnkPolicy &unk = UnkPolicy());

// Convenience: count, estimate discounts, build.
NGramModel TrainModel(const std::vector<std::string> &lines, int order,
                      const UnkPolicy &unk = UnkPolicy());

// 10^(-sum log10 P / tokens), tokens counting each </s>. Blank lines are
// skipped. Throws ConfigError when nothing is left to score.
double Perplexity(const NGramModel &model,
                  const std::vector<std::string> &lines);

}  // namespace ctclm

#endif  // CTCLM_NGRAM_LM_H_
