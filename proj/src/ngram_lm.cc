// src/ngram_lm.cc

#include "ctclm/ngram_lm.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "ctclm/error.h"
#include "ctclm/utf8.h"

namespace ctclm {

Vocabulary::Vocabulary() {
  Intern(kUnkWord);
  Intern(kBosWord);
  Intern(kEosWord);
}

WordId Vocabulary::Intern(std::string_view word) {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::Lookup(std::string_view word) const {
  return Find(word).value_or(kUnk);
}

// --- counting --------------------------------------------------------------

std::int64_t CountTable::AdjustedCount(const NGram &g) const {
  const int k = static_cast<int>(g.size());
  const NGramCounts &table =
      k == order ? counts[k - 1] : continuation_counts[k - 1];
  auto it = table.find(g);
  return it == table.end() ? 0 : it->second;
}

void RefreshDerivedCounts(CountTable &ct) {
  ct.continuation_counts.assign(ct.order, NGramCounts());
  for (int k = 1; k < ct.order; ++k) {
    // Each distinct (k+1)-gram v.g is one distinct left extension of g.
    for (const auto &[g, c] : ct.counts[k]) {
      if (c <= 0) continue;
      NGram suffix(g.begin() + 1, g.end());
      ++ct.continuation_counts[k - 1][suffix];
    }
  }
  ct.counts_of_counts.assign(ct.order, {0, 0, 0, 0, 0});
  for (int k = 1; k <= ct.order; ++k) {
    for (const auto &[g, c] : ct.counts[k - 1]) {
      if (g.back() == Vocabulary::kBos) continue;
      const std::int64_t a = ct.AdjustedCount(g);
      if (a >= 1 && a <= 4) ++ct.counts_of_counts[k - 1][a];
    }
  }
}

CountTable CountNGrams(const std::vector<std::string> &lines, int order) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  CountTable ct;
  ct.order = order;
  ct.counts.assign(order, NGramCounts());

  std::size_t sentences = 0;
  NGram padded;
  for (const auto &line : lines) {
    padded.assign(order - 1, Vocabulary::kBos);
    for (const auto &w : SplitWords(line)) {
      if (w == kBosWord || w == kEosWord) continue;
      padded.push_back(ct.vocab.Intern(w));
    }
    if (padded.size() == static_cast<std::size_t>(order - 1)) continue;
    padded.push_back(Vocabulary::kEos);
    ++sentences;
    for (std::size_t end = 1; end <= padded.size(); ++end) {
      for (int k = 1; k <= order && static_cast<std::size_t>(k) <= end; ++k) {
        NGram g(padded.begin() + (end - k), padded.begin() + end);
        ++ct.counts[k - 1][g];
      }
    }
  }
  if (sentences == 0) throw ConfigError("cannot count n-grams: empty corpus");
  RefreshDerivedCounts(ct);
  return ct;
}

// --- discounts -------------------------------------------------------------

OrderDiscount DiscountsFromCountsOfCounts(std::int64_t n1, std::int64_t n2,
                                          std::int64_t n3, std::int64_t n4) {
  OrderDiscount d;
  if (n1 <= 0 || n2 <= 0 || n3 <= 0) {
    d.d1 = d.d2 = d.d3plus = kFallbackDiscount;
    d.fallback = true;
    return d;
  }
  const double y = static_cast<double>(n1) / (n1 + 2.0 * n2);
  d.d1 = std::clamp(1.0 - 2.0 * y * n2 / n1, 0.0, 1.0);
  d.d2 = std::clamp(2.0 - 3.0 * y * n3 / n2, 0.0, 2.0);
  d.d3plus = std::clamp(3.0 - 4.0 * y * n4 / n3, 0.0, 3.0);
  return d;
}

bool Discounts::any_fallback() const {
  return std::any_of(per_order.begin(), per_order.end(),
                     [](const OrderDiscount &d) { return d.fallback; });
}

Discounts EstimateDiscounts(const CountTable &ct) {
  Discounts d;
  d.per_order.assign(ct.order + 1, OrderDiscount());
  for (int k = 2; k <= ct.order; ++k) {
    const auto &c = ct.counts_of_counts[k - 1];
    d.per_order[k] = DiscountsFromCountsOfCounts(c[1], c[2], c[3], c[4]);
  }
  return d;
}

// --- model storage ---------------------------------------------------------

NGramModel::NGramModel(int order, Vocabulary vocab)
    : order_(order), vocab_(std::move(vocab)), nodes_(1),
      entries_per_order_(order + 1, 0) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
}

std::int32_t NGramModel::Child(std::int32_t node, WordId word) const {
  auto it = children_.find(Key(node, word));
  return it == children_.end() ? -1 : it->second;
}

std::int32_t NGramModel::FindNode(std::span<const WordId> ngram) const {
  std::int32_t node = 0;
  for (WordId w : ngram) {
    node = Child(node, w);
    if (node < 0) return -1;
  }
  return node;
}

std::int32_t NGramModel::EnsureNode(std::span<const WordId> ngram) {
  if (static_cast<int>(ngram.size()) > order_) {
    throw ConfigError("n-gram longer than model order");
  }
  std::int32_t node = 0;
  for (WordId w : ngram) {
    const std::uint64_t key = Key(node, w);
    auto it = children_.find(key);
    if (it != children_.end()) {
      node = it->second;
      continue;
    }
    Node n;
    n.parent = node;
    n.word = w;
    n.depth = static_cast<std::int16_t>(nodes_[node].depth + 1);
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(n);
    children_.emplace(key, id);
    node = id;
  }
  return node;
}

NGram NGramModel::Path(std::int32_t node) const {
  NGram g(nodes_[node].depth);
  for (int i = static_cast<int>(g.size()) - 1; i >= 0; --i) {
    g[i] = nodes_[node].word;
    node = nodes_[node].parent;
  }
  return g;
}

const NGramModel::Entry *NGramModel::Find(
    std::span<const WordId> ngram) const {
  if (ngram.empty()) return nullptr;
  const std::int32_t node = FindNode(ngram);
  if (node < 0 || !nodes_[node].stored) return nullptr;
  return &nodes_[node].entry;
}

void NGramModel::Set(std::span<const WordId> ngram, double log10_prob) {
  if (ngram.empty()) throw ConfigError("cannot store an empty n-gram");
  const std::int32_t node = EnsureNode(ngram);
  if (!nodes_[node].stored) {
    nodes_[node].stored = true;
    ++entries_per_order_[ngram.size()];
  }
  nodes_[node].entry.log10_prob = log10_prob;
}

void NGramModel::SetBackoff(std::span<const WordId> ngram,
                            double log10_backoff) {
  const std::int32_t node = EnsureNode(ngram);
  nodes_[node].entry.log10_backoff = log10_backoff;
  nodes_[node].entry.has_backoff = true;
}

std::size_t NGramModel::NumEntries(int k) const {
  if (k < 1 || k > order_) return 0;
  return entries_per_order_[k];
}

void NGramModel::ForEachEntry(
    int k,
    const std::function<void(const NGram &, const Entry &)> &fn) const {
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].stored && nodes_[i].depth == k) {
      fn(Path(static_cast<std::int32_t>(i)), nodes_[i].entry);
    }
  }
}

double NGramModel::ScoreWord(std::span<const WordId> context,
                             WordId word) const {
  if (word < 0 || word >= vocab_.size()) word = Vocabulary::kUnk;
  if (context.size() > static_cast<std::size_t>(order_ - 1)) {
    context = context.last(order_ - 1);
  }
  double acc = 0.0;
  for (std::size_t start = 0; start <= context.size(); ++start) {
    const std::int32_t node = FindNode(context.subspan(start));
    if (node < 0) continue;
    const std::int32_t child = Child(node, word);
    if (child >= 0 && nodes_[child].stored) {
      return acc + nodes_[child].entry.log10_prob;
    }
    acc += nodes_[node].entry.log10_backoff;
  }
  // Word has no unigram entry at all (hand-built or foreign model).
  if (word != Vocabulary::kUnk) {
    return acc + ScoreWord(std::span<const WordId>(), Vocabulary::kUnk);
  }
  return kLog10Zero;
}

double NGramModel::ScoreWord(const std::vector<std::string> &context,
                             std::string_view word) const {
  NGram ids;
  ids.reserve(context.size());
  for (const auto &w : context) ids.push_back(vocab_.Lookup(w));
  return ScoreWord(ids, vocab_.Lookup(word));
}

double NGramModel::ScoreSentence(const std::vector<std::string> &words) const {
  NGram history(order_ - 1, Vocabulary::kBos);
  double total = 0.0;
  for (const auto &w : words) {
    const WordId id = vocab_.Lookup(w);
    total += ScoreWord(history, id);
    history.push_back(id);
  }
  total += ScoreWord(history, Vocabulary::kEos);
  return total;
}

// --- estimation ------------------------------------------------------------

namespace {

double SafeLog10(double p) {
  if (!(p > 0.0)) return kLog10Zero;
  return std::max(std::log10(p), kLog10Zero);
}

struct ContextChild {
  WordId word;
  std::int64_t count;
};

}  // namespace

NGramModel BuildModel(const CountTable &ct, const Discounts &discounts,
                      const UnkPolicy &unk) {
  if (ct.order < 1 || static_cast<int>(ct.counts.size()) != ct.order) {
    throw ConfigError("count table is inconsistent with its order");
  }
  NGramModel model(ct.order, ct.vocab);
  model.set_discount_fallback(discounts.any_fallback());

  // Unigrams: adjusted counts, no discount, <unk> per policy.
  std::int64_t total = 0;
  std::int64_t singletons = 0;
  for (const auto &[g, c] : ct.counts[0]) {
    if (g[0] == Vocabulary::kBos || g[0] == Vocabulary::kUnk) continue;
    const std::int64_t a = ct.AdjustedCount(g);
    total += a;
    if (a == 1) ++singletons;
  }
  if (total <= 0) throw ConfigError("count table has no predictable words");

  double p_unk = std::pow(10.0, unk.floor_log10);
  double known_scale = (1.0 - p_unk) / static_cast<double>(total);
  if (unk.from_singletons && singletons > 0) {
    const double denom = static_cast<double>(total + singletons);
    p_unk = static_cast<double>(singletons) / denom;
    known_scale = 1.0 / denom;
  }
  for (WordId w = 0; w < ct.vocab.size(); ++w) {
    const NGram g{w};
    if (w == Vocabulary::kBos) {
      model.Set(g, kLog10Zero);
    } else if (w == Vocabulary::kUnk) {
      model.Set(g, SafeLog10(p_unk));
    } else {
      model.Set(g, SafeLog10(known_scale * ct.AdjustedCount(g)));
    }
  }

  // Higher orders, interpolated with the already built lower orders.
  for (int k = 2; k <= ct.order; ++k) {
    const OrderDiscount &d = discounts.ForOrder(k);
    std::map<NGram, std::vector<ContextChild>> by_context;
    for (const auto &[g, c] : ct.counts[k - 1]) {
      if (c <= 0) continue;
      NGram ctx(g.begin(), g.end() - 1);
      if (g.back() == Vocabulary::kBos) {
        model.Set(g, kLog10Zero);
        continue;
      }
      by_context[std::move(ctx)].push_back({g.back(), ct.AdjustedCount(g)});
    }
    for (auto &[ctx, children] : by_context) {
      std::int64_t denom = 0;
      std::array<std::int64_t, 4> buckets{0, 0, 0, 0};
      for (const auto &ch : children) {
        denom += ch.count;
        ++buckets[std::min<std::int64_t>(ch.count, 3)];
      }
      if (denom <= 0) continue;
      const double gamma =
          (d.d1 * buckets[1] + d.d2 * buckets[2] + d.d3plus * buckets[3]) /
          static_cast<double>(denom);
      const std::span<const WordId> lower_ctx(ctx.data() + 1, ctx.size() - 1);
      NGram g(ctx);
      g.push_back(0);
      for (const auto &ch : children) {
        const double lower =
            std::pow(10.0, model.ScoreWord(lower_ctx, ch.word));
        const double p =
            std::max(static_cast<double>(ch.count) - d.For(ch.count), 0.0) /
                static_cast<double>(denom) +
            gamma * lower;
        g.back() = ch.word;
        model.Set(g, SafeLog10(p));
      }
      model.SetBackoff(ctx, SafeLog10(gamma));
    }
  }
  return model;
}

NGramModel TrainModel(const std::vector<std::string> &lines, int order,
                      const UnkPolicy &unk) {
  const CountTable ct = CountNGrams(lines, order);
  return BuildModel(ct, EstimateDiscounts(ct), unk);
}

double Perplexity(const NGramModel &model,
                  const std::vector<std::string> &lines) {
  double log_sum = 0.0;
  std::size_t tokens = 0;
  for (const auto &line : lines) {
    const auto words = SplitWords(line);
    if (words.empty()) continue;
    log_sum += model.ScoreSentence(words);
    tokens += words.size() + 1;
  }
  if (tokens == 0) throw ConfigError("perplexity: no sentences to score");
  return std::pow(10.0, -log_sum / static_cast<double>(tokens));
}

}  // namespace ctclm
