// src/ctc_decoder.cc

#include "ctclm/ctc_decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "ctclm/error.h"

namespace ctclm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLn10 = std::log(10.0);

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

void DecodeConfig::Validate() const {
  if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
  if (top_k_tokens < 1) throw ConfigError("top_k_tokens must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be a finite value >= 0");
  }
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
  if (std::isnan(token_min_logprob)) {
    throw ConfigError("token_min_logprob must not be NaN");
  }
}

std::string Detokenize(std::span<const int> prefix,
                       const TokenInventory &inventory) {
  std::string out;
  bool pending_space = false;
  for (int tok : prefix) {
    if (tok == inventory.delimiter_index()) {
      pending_space = !out.empty();
      continue;
    }
    if (inventory.IsSpecial(tok)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out += inventory.token(tok);
  }
  return out;
}

DecodeResult GreedyDecode(const LogitMatrix &logits) {
  const auto logp = logits.LogSoftmax();
  const int vocab = logits.vocab_size();
  const int blank = logits.inventory().blank_index();

  Hypothesis h;
  int prev = -1;
  for (int t = 0; t < logits.num_frames(); ++t) {
    const auto row = logits.frame(t);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    const int best = static_cast<int>(
        std::distance(row.begin(), std::max_element(row.begin(), row.end())));
    h.acoustic_log_prob += logp[t * vocab + best];
    if (best != blank && best != prev) h.tokens.push_back(best);
    prev = best;
  }
  h.text = Detokenize(h.tokens, logits.inventory());
  h.fused_score = h.acoustic_log_prob;

  DecodeResult r;
  r.text = h.text;
  r.acoustic_log_prob = h.acoustic_log_prob;
  r.fused_score = h.fused_score;
  r.n_best.push_back(std::move(h));
  return r;
}

double CtcLabelingLogProb(const LogitMatrix &logits,
                          std::span<const int> labeling) {
  const int blank = logits.inventory().blank_index();
  const int vocab = logits.vocab_size();
  for (int l : labeling) {
    if (l == blank) throw ConfigError("labeling must not contain blank");
    if (l < 0 || l >= vocab) throw ConfigError("labeling token out of range");
  }
  const auto logp = logits.LogSoftmax();
  const int frames = logits.num_frames();

  // Extended labeling: blank, l1, blank, l2, ..., blank.
  const int states = 2 * static_cast<int>(labeling.size()) + 1;
  auto label_of = [&](int s) { return s % 2 == 0 ? blank : labeling[s / 2]; };

  std::vector<double> alpha(states, kNegInf), next(states, kNegInf);
  alpha[0] = logp[label_of(0)];
  if (states > 1) alpha[1] = logp[label_of(1)];
  for (int t = 1; t < frames; ++t) {
    const double *row = &logp[static_cast<std::size_t>(t) * vocab];
    for (int s = 0; s < states; ++s) {
      double acc = alpha[s];
      if (s >= 1) acc = LogAdd(acc, alpha[s - 1]);
      if (s >= 2 && s % 2 == 1 && label_of(s) != label_of(s - 2)) {
        acc = LogAdd(acc, alpha[s - 2]);
      }
      next[s] = acc == kNegInf ? kNegInf : acc + row[label_of(s)];
    }
    std::swap(alpha, next);
  }
  double total = alpha[states - 1];
  if (states > 1) total = LogAdd(total, alpha[states - 2]);
  return total;
}

// --- prefix beam search ----------------------------------------------------

namespace {

// One collapsed prefix. Everything LM related is a function of the prefix,
// so it lives on the trie node rather than on the per-frame hypothesis.
struct PrefixNode {
  std::int32_t parent = -1;
  std::int32_t token = -1;
  std::int32_t depth = 0;
  std::int32_t word_begin = 0;  // node after which the partial word starts
  std::int32_t partial_len = 0;
  std::int32_t lm_context = 0;  // index into the interned contexts
  std::int32_t words = 0;
  double lm_log10 = 0.0;
};

struct ActiveHyp {
  std::int32_t node;
  double log_pb;
  double log_pnb;
  double acoustic;
  double fused;
};

class PrefixSearch {
 public:
  PrefixSearch(const LogitMatrix &logits, const DecodeConfig &cfg,
               const NGramModel *model)
      : logits_(logits),
        inv_(logits.inventory()),
        cfg_(cfg),
        model_(cfg.alpha > 0.0 ? model : nullptr) {
    nodes_.emplace_back();
    if (model_) {
      contexts_.emplace_back(model_->order() - 1, Vocabulary::kBos);
      context_index_.emplace(contexts_.back(), 0);
    } else {
      contexts_.emplace_back();
    }
  }

  DecodeResult Run(const FrameObserver &observer);

 private:
  std::int32_t Extend(std::int32_t node, int token);
  std::string PartialWord(std::int32_t node) const;
  double ScoreWord(std::int32_t context, const std::string &word);
  std::int32_t PushWord(std::int32_t context, const std::string &word);
  std::vector<int> Tokens(std::int32_t node) const;
  bool Better(const ActiveHyp &a, const ActiveHyp &b) const;
  double Fused(double acoustic, double lm_log10, int words) const {
    return acoustic + cfg_.alpha * kLn10 * lm_log10 + cfg_.beta * words;
  }
  void Notify(const FrameObserver &observer, int t,
              const std::vector<ActiveHyp> &beam) const;

  const LogitMatrix &logits_;
  const TokenInventory &inv_;
  const DecodeConfig &cfg_;
  const NGramModel *model_;

  std::vector<PrefixNode> nodes_;
  std::unordered_map<std::uint64_t, std::int32_t> children_;
  std::vector<NGram> contexts_;
  std::unordered_map<NGram, std::int32_t, NGramHash> context_index_;
  std::unordered_map<std::uint64_t, double> score_cache_;
};

std::vector<int> PrefixSearch::Tokens(std::int32_t node) const {
  std::vector<int> out(nodes_[node].depth);
  for (int i = static_cast<int>(out.size()) - 1; i >= 0; --i) {
    out[i] = nodes_[node].token;
    node = nodes_[node].parent;
  }
  return out;
}

std::string PrefixSearch::PartialWord(std::int32_t node) const {
  std::vector<int> toks;
  for (std::int32_t n = node; n != nodes_[node].word_begin;
       n = nodes_[n].parent) {
    toks.push_back(nodes_[n].token);
  }
  std::string word;
  for (auto it = toks.rbegin(); it != toks.rend(); ++it) {
    if (!inv_.IsSpecial(*it)) word += inv_.token(*it);
  }
  return word;
}

double PrefixSearch::ScoreWord(std::int32_t context, const std::string &word) {
  const WordId id = model_->vocab().Lookup(word);
  const std::uint64_t key =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(context)) << 32) |
      static_cast<std::uint32_t>(id);
  auto it = score_cache_.find(key);
  if (it != score_cache_.end()) return it->second;
  const double s = model_->ScoreWord(contexts_[context], id);
  score_cache_.emplace(key, s);
  return s;
}

std::int32_t PrefixSearch::PushWord(std::int32_t context,
                                    const std::string &word) {
  NGram next = contexts_[context];
  next.push_back(model_->vocab().Lookup(word));
  const std::size_t keep = static_cast<std::size_t>(model_->order() - 1);
  if (next.size() > keep) next.erase(next.begin(), next.end() - keep);
  auto it = context_index_.find(next);
  if (it != context_index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(contexts_.size());
  contexts_.push_back(next);
  context_index_.emplace(std::move(next), id);
  return id;
}

std::int32_t PrefixSearch::Extend(std::int32_t node, int token) {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(node)) << 32) |
      static_cast<std::uint32_t>(token);
  auto it = children_.find(key);
  if (it != children_.end()) return it->second;

  const PrefixNode &p = nodes_[node];
  PrefixNode n = p;
  n.parent = node;
  n.token = token;
  n.depth = p.depth + 1;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  if (token == inv_.delimiter_index()) {
    if (p.partial_len > 0) {
      n.words = p.words + 1;
      if (model_) {
        const std::string word = PartialWord(node);
        n.lm_log10 = p.lm_log10 + ScoreWord(p.lm_context, word);
        n.lm_context = PushWord(p.lm_context, word);
      }
    }
    n.word_begin = id;
    n.partial_len = 0;
  } else if (!inv_.IsSpecial(token)) {
    n.partial_len = p.partial_len + 1;
  }
  nodes_.push_back(n);
  children_.emplace(key, id);
  return id;
}

// Total order: fused score, then acoustic score, then lexicographic prefix.
bool PrefixSearch::Better(const ActiveHyp &a, const ActiveHyp &b) const {
  if (a.fused != b.fused) return a.fused > b.fused;
  if (a.acoustic != b.acoustic) return a.acoustic > b.acoustic;
  if (a.node == b.node) return false;
  return Tokens(a.node) < Tokens(b.node);
}

void PrefixSearch::Notify(const FrameObserver &observer, int t,
                          const std::vector<ActiveHyp> &beam) const {
  std::vector<BeamHypothesis> view;
  view.reserve(beam.size());
  for (const auto &h : beam) {
    const PrefixNode &n = nodes_[h.node];
    BeamHypothesis b;
    b.prefix = Tokens(h.node);
    b.log_p_blank = h.log_pb;
    b.log_p_nonblank = h.log_pnb;
    if (model_) b.lm_state = contexts_[n.lm_context];
    b.completed_words = n.words;
    b.lm_log10_prob = n.lm_log10;
    b.fused_score = h.fused;
    view.push_back(std::move(b));
  }
  observer(t, view);
}

DecodeResult PrefixSearch::Run(const FrameObserver &observer) {
  const int vocab = logits_.vocab_size();
  const int blank = inv_.blank_index();
  const auto logp = logits_.LogSoftmax();

  std::vector<ActiveHyp> beam{{0, 0.0, kNegInf, 0.0, 0.0}};
  std::vector<int> order(vocab);
  std::vector<int> candidates;
  std::unordered_map<std::int32_t, std::pair<double, double>> next;

  for (int t = 0; t < logits_.num_frames(); ++t) {
    const double *row = &logp[static_cast<std::size_t>(t) * vocab];

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [row](int a, int b) { return row[a] > row[b]; });
    candidates.clear();
    for (int v : order) {
      if (v == blank) continue;
      if (static_cast<int>(candidates.size()) >= cfg_.top_k_tokens) break;
      if (row[v] < cfg_.token_min_logprob) break;
      candidates.push_back(v);
    }

    next.clear();
    auto add = [&next](std::int32_t node, double pb, double pnb) {
      auto [it, fresh] = next.try_emplace(node, kNegInf, kNegInf);
      it->second.first = LogAdd(it->second.first, pb);
      it->second.second = LogAdd(it->second.second, pnb);
    };
    for (const auto &h : beam) {
      const double total = LogAdd(h.log_pb, h.log_pnb);
      add(h.node, total + row[blank], kNegInf);
      const int last = nodes_[h.node].token;
      for (int c : candidates) {
        if (c == last) {
          // Repeat without a blank stays on the same prefix; after a blank it
          // starts a new symbol.
          add(h.node, kNegInf, h.log_pnb + row[c]);
          add(Extend(h.node, c), kNegInf, h.log_pb + row[c]);
        } else {
          add(Extend(h.node, c), kNegInf, total + row[c]);
        }
      }
    }

    beam.clear();
    beam.reserve(next.size());
    for (const auto &[node, p] : next) {
      const double acoustic = LogAdd(p.first, p.second);
      if (acoustic == kNegInf) continue;
      const PrefixNode &n = nodes_[node];
      beam.push_back({node, p.first, p.second, acoustic,
                      Fused(acoustic, n.lm_log10, n.words)});
    }
    auto better = [this](const ActiveHyp &a, const ActiveHyp &b) {
      return Better(a, b);
    };
    if (static_cast<int>(beam.size()) > cfg_.beam_width) {
      std::partial_sort(beam.begin(), beam.begin() + cfg_.beam_width,
                        beam.end(), better);
      beam.resize(cfg_.beam_width);
    } else {
      std::sort(beam.begin(), beam.end(), better);
    }
    if (observer) Notify(observer, t, beam);
  }

  // End of utterance: optionally close the trailing partial word.
  std::vector<Hypothesis> finals;
  std::vector<ActiveHyp> ranked;
  for (const auto &h : beam) {
    const PrefixNode &n = nodes_[h.node];
    double lm = n.lm_log10;
    int words = n.words;
    if (cfg_.score_partial_final && n.partial_len > 0) {
      ++words;
      if (model_) lm += ScoreWord(n.lm_context, PartialWord(h.node));
    }
    ActiveHyp r = h;
    r.fused = Fused(h.acoustic, lm, words);
    ranked.push_back(r);

    Hypothesis out;
    out.tokens = Tokens(h.node);
    out.text = Detokenize(out.tokens, inv_);
    out.acoustic_log_prob = h.acoustic;
    out.lm_log10_prob = lm;
    out.fused_score = r.fused;
    out.word_count = words;
    finals.push_back(std::move(out));
  }
  std::vector<std::size_t> idx(ranked.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return Better(ranked[a], ranked[b]);
  });

  DecodeResult result;
  for (std::size_t i : idx) result.n_best.push_back(std::move(finals[i]));
  const Hypothesis &top = result.n_best.front();
  result.text = top.text;
  result.acoustic_log_prob = top.acoustic_log_prob;
  result.lm_log10_prob = top.lm_log10_prob;
  result.fused_score = top.fused_score;
  return result;
}

}  // namespace

DecodeResult BeamDecode(const LogitMatrix &logits, const DecodeConfig &cfg,
                        const NGramModel *model,
                        const FrameObserver &observer) {
  cfg.Validate();
  if (cfg.alpha > 0.0 && model == nullptr) {
    throw ConfigError("alpha > 0 requires a language model");
  }
  PrefixSearch search(logits, cfg, model);
  return search.Run(observer);
}

}  // namespace ctclm
