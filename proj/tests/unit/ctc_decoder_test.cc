#include "ctclm/ctc_decoder.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ctc_oracle.h"
#include "ctclm/error.h"
#include "fixtures.h"

using namespace ctclm;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::shared_ptr<const TokenInventory> Abc() {
  return std::make_shared<const TokenInventory>(
      std::vector<std::string>{"a", "b", "c", "<blank>", "|"}, 3, 4,
      std::nullopt);
}

// Frames given as the argmax token per frame.
LogitMatrix Path(const std::vector<int> &argmax,
                 std::shared_ptr<const TokenInventory> inv) {
  std::vector<float> v;
  for (int tok : argmax) {
    for (int j = 0; j < inv->size(); ++j) v.push_back(j == tok ? 5.0f : 0.0f);
  }
  return LogitMatrix(static_cast<int>(argmax.size()), v, inv);
}

LogitMatrix FromOracle(const oracle::Logits &l,
                       std::shared_ptr<const TokenInventory> inv) {
  std::vector<float> v;
  for (const auto &row : l) {
    for (double x : row) v.push_back(static_cast<float>(x));
  }
  return LogitMatrix(static_cast<int>(l.size()), v, inv);
}

// V tokens with the blank and delimiter at random positions.
std::shared_ptr<const TokenInventory> RandomInventory(std::mt19937_64 &rng,
                                                      int V) {
  const int blank = static_cast<int>(rng() % V);
  int delim = static_cast<int>(rng() % (V - 1));
  if (delim >= blank) ++delim;
  std::vector<std::string> toks(V);
  char next = 'a';
  for (int i = 0; i < V; ++i) {
    toks[i] = i == blank ? "<blank>" : i == delim ? "|" : std::string(1, next++);
  }
  return std::make_shared<const TokenInventory>(toks, blank, delim,
                                                std::nullopt);
}

oracle::Logits RandomLogits(std::mt19937_64 &rng, int T, int V) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  oracle::Logits l(T, std::vector<double>(V));
  for (auto &row : l) {
    for (auto &x : row) x = static_cast<float>(u(rng));
  }
  return l;
}

DecodeConfig Exhaustive() {
  DecodeConfig cfg;
  cfg.beam_width = 4096;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  cfg.top_k_tokens = 16;
  cfg.token_min_logprob = kNegInf;
  return cfg;
}

}  // namespace

TEST(Detokenize, Examples) {
  const auto inv = Abc();
  EXPECT_EQ(Detokenize(std::vector<int>{0, 1}, *inv), "ab");
  EXPECT_EQ(Detokenize(std::vector<int>{0, 4, 1}, *inv), "a b");
  EXPECT_EQ(Detokenize(std::vector<int>{}, *inv), "");
  EXPECT_EQ(Detokenize(std::vector<int>{4, 0, 4, 4, 1, 4}, *inv), "a b");
  EXPECT_EQ(Detokenize(std::vector<int>{0, 3, 1}, *inv), "ab");
}

TEST(Greedy, CollapseRules) {
  const auto inv = Abc();
  EXPECT_EQ(GreedyDecode(Path({0, 0, 3, 1}, inv)).text, "ab");
  EXPECT_EQ(GreedyDecode(Path({3, 3}, inv)).text, "");
  EXPECT_EQ(GreedyDecode(Path({0, 3, 0}, inv)).text, "aa");
  EXPECT_EQ(GreedyDecode(Path({0, 4, 1, 1}, inv)).text, "a b");
  EXPECT_EQ(GreedyDecode(Path({0, 3, 0}, inv)).lm_log10_prob, 0.0);
}

TEST(Greedy, TiesGoToLowestIndex) {
  const auto inv = Abc();
  const LogitMatrix m(1, {1.0f, 1.0f, 0.0f, 1.0f, 0.0f}, inv);
  EXPECT_EQ(GreedyDecode(m).text, "a");
}

TEST(LabelingLogProb, SingleUniformFrame) {
  const auto inv = Abc();
  const LogitMatrix m(1, std::vector<float>(5, 0.0f), inv);
  EXPECT_NEAR(CtcLabelingLogProb(m, std::vector<int>{0}), std::log(1.0 / 5),
              1e-12);
}

TEST(LabelingLogProb, TwoFramesByHand) {
  const auto inv = Abc();
  const LogitMatrix m(2, {1.0f, 0.2f, -1.0f, 0.5f, 0.0f,
                          0.3f, 0.0f, 0.7f, -0.4f, 1.1f},
                      inv);
  const auto lp = m.LogSoftmax();
  auto p = [&](int t, int v) { return std::exp(lp[t * 5 + v]); };
  const double want = p(0, 0) * p(1, 0) + p(0, 0) * p(1, 3) + p(0, 3) * p(1, 0);
  EXPECT_NEAR(CtcLabelingLogProb(m, std::vector<int>{0}), std::log(want),
              1e-12);
}

TEST(LabelingLogProb, UnalignableAndBlankLabels) {
  const auto inv = Abc();
  const LogitMatrix m(2, std::vector<float>(10, 0.0f), inv);
  EXPECT_EQ(CtcLabelingLogProb(m, std::vector<int>{0, 0}), kNegInf);
  EXPECT_EQ(CtcLabelingLogProb(m, std::vector<int>{0, 1, 2}), kNegInf);
  EXPECT_THROW(CtcLabelingLogProb(m, std::vector<int>{3}), ConfigError);
}

TEST(LabelingLogProb, MatchesPathEnumeration) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 5);
    const int V = 2 + static_cast<int>(rng() % 3);
    const auto inv = RandomInventory(rng, V);
    const auto l = RandomLogits(rng, T, V);
    const LogitMatrix m = FromOracle(l, inv);
    for (const auto &[label, lp] :
         oracle::LabelingLogProbs(l, inv->blank_index())) {
      ASSERT_NEAR(CtcLabelingLogProb(m, label), lp, 1e-9);
    }
  }
}

TEST(LabelingLogProb, SumsToOne) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 4);
    const int V = 2 + static_cast<int>(rng() % 2);
    const auto inv = RandomInventory(rng, V);
    const LogitMatrix m = FromOracle(RandomLogits(rng, T, V), inv);
    double sum = 0.0;
    for (const auto &l : oracle::AllLabelings(V, inv->blank_index(), T)) {
      sum += std::exp(CtcLabelingLogProb(m, l));
    }
    ASSERT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(LabelingLogProb, NoUnderflowOnLongInputs) {
  const auto inv = Abc();
  std::vector<float> v;
  const int T = 10000;
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < 5; ++j) v.push_back(j == (t % 2 ? 3 : 0) ? 2.0f : 0.0f);
  }
  const LogitMatrix m(T, v, inv);
  const double lp = CtcLabelingLogProb(m, std::vector<int>(T / 2, 0));
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, 0.0);
}

TEST(BeamDecode, ExactAgainstExhaustiveSearch) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 5);
    const int V = 2 + static_cast<int>(rng() % 3);
    const auto inv = RandomInventory(rng, V);
    const auto l = RandomLogits(rng, T, V);
    const auto all = oracle::LabelingLogProbs(l, inv->blank_index());
    auto best = all.begin();
    for (auto it = all.begin(); it != all.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const DecodeResult r = BeamDecode(FromOracle(l, inv), Exhaustive());
    ASSERT_EQ(r.n_best[0].tokens, best->first) << "trial " << trial;
    ASSERT_NEAR(r.acoustic_log_prob, best->second, 1e-9);
    ASSERT_NEAR(r.fused_score, best->second, 1e-9);
  }
}

TEST(BeamDecode, HomophoneNeedsTheLanguageModel) {
  const auto fx = fixture::HomophoneFixture();
  const NGramModel lm = TrainModel(fx.lm_corpus, 3);
  const auto &u = fx.dev[0];
  DecodeConfig cfg;
  cfg.alpha = 0.0;
  const std::string acoustic_only = BeamDecode(u.logits, cfg, &lm).text;
  EXPECT_NE(acoustic_only, u.reference);
  EXPECT_EQ(GreedyDecode(u.logits).text, acoustic_only);
  cfg.alpha = 2.0;
  EXPECT_EQ(BeamDecode(u.logits, cfg, &lm).text, u.reference);
  cfg.alpha = 0.7;
  cfg.beta = 0.5;
  const DecodeResult r = BeamDecode(u.logits, cfg, &lm);
  EXPECT_EQ(r.text, u.reference);
  EXPECT_LT(r.lm_log10_prob, 0.0);
  EXPECT_EQ(r.n_best[0].word_count, 3);
}

TEST(BeamDecode, PositiveBetaPrefersMoreWords) {
  const auto inv = Abc();
  // Frame 1 splits evenly between the delimiter and blank, so "a b" and
  // "ab" tie acoustically.
  const LogitMatrix m(3, {6, 0, 0, 0, 0,  //
                          0, 0, 0, 6, 6,  //
                          0, 6, 0, 0, 0},
                      inv);
  DecodeConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 0.5;
  EXPECT_EQ(BeamDecode(m, cfg).text, "a b");
  cfg.beta = -0.5;
  EXPECT_EQ(BeamDecode(m, cfg).text, "ab");
  cfg.beta = 0.0;
  const DecodeResult tie = BeamDecode(m, cfg);
  ASSERT_GE(tie.n_best.size(), 2u);
  EXPECT_NEAR(tie.n_best[0].acoustic_log_prob, tie.n_best[1].acoustic_log_prob,
              0.01);
}

TEST(BeamDecode, PartialFinalWordToggle) {
  const auto fx = fixture::HomophoneFixture();
  const NGramModel lm = TrainModel(fx.lm_corpus, 3);
  DecodeConfig cfg;
  const DecodeResult on = BeamDecode(fx.dev[0].logits, cfg, &lm);
  cfg.score_partial_final = false;
  const DecodeResult off = BeamDecode(fx.dev[0].logits, cfg, &lm);
  EXPECT_EQ(on.n_best[0].word_count, 3);
  EXPECT_EQ(off.n_best[0].word_count, 2);
  EXPECT_LT(on.lm_log10_prob, off.lm_log10_prob);
}

TEST(BeamDecode, FusionRecovery) {
  const auto fx = fixture::HomophoneFixture();
  const NGramModel lm = TrainModel(fx.lm_corpus, 3);
  for (double beta : {0.0, 0.5, -1.0}) {
    DecodeConfig cfg;
    cfg.alpha = 0.0;
    cfg.beta = beta;
    for (const auto &u : fx.dev) {
      ASSERT_EQ(BeamDecode(u.logits, cfg, &lm), BeamDecode(u.logits, cfg));
    }
  }
}

TEST(BeamDecode, WidthMonotonicityOnFixtures) {
  const auto fx = fixture::TrigramFixture();
  const NGramModel lm = TrainModel(fx.lm_corpus, 3);
  for (int i = 0; i < 10; ++i) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int width : {1, 2, 4, 8, 32, 128}) {
      DecodeConfig cfg;
      cfg.beam_width = width;
      const double s = BeamDecode(fx.dev[i].logits, cfg, &lm).fused_score;
      ASSERT_GE(s, prev - 1e-9) << "utterance " << i << " width " << width;
      prev = s;
    }
  }
}

// Pruning is not monotone on arbitrary inputs: at width 3 a third prefix
// survives frame 0, outranks "ba" at frame 1 and evicts it, so "ba" ends
// with less merged mass than it has at width 2.
TEST(BeamDecode, WiderBeamCanLoseMass) {
  const auto inv = std::make_shared<const TokenInventory>(
      std::vector<std::string>{"<blank>", "a", "b"}, 0, 1, std::nullopt);
  // The delimiter plays no role here; index 1 is just another token.
  const LogitMatrix m(3,
                      {0x1.271b76p+0f, 0x1.5d0648p-1f, 0x1.71fd3ap+0f,
                       -0x1.40303cp+1f, 0x1.f28434p+0f, 0x1.62aeecp+1f,
                       0x1.7cf5e6p-3f, 0x1.1a73f6p+1f, -0x1.32bd9cp+1f},
                      inv);
  DecodeConfig cfg = Exhaustive();
  const double exact = CtcLabelingLogProb(m, std::vector<int>{2, 1});
  cfg.beam_width = 2;
  const DecodeResult narrow = BeamDecode(m, cfg);
  cfg.beam_width = 3;
  const DecodeResult wide = BeamDecode(m, cfg);
  EXPECT_EQ(narrow.n_best[0].tokens, (std::vector<int>{2, 1}));
  EXPECT_EQ(wide.n_best[0].tokens, (std::vector<int>{2, 1}));
  EXPECT_NEAR(narrow.fused_score, exact, 1e-9);
  EXPECT_LT(wide.fused_score, narrow.fused_score - 0.1);
  cfg.beam_width = 4096;
  EXPECT_NEAR(BeamDecode(m, cfg).fused_score, exact, 1e-9);
}

TEST(BeamDecode, GreedyContainment) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 6);
    const int V = 2 + static_cast<int>(rng() % 4);
    const auto inv = RandomInventory(rng, V);
    const LogitMatrix m = FromOracle(RandomLogits(rng, T, V), inv);
    const auto lp = m.LogSoftmax();
    double best_path = 0.0;
    for (int t = 0; t < T; ++t) {
      double mx = lp[t * V];
      for (int v = 1; v < V; ++v) mx = std::max(mx, lp[t * V + v]);
      best_path += mx;
    }
    DecodeConfig cfg = Exhaustive();
    cfg.beam_width = V * T;
    ASSERT_LE(best_path, BeamDecode(m, cfg).acoustic_log_prob + 1e-12);
  }
}

TEST(BeamDecode, ObserverInvariants) {
  const auto fx = fixture::TrigramFixture();
  const NGramModel lm = TrainModel(fx.lm_corpus, 3);
  const auto &inv = *fx.inventory;
  DecodeConfig cfg;
  cfg.beam_width = 16;
  int frames_seen = 0;
  BeamDecode(fx.dev[0].logits, cfg, &lm,
             [&](int t, std::span<const BeamHypothesis> beam) {
               EXPECT_EQ(t, frames_seen++);
               ASSERT_FALSE(beam.empty());
               ASSERT_LE(beam.size(), 16u);
               for (std::size_t i = 0; i < beam.size(); ++i) {
                 const auto &h = beam[i];
                 const double a = std::max(h.log_p_blank, h.log_p_nonblank);
                 const double total =
                     a + std::log1p(std::exp(std::min(h.log_p_blank, h.log_p_nonblank) - a));
                 ASSERT_LE(total, 1e-9);
                 int words = 0;
                 bool in_word = false;
                 for (int tok : h.prefix) {
                   if (tok == inv.delimiter_index()) {
                     words += in_word;
                     in_word = false;
                   } else if (!inv.IsSpecial(tok)) {
                     in_word = true;
                   }
                 }
                 ASSERT_EQ(h.completed_words, words);
                 ASSERT_LE(static_cast<int>(h.lm_state.size()), lm.order() - 1);
                 if (i > 0) ASSERT_GE(beam[i - 1].fused_score, h.fused_score);
               }
             });
  EXPECT_EQ(frames_seen, fx.dev[0].logits.num_frames());
}

TEST(BeamDecode, DeterministicAndRanked) {
  const auto fx = fixture::TrigramFixture();
  const NGramModel lm = TrainModel(fx.lm_corpus, 3);
  DecodeConfig cfg;
  const DecodeResult a = BeamDecode(fx.dev[3].logits, cfg, &lm);
  const DecodeResult b = BeamDecode(fx.dev[3].logits, cfg, &lm);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.text, a.n_best[0].text);
  EXPECT_LE(a.n_best.size(), static_cast<std::size_t>(cfg.beam_width));
  for (std::size_t i = 1; i < a.n_best.size(); ++i) {
    EXPECT_GE(a.n_best[i - 1].fused_score, a.n_best[i].fused_score);
  }
}

TEST(BeamDecode, TopKAndFloorLimitCandidates) {
  const auto inv = Abc();
  // c is far below the floor, so it can never appear.
  const LogitMatrix m(2, {3, 2.9f, -20, 0, 0, 3, 2.9f, -20, 0, 0}, inv);
  DecodeConfig cfg;
  cfg.alpha = 0.0;
  cfg.top_k_tokens = 1;
  for (const auto &h : BeamDecode(m, cfg).n_best) {
    for (int tok : h.tokens) EXPECT_EQ(tok, 0);
  }
  cfg.top_k_tokens = 16;
  for (const auto &h : BeamDecode(m, cfg).n_best) {
    for (int tok : h.tokens) EXPECT_NE(tok, 2);
  }
}

TEST(BeamDecode, ConfigErrors) {
  const auto inv = Abc();
  const LogitMatrix m = Path({0}, inv);
  DecodeConfig cfg;
  EXPECT_THROW(BeamDecode(m, cfg), ConfigError);  // alpha > 0, no model
  cfg.alpha = 0;
  cfg.beam_width = 0;
  EXPECT_THROW(BeamDecode(m, cfg), ConfigError);
  cfg.beam_width = 1;
  cfg.top_k_tokens = 0;
  EXPECT_THROW(BeamDecode(m, cfg), ConfigError);
  cfg.top_k_tokens = 1;
  cfg.alpha = -0.1;
  EXPECT_THROW(BeamDecode(m, cfg), ConfigError);
}

TEST(LogitMatrix, Validation) {
  const auto inv = Abc();
  EXPECT_THROW(LogitMatrix(0, {}, inv), ConfigError);
  EXPECT_THROW(LogitMatrix(1, {1, 2, 3}, inv), ConfigError);
  EXPECT_THROW(LogitMatrix(1, {1, 2, 3, 4, std::nanf("")}, inv), ConfigError);
  EXPECT_THROW(LogitMatrix(1, {1, 2, 3, 4, 5}, nullptr), ConfigError);
}

TEST(LogitMatrix, BinaryRoundTripAndErrors) {
  const auto inv = Abc();
  const LogitMatrix m(2, {1.5f, -2, 0, 3, 0.25f, 0, 0, 1, 1, -7}, inv);
  std::stringstream ss;
  WriteLogitsBinary(ss, m);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 5), std::string("CTCL\x01", 5));
  EXPECT_EQ(bytes.size(), 13u + 40u);
  std::istringstream in(bytes);
  EXPECT_EQ(ReadLogitsBinary(in, inv).values(), m.values());

  const auto bigger = std::make_shared<const TokenInventory>(
      std::vector<std::string>{"a", "b", "c", "d", "<blank>", "|"}, 4, 5,
      std::nullopt);
  std::istringstream mismatch(bytes);
  EXPECT_THROW(ReadLogitsBinary(mismatch, bigger), FormatError);
  std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(ReadLogitsBinary(truncated, inv), FormatError);
  std::istringstream trailing(bytes + "x");
  EXPECT_THROW(ReadLogitsBinary(trailing, inv), FormatError);
  std::string v2 = bytes;
  v2[4] = 2;
  std::istringstream version(v2);
  EXPECT_THROW(ReadLogitsBinary(version, inv), UnsupportedError);
}

TEST(LogitMatrix, TextLoader) {
  const auto inv = Abc();
  std::istringstream in("0 1 2 3 4\n\n-1.5 0 0 0 2e1\n");
  const LogitMatrix m = ReadLogitsText(in, inv);
  EXPECT_EQ(m.num_frames(), 2);
  EXPECT_EQ(m.at(1, 4), 20.0f);
  std::istringstream short_row("0 1 2\n");
  EXPECT_THROW(ReadLogitsText(short_row, inv), ParseError);
  std::istringstream junk("0 1 x 3 4\n");
  EXPECT_THROW(ReadLogitsText(junk, inv), ParseError);
}

