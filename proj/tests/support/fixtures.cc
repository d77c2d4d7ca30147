#include "fixtures.h"

#include <stdexcept>

#include "ctclm/utf8.h"

namespace fixture {

using ctclm::TokenInventory;

namespace {

int Tok(const TokenInventory &inv, const std::string &s) {
  auto idx = inv.IndexOf(s);
  if (!idx) throw std::runtime_error("fixture: no token '" + s + "'");
  return *idx;
}

std::vector<float> Peak(const TokenInventory &inv, int tok, float peak) {
  std::vector<float> row(inv.size(), 0.0f);
  row[tok] = peak;
  return row;
}

std::shared_ptr<const TokenInventory> InventoryFor(
    const std::vector<std::string> &a, const std::vector<std::string> &b) {
  std::vector<std::string> all = a;
  all.insert(all.end(), b.begin(), b.end());
  return std::make_shared<const TokenInventory>(
      ctclm::BuildTokenInventory(all, {}, true));
}

}  // namespace

Frames FramesForText(const std::string &text, const TokenInventory &inv,
                     float peak) {
  Frames f;
  const auto words = ctclm::SplitWords(text);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) {
      f.rows.push_back(Peak(inv, inv.delimiter_index(), peak));
      f.rows.push_back(Peak(inv, inv.blank_index(), peak));
    }
    for (char32_t cp : ctclm::DecodeUtf8(words[i])) {
      f.char_frame.push_back(static_cast<int>(f.rows.size()));
      f.rows.push_back(Peak(inv, Tok(inv, ctclm::EncodeUtf8(cp)), peak));
      f.rows.push_back(Peak(inv, inv.blank_index(), peak));
    }
  }
  if (f.rows.empty()) f.rows.push_back(Peak(inv, inv.blank_index(), peak));
  return f;
}

ctclm::LogitMatrix ToMatrix(const Frames &frames,
                            std::shared_ptr<const TokenInventory> inv) {
  std::vector<float> flat;
  for (const auto &r : frames.rows) flat.insert(flat.end(), r.begin(), r.end());
  return ctclm::LogitMatrix(static_cast<int>(frames.rows.size()),
                            std::move(flat), std::move(inv));
}

void Confuse(Frames &frames, const TokenInventory &inv, int ch,
             const std::string &right, const std::string &wrong,
             float margin) {
  auto &row = frames.rows.at(frames.char_frame.at(ch));
  const float peak = row[Tok(inv, right)];
  row[Tok(inv, wrong)] = peak;
  row[Tok(inv, right)] = peak - margin;
}

DevSet HomophoneFixture() {
  struct Pair {
    std::string ctx, right, wrong, tail, wrong_ctx, wrong_tail;
  };
  // Real homophone pairs; each spelling pair differs in one code point.
  const std::vector<Pair> pairs = {
      {"সারা", "দিন", "দীন", "কাজ", "অতি", "মানুষ"},
      {"আমরা", "সব", "শব", "জানি", "নদীতে", "ভাসে"},
      {"মোট", "বিশ", "বিষ", "জন", "সাপের", "আছে"},
      {"নদীর", "কূল", "কুল", "ভাঙে", "বংশের", "রক্ষা"},
      {"গান", "শোনা", "সোনা", "ভালো", "খাঁটি", "দামি"},
  };
  DevSet ds;
  std::vector<std::string> refs;
  for (const auto &p : pairs) {
    for (int rep = 0; rep < 3; ++rep) {
      ds.lm_corpus.push_back(p.ctx + " " + p.right + " " + p.tail);
      ds.lm_corpus.push_back(p.wrong_ctx + " " + p.wrong + " " + p.wrong_tail);
    }
    ds.lm_corpus.push_back(p.right + " " + p.tail);
    ds.lm_corpus.push_back(p.ctx + " " + p.right);
    ds.heldout.push_back(p.ctx + " " + p.right + " " + p.tail);
    refs.push_back(p.ctx + " " + p.right + " " + p.tail);
  }
  ds.inventory = InventoryFor(ds.lm_corpus, refs);

  const float margins[4] = {0.3f, 0.5f, 0.7f, 0.9f};
  for (int variant = 0; variant < 4; ++variant) {
    for (const auto &p : pairs) {
      const std::string ref = p.ctx + " " + p.right + " " + p.tail;
      Frames f = FramesForText(ref, *ds.inventory);
      const auto r = ctclm::DecodeUtf8(p.right);
      const auto w = ctclm::DecodeUtf8(p.wrong);
      std::size_t diff = 0;
      while (r[diff] == w[diff]) ++diff;
      const int ch = static_cast<int>(ctclm::DecodeUtf8(p.ctx).size() + diff);
      Confuse(f, *ds.inventory, ch, ctclm::EncodeUtf8(r[diff]),
              ctclm::EncodeUtf8(w[diff]), margins[variant]);
      ds.dev.push_back({ToMatrix(f, ds.inventory), ref});
    }
  }
  return ds;
}

DevSet TrigramFixture(std::uint64_t seed, int num_dev) {
  const std::vector<std::string> words = {"pa", "ba", "ta", "da", "ka", "ga",
                                          "mi", "ni", "so", "zo", "lu", "ru"};
  const int W = static_cast<int>(words.size());
  std::mt19937_64 rng(seed);
  std::vector<int> next(W * W);
  for (auto &n : next) n = static_cast<int>(rng() % W);

  auto sentence = [&](int len) {
    std::vector<int> s;
    s.push_back(static_cast<int>(rng() % W));
    s.push_back(static_cast<int>(rng() % W));
    while (static_cast<int>(s.size()) < len) {
      const bool follow = rng() % 10 != 0;
      s.push_back(follow ? next[s[s.size() - 2] * W + s.back()]
                         : static_cast<int>(rng() % W));
    }
    return s;
  };
  auto text = [&](const std::vector<int> &s) {
    std::string t;
    for (int w : s) t += (t.empty() ? "" : " ") + words[w];
    return t;
  };

  DevSet ds;
  for (int i = 0; i < 800; ++i) ds.lm_corpus.push_back(text(sentence(8)));
  for (int i = 0; i < 100; ++i) ds.heldout.push_back(text(sentence(8)));
  ds.inventory = InventoryFor(ds.lm_corpus, {});

  for (int i = 0; i < num_dev; ++i) {
    const auto s = sentence(6);
    const std::string ref = text(s);
    Frames f = FramesForText(ref, *ds.inventory);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (rng() % 3 != 0) continue;
      const std::string &right = words[s[k]];
      const std::string &wrong = words[s[k] ^ 1];
      Confuse(f, *ds.inventory, static_cast<int>(2 * k), right.substr(0, 1),
              wrong.substr(0, 1), 0.4f);
    }
    ds.dev.push_back({ToMatrix(f, ds.inventory), ref});
  }
  return ds;
}

std::vector<std::string> RandomCorpus(std::mt19937_64 &rng, int max_sentences,
                                      int max_vocab, int max_len) {
  const int vocab = 2 + static_cast<int>(rng() % (max_vocab - 1));
  const int n = 1 + static_cast<int>(rng() % max_sentences);
  // Skewed word choice so counts-of-counts vary between corpora.
  std::vector<std::string> lines;
  for (int i = 0; i < n; ++i) {
    const int len = 1 + static_cast<int>(rng() % max_len);
    std::string line;
    for (int j = 0; j < len; ++j) {
      const int a = static_cast<int>(rng() % vocab);
      const int b = static_cast<int>(rng() % vocab);
      line += (j ? " " : "") + ("w" + std::to_string(std::min(a, b)));
    }
    lines.push_back(line);
  }
  return lines;
}

}  // namespace fixture
