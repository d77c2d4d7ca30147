// Synthetic decoding fixtures: idealized logits rendered from text, a
// homophone dev set where only the language model can pick the right
// spelling, and a corpus with strong trigram structure.

#ifndef CTCLM_TESTS_FIXTURES_H_
#define CTCLM_TESTS_FIXTURES_H_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ctclm/ctc_decoder.h"
#include "ctclm/text_normalizer.h"
#include "ctclm/tuner.h"

namespace fixture {

// One row per frame. Each character gets a peaked frame followed by a blank
// frame; word boundaries are a delimiter frame plus a blank frame.
struct Frames {
  std::vector<std::vector<float>> rows;
  // Frame carrying the i-th non-space code point of the text.
  std::vector<int> char_frame;
};

Frames FramesForText(const std::string &text,
                     const ctclm::TokenInventory &inv, float peak = 8.0f);

ctclm::LogitMatrix ToMatrix(const Frames &frames,
                            std::shared_ptr<const ctclm::TokenInventory> inv);

// Makes `wrong` beat `right` by `margin` nats on character frame `ch`.
void Confuse(Frames &frames, const ctclm::TokenInventory &inv, int ch,
             const std::string &right, const std::string &wrong,
             float margin);

struct DevSet {
  std::shared_ptr<const ctclm::TokenInventory> inventory;
  std::vector<std::string> lm_corpus;
  std::vector<std::string> heldout;
  std::vector<ctclm::DevUtterance> dev;
};

// 20 three-word utterances. The middle word has a homophone that the
// acoustics slightly prefer; the left context selects the right spelling.
DevSet HomophoneFixture();

// Twelve two-letter words in six acoustically confusable pairs; each word is
// mostly determined by the two before it. Dev utterances get confusions on
// about a third of their words.
DevSet TrigramFixture(std::uint64_t seed = 7, int num_dev = 30);

// Random toy corpus: up to `max_sentences` lines over at most `max_vocab`
// words.
std::vector<std::string> RandomCorpus(std::mt19937_64 &rng, int max_sentences,
                                      int max_vocab, int max_len = 8);

}  // namespace fixture

#endif  // CTCLM_TESTS_FIXTURES_H_
