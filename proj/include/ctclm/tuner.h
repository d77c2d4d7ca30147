// include/ctclm/tuner.h
//
// Grid search over the shallow-fusion weights (alpha, beta) minimizing pooled
// WER on a development set.

#ifndef CTCLM_TUNER_H_
#define CTCLM_TUNER_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctclm/ctc_decoder.h"
#include "ctclm/ngram_lm.h"

namespace ctclm {

class GridSpec {
 public:
  // Sorts both axes. Throws ConfigError for an empty axis, a duplicate value,
  // a negative or non-finite alpha, or a non-finite beta.
  GridSpec(std::vector<double> alphas, std::vector<double> betas);

  // alpha in {0.0, 0.1, ..., 1.5}, beta in {-1.0, -0.5, ..., 1.5}.
  static GridSpec Default();

  const std::vector<double> &alphas() const { return alphas_; }
  const std::vector<double> &betas() const { return betas_; }

 private:
  std::vector<double> alphas_;
  std::vector<double> betas_;
};

struct DevUtterance {
  LogitMatrix logits;
  std::string reference;
};

struct CellResult {
  double wer = 0.0;
  double cer = 0.0;
  // Set when decoding or scoring failed; such cells never win.
  std::optional<std::string> error;
};

struct TuneResult {
  double best_alpha = 0.0;
  double best_beta = 0.0;
  double best_wer = 0.0;
  // Keyed by (alpha, beta); iteration order is ascending alpha, then beta.
  std::map<std::pair<double, double>, CellResult> table;
};

// Decodes the whole dev set for every cell with (alpha, beta) substituted
// into `base_cfg`. The argmin over pooled WER breaks ties by lower alpha, then
// lower beta. Cells run on up to `jobs` threads. Throws ConfigError for an
// empty dev set and InputError when every cell failed.
TuneResult GridSearch(const std::vector<DevUtterance> &dev,
                      const NGramModel &model, const GridSpec &grid,
                      const DecodeConfig &base_cfg, int jobs = 1);

}  // namespace ctclm

#endif  // CTCLM_TUNER_H_
