// src/tuner.cc

#include "ctclm/tuner.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ctclm/error.h"
#include "ctclm/eval_metrics.h"

namespace ctclm {

namespace {

void SortUnique(std::vector<double> &v, const char *axis) {
  if (v.empty()) throw ConfigError(std::string(axis) + " grid is empty");
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw ConfigError(std::string(axis) + " grid has duplicate values");
  }
}

}  // namespace

GridSpec::GridSpec(std::vector<double> alphas, std::vector<double> betas)
    : alphas_(std::move(alphas)), betas_(std::move(betas)) {
  for (double a : alphas_) {
    if (!std::isfinite(a) || a < 0.0) {
      throw ConfigError("alpha values must be finite and >= 0");
    }
  }
  for (double b : betas_) {
    if (!std::isfinite(b)) throw ConfigError("beta values must be finite");
  }
  SortUnique(alphas_, "alpha");
  SortUnique(betas_, "beta");
}

GridSpec GridSpec::Default() {
  std::vector<double> alphas;
  for (int i = 0; i <= 15; ++i) alphas.push_back(i / 10.0);
  std::vector<double> betas;
  for (int i = -2; i <= 3; ++i) betas.push_back(i / 2.0);
  return GridSpec(std::move(alphas), std::move(betas));
}

TuneResult GridSearch(const std::vector<DevUtterance> &dev,
                      const NGramModel &model, const GridSpec &grid,
                      const DecodeConfig &base_cfg, int jobs) {
  if (dev.empty()) throw ConfigError("grid search: empty dev set");

  std::vector<std::pair<double, double>> cells;
  for (double a : grid.alphas()) {
    for (double b : grid.betas()) cells.emplace_back(a, b);
  }
  std::vector<CellResult> results(cells.size());

  auto run_cell = [&](std::size_t i) {
    DecodeConfig cfg = base_cfg;
    cfg.alpha = cells[i].first;
    cfg.beta = cells[i].second;
    try {
      std::vector<EvalPair> pairs;
      pairs.reserve(dev.size());
      for (const auto &u : dev) {
        pairs.push_back({u.reference, BeamDecode(u.logits, cfg, &model).text});
      }
      const EvalReport rep = CorpusReport(pairs, Granularity::kBoth);
      results[i].wer = *rep.wer;
      results[i].cer = *rep.cer;
    } catch (const std::exception &e) {
      results[i].error = e.what();
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, cells.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    }
    for (auto &th : pool) th.join();
  }

  TuneResult out;
  bool found = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.table.emplace(cells[i], results[i]);
  }
  // Map order is (alpha, beta) ascending, so a strict improvement keeps the
  // lowest cell on ties.
  for (const auto &[key, cell] : out.table) {
    if (cell.error) continue;
    if (!found || cell.wer < out.best_wer) {
      out.best_alpha = key.first;
      out.best_beta = key.second;
      out.best_wer = cell.wer;
      found = true;
    }
  }
  if (!found) throw InputError("grid search: every cell failed");
  return out;
}

}  // namespace ctclm
