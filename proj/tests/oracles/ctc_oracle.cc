#include "ctc_oracle.h"

#include <cmath>

namespace oracle {

std::map<std::vector<int>, double> LabelingLogProbs(const Logits &logits,
                                                    int blank) {
  const int T = static_cast<int>(logits.size());
  const int V = static_cast<int>(logits[0].size());
  std::vector<std::vector<long double>> p(T, std::vector<long double>(V));
  for (int t = 0; t < T; ++t) {
    long double z = 0;
    for (int v = 0; v < V; ++v) z += std::exp((long double)logits[t][v]);
    for (int v = 0; v < V; ++v) p[t][v] = std::exp((long double)logits[t][v]) / z;
  }
  std::map<std::vector<int>, long double> mass;
  std::vector<int> path(T, 0);
  while (true) {
    long double pr = 1;
    std::vector<int> label;
    int prev = -1;
    for (int t = 0; t < T; ++t) {
      pr *= p[t][path[t]];
      if (path[t] != blank && path[t] != prev) label.push_back(path[t]);
      prev = path[t];
    }
    mass[label] += pr;
    int t = T - 1;
    while (t >= 0 && ++path[t] == V) path[t--] = 0;
    if (t < 0) break;
  }
  std::map<std::vector<int>, double> out;
  for (const auto &[l, m] : mass) out[l] = static_cast<double>(std::log(m));
  return out;
}

std::vector<std::vector<int>> AllLabelings(int vocab, int blank, int max_len) {
  std::vector<int> symbols;
  for (int v = 0; v < vocab; ++v) {
    if (v != blank) symbols.push_back(v);
  }
  std::vector<std::vector<int>> out{{}};
  std::vector<std::vector<int>> frontier{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto &l : frontier) {
      for (int s : symbols) {
        auto e = l;
        e.push_back(s);
        next.push_back(e);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace oracle
