// Test-side transport oracle: exact W1 by enumerating all spanning trees of
// the bipartite transport graph. Exponential in the atom counts; keep both
// sides at or below roughly five atoms.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "aai/moduli.hpp"
#include "aai/rng.hpp"

namespace aai_testing {

inline aai::DiscreteMeasure measure(std::vector<std::vector<double>> atoms,
                                    std::vector<double> weights) {
  return aai::DiscreteMeasure::normalized(std::move(atoms),
                                          std::move(weights));
}

// Each spanning tree determines a unique basic flow, and the LP optimum is
// attained at a feasible one.
inline double w1_bruteforce(const aai::DiscreteMeasure& mu,
                            const aai::DiscreteMeasure& nu) {
  const int m = static_cast<int>(mu.size());
  const int n = static_cast<int>(nu.size());
  const int edges = m * n;
  const int need = m + n - 1;
  std::vector<double> dist(edges);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      dist[i * n + j] = aai::ground_distance(mu.atoms[i], nu.atoms[j]);

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> comb(need);
  std::iota(comb.begin(), comb.end(), 0);
  auto advance = [&]() {
    int k = need - 1;
    while (k >= 0 && comb[k] == edges - need + k) --k;
    if (k < 0) return false;
    ++comb[k];
    for (int j = k + 1; j < need; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };
  do {
    // Solve the tree flow by leaf elimination.
    std::vector<double> bal(m + n);
    for (int i = 0; i < m; ++i) bal[i] = mu.weights[i];
    for (int j = 0; j < n; ++j) bal[m + j] = -nu.weights[j];
    std::vector<int> degree(m + n, 0);
    std::vector<bool> used(need, false);
    for (int e : comb) {
      ++degree[e / n];
      ++degree[m + e % n];
    }
    bool ok = true;
    for (int v = 0; v < m + n; ++v)
      if (degree[v] == 0) ok = false;  // not spanning
    double cost = 0.0;
    bool feasible = ok;
    int remaining = need;
    while (feasible && remaining > 0) {
      int leaf = -1;
      for (int v = 0; v < m + n; ++v)
        if (degree[v] == 1) {
          leaf = v;
          break;
        }
      if (leaf < 0) {
        feasible = false;  // a cycle: not a tree
        break;
      }
      int pick = -1;
      for (int k = 0; k < need; ++k) {
        if (used[k]) continue;
        int e = comb[k];
        if (e / n == leaf || m + e % n == leaf) {
          pick = k;
          break;
        }
      }
      int e = comb[pick];
      int src = e / n, dst = m + e % n;
      double flow = leaf < m ? bal[leaf] : -bal[leaf];
      if (flow < -1e-12) {
        feasible = false;
        break;
      }
      cost += flow * dist[e];
      // The leaf pushes its entire signed balance across its only edge.
      int other = (leaf == src) ? dst : src;
      bal[other] += bal[leaf];
      bal[leaf] = 0.0;
      used[pick] = true;
      --degree[leaf];
      --degree[other];
      --remaining;
    }
    if (feasible && remaining == 0) {
      for (double v : bal)
        if (std::abs(v) > 1e-9) feasible = false;
    } else {
      feasible = false;
    }
    if (feasible) best = std::min(best, cost);
  } while (advance());
  return best;
}

inline aai::DiscreteMeasure random_measure(const aai::RandomStream& s,
                                           std::uint64_t key, int max_atoms,
                                           int dim) {
  int m = 1 + static_cast<int>(s.u01("m", key) * max_atoms);
  if (m > max_atoms) m = max_atoms;
  std::vector<std::vector<double>> atoms;
  std::vector<double> w;
  for (int a = 0; a < m; ++a) {
    std::vector<double> x(dim);
    for (int d = 0; d < dim; ++d) x[d] = s.u01("x", key, a * 8 + d);
    atoms.push_back(x);
    w.push_back(0.05 + s.u01("w", key, a));
  }
  return measure(std::move(atoms), std::move(w));
}

}  // namespace aai_testing
