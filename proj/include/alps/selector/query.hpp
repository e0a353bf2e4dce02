#pragma once

// Sentence-level querying and ratio-based sub-structure selection.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "alps/util/random.hpp"

namespace alps::al {

/// A pool candidate: its token count and its per-sub-structure uncertainty
/// (larger = more uncertain).
struct Candidate {
  std::size_t index = 0;  // caller's id, e.g. corpus index
  std::size_t tokens = 0;
  std::vector<double> uncertainty;

  double mean_uncertainty() const {
    if (uncertainty.empty()) return 0.0;
    return std::accumulate(uncertainty.begin(), uncertainty.end(), 0.0) /
           static_cast<double>(uncertainty.size());
  }
};

/// Takes candidates in the given order until at least `budget` tokens are
/// collected. Returns positions into `order`'s source list.
inline std::vector<std::size_t> take_until(const std::vector<std::size_t>& order,
                                           const std::vector<Candidate>& pool, std::size_t budget) {
  std::vector<std::size_t> picked;
  std::size_t tokens = 0;
  for (std::size_t k : order) {
    if (tokens >= budget) break;
    picked.push_back(k);
    tokens += pool[k].tokens;
  }
  return picked;
}

/// Ranks by mean sub-structure uncertainty, most uncertain first; ties keep
/// pool order. Returns indices into `pool`.
inline std::vector<std::size_t> sentence_query(const std::vector<Candidate>& pool, std::size_t budget) {
  std::vector<double> score(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) score[i] = pool[i].mean_uncertainty();
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return take_until(order, pool, budget);
}

/// Random ranking.
inline std::vector<std::size_t> random_query(const std::vector<Candidate>& pool, std::size_t budget,
                                             Rng& rng) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_in_place(order, rng);
  return take_until(order, pool, budget);
}

/// ceil(r * n) that ignores floating noise just above an integer.
inline std::size_t ratio_count(double r, std::size_t n) {
  const double x = r * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(x - 1e-9)));
}

/// Union of each sentence's ceil(r * n_i) most uncertain positions and the
/// ceil(r * sum n_i) most uncertain positions over all of S. Ties go to the
/// earlier sentence, then the earlier position.
inline std::vector<std::set<std::size_t>> partial_select(
    const std::vector<std::vector<double>>& uncertainty, double r) {
  std::vector<std::set<std::size_t>> out(uncertainty.size());
  struct Item {
    double u;
    std::size_t sent, pos;
  };
  auto more_uncertain = [](const Item& a, const Item& b) {
    if (a.u != b.u) return a.u > b.u;
    if (a.sent != b.sent) return a.sent < b.sent;
    return a.pos < b.pos;
  };
  std::vector<Item> all;
  for (std::size_t s = 0; s < uncertainty.size(); ++s) {
    std::vector<Item> local;
    for (std::size_t p = 0; p < uncertainty[s].size(); ++p) local.push_back({uncertainty[s][p], s, p});
    std::sort(local.begin(), local.end(), more_uncertain);
    const std::size_t k = ratio_count(r, local.size());
    for (std::size_t i = 0; i < k; ++i) out[s].insert(local[i].pos);
    all.insert(all.end(), local.begin(), local.end());
  }
  std::sort(all.begin(), all.end(), more_uncertain);
  const std::size_t k = ratio_count(r, all.size());
  for (std::size_t i = 0; i < k; ++i) out[all[i].sent].insert(all[i].pos);
  return out;
}

}  // namespace alps::al
