#pragma once

// Arc-factored parser: tree CRF over hashed arc features, plus an independent
// per-arc softmax over dependency labels.

#include <cmath>
#include <span>
#include <vector>

#include "alps/learner/feature_cache.hpp"
#include "alps/learner/params.hpp"
#include "alps/tree/tree_crf.hpp"
#include "alps/util/labels.hpp"
#include "alps/util/logmath.hpp"

namespace alps::learn {

struct ParserCore {
  LabelSet deprels;
  std::uint64_t arc_salt = 0xa4c;
  std::uint64_t label_salt = 0x1ab;

  ParserCore() = default;
  explicit ParserCore(LabelSet rels) : deprels(std::move(rels)) {}

  /// feats laid out as FeatureCache::arcs.
  tree::ArcScores scores(const ParameterStore& p, std::size_t n,
                         std::span<const FeatureVector> feats) const {
    tree::ArcScores a(n);
    for (std::size_t m = 1; m <= n; ++m)
      for (std::size_t h = 0; h <= n; ++h) {
        if (h == m) continue;
        double v = 0.0;
        for (const Feature& f : feats[(m - 1) * (n + 1) + h]) v += f.value * p.hashed[p.slot(f.id ^ arc_salt)];
        a.set(h, m, v);
      }
    return a;
  }

  void backprop(const ParameterStore& p, std::size_t n, std::span<const FeatureVector> feats,
                const Matrix& grad, GradBuffer& buf) const {
    for (std::size_t m = 1; m <= n; ++m)
      for (std::size_t h = 0; h <= n; ++h) {
        if (h == m) continue;
        const double g = grad(h, m - 1);
        if (g == 0.0) continue;
        for (const Feature& f : feats[(m - 1) * (n + 1) + h])
          buf.add_hashed(p.slot(f.id ^ arc_salt), g * f.value);
      }
  }

  std::vector<double> label_probs(const ParameterStore& p, const FeatureVector& arc) const {
    const std::size_t K = deprels.size();
    std::vector<double> z(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
      for (const Feature& f : arc) z[k] += f.value * p.hashed[p.slot(f.id ^ label_salt, k)];
    const double lse = log_sum_exp(z);
    for (double& v : z) v = std::exp(v - lse);
    return z;
  }

  /// Cross-entropy of the gold label for one arc; accumulates its gradient.
  double label_loss(const ParameterStore& p, const FeatureVector& arc, int gold,
                    GradBuffer& buf) const {
    std::vector<double> probs = label_probs(p, arc);
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const double g = probs[k] - (static_cast<int>(k) == gold ? 1.0 : 0.0);
      if (g == 0.0) continue;
      for (const Feature& f : arc) buf.add_hashed(p.slot(f.id ^ label_salt, k), g * f.value);
    }
    return -std::log(std::max(probs[gold], 1e-300));
  }

  int best_label(const ParameterStore& p, const FeatureVector& arc) const {
    std::vector<double> probs = label_probs(p, arc);
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k)
      if (probs[k] > probs[best]) best = k;
    return static_cast<int>(best);
  }
};

}  // namespace alps::learn
