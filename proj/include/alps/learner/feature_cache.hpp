#pragma once

#include <unordered_map>
#include <vector>

#include "alps/corpus/types.hpp"
#include "alps/learner/features.hpp"

namespace alps::learn {

/// Memoized features per sentence, keyed by address. Sentences must outlive
/// the cache and stay put. Not thread-safe.
class FeatureCache {
 public:
  const std::vector<FeatureVector>& tokens(const Sentence& s) {
    auto it = tokens_.find(&s);
    if (it != tokens_.end()) return it->second;
    std::vector<FeatureVector> f;
    f.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f.push_back(token_features(s, i));
    return tokens_.emplace(&s, std::move(f)).first->second;
  }

  /// Arc features laid out as [mod-1][head], heads 0..n.
  const std::vector<FeatureVector>& arcs(const Sentence& s) {
    auto it = arcs_.find(&s);
    if (it != arcs_.end()) return it->second;
    const std::size_t n = s.size();
    std::vector<FeatureVector> f((n + 1) * n);
    for (std::size_t m = 1; m <= n; ++m)
      for (std::size_t h = 0; h <= n; ++h)
        if (h != m) f[(m - 1) * (n + 1) + h] = arc_features(s, h, m);
    return arcs_.emplace(&s, std::move(f)).first->second;
  }

  void clear() {
    tokens_.clear();
    arcs_.clear();
  }

 private:
  std::unordered_map<const Sentence*, std::vector<FeatureVector>> tokens_;
  std::unordered_map<const Sentence*, std::vector<FeatureVector>> arcs_;
};

}  // namespace alps::learn
