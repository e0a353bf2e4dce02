#pragma once

// Linear-chain CRF tagger over hashed features.

#include <span>
#include <vector>

#include "alps/chain/chain_crf.hpp"
#include "alps/corpus/annotation.hpp"
#include "alps/learner/feature_cache.hpp"
#include "alps/learner/params.hpp"
#include "alps/util/labels.hpp"

namespace alps::learn {

/// Scoring logic of a BIO tagger living inside a shared ParameterStore.
/// The dense block [offset, offset + L*L + 2L) holds transitions, start and
/// end scores.
struct TaggerCore {
  LabelSet labels;
  std::size_t dense_offset = 0;
  std::uint64_t salt = 0x7a6;
  std::vector<std::uint8_t> transition_ok;  // [L x L]
  std::vector<std::uint8_t> start_ok;       // [L]

  TaggerCore() = default;
  TaggerCore(LabelSet ls, std::size_t offset) : labels(std::move(ls)), dense_offset(offset) {
    const std::size_t L = labels.size();
    transition_ok.assign(L * L, 1);
    start_ok.assign(L, 1);
    for (std::size_t b = 0; b < L; ++b) {
      start_ok[b] = bio_transition_ok("", labels.name(static_cast<int>(b)));
      for (std::size_t a = 0; a < L; ++a)
        transition_ok[a * L + b] =
            bio_transition_ok(labels.name(static_cast<int>(a)), labels.name(static_cast<int>(b)));
    }
  }

  std::size_t num_labels() const { return labels.size(); }
  std::size_t dense_size() const { return num_labels() * num_labels() + 2 * num_labels(); }
  std::size_t trans_index(std::size_t a, std::size_t b) const {
    return dense_offset + a * num_labels() + b;
  }
  std::size_t start_index(std::size_t l) const {
    return dense_offset + num_labels() * num_labels() + l;
  }
  std::size_t end_index(std::size_t l) const {
    return dense_offset + num_labels() * num_labels() + num_labels() + l;
  }

  /// Raw linear scores; BIO-invalid transitions are -inf.
  chain::ChainScores scores(const ParameterStore& p, std::span<const FeatureVector> feats) const {
    const std::size_t n = feats.size(), L = num_labels();
    chain::ChainScores s(n, L);
    for (std::size_t i = 0; i < n; ++i)
      for (const Feature& f : feats[i])
        for (std::size_t l = 0; l < L; ++l)
          s.emissions(i, l) += f.value * p.hashed[p.slot(f.id ^ salt, l)];
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b)
        s.transitions(a, b) = transition_ok[a * L + b] ? p.dense[trans_index(a, b)] : kNegInf;
    for (std::size_t l = 0; l < L; ++l) {
      s.start[l] = start_ok[l] ? p.dense[start_index(l)] : kNegInf;
      s.end[l] = p.dense[end_index(l)];
    }
    return s;
  }

  void backprop(const ParameterStore& p, std::span<const FeatureVector> feats,
                const chain::ChainGradient& g, GradBuffer& buf) const {
    const std::size_t n = feats.size(), L = num_labels();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < L; ++l) {
        const double gl = g.emissions(i, l);
        if (gl == 0.0) continue;
        for (const Feature& f : feats[i]) buf.add_hashed(p.slot(f.id ^ salt, l), gl * f.value);
      }
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b)
        if (transition_ok[a * L + b]) buf.add_dense(trans_index(a, b), g.transitions(a, b));
    for (std::size_t l = 0; l < L; ++l) {
      if (start_ok[l]) buf.add_dense(start_index(l), g.start[l]);
      buf.add_dense(end_index(l), g.end[l]);
    }
  }

  std::vector<int> gold_ids(const Sentence& s) const {
    std::vector<int> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) y[i] = labels.id(s.tokens[i].tag);
    return y;
  }

  std::vector<std::string> names(const std::vector<int>& ids) const {
    std::vector<std::string> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = labels.name(ids[i]);
    return out;
  }
};

}  // namespace alps::learn
