#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace alps {

enum class Acquisition { Margin, LeastConfidence, Entropy };

inline Acquisition parse_acquisition(std::string_view s) {
  if (s == "margin") return Acquisition::Margin;
  if (s == "least-confidence" || s == "lc") return Acquisition::LeastConfidence;
  if (s == "entropy") return Acquisition::Entropy;
  throw std::invalid_argument("unknown acquisition '" + std::string(s) + "'");
}

inline const char* to_string(Acquisition a) {
  switch (a) {
    case Acquisition::Margin: return "margin";
    case Acquisition::LeastConfidence: return "least-confidence";
    case Acquisition::Entropy: return "entropy";
  }
  return "?";
}

/// Top-two statistics of a probability row. Ties resolve to the lowest index.
struct TopTwo {
  std::size_t best = 0;
  double p1 = 0.0;
  double p2 = 0.0;
};

inline TopTwo top_two(std::span<const double> probs) {
  TopTwo t;
  t.p1 = -1.0;
  t.p2 = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double p = probs[i];
    if (p > t.p1) {
      t.p2 = t.p1 < 0 ? 0.0 : t.p1;
      t.p1 = p;
      t.best = i;
    } else if (p > t.p2) {
      t.p2 = p;
    }
  }
  if (t.p1 < 0) t.p1 = 0;
  return t;
}

/// p(1st) - p(2nd), clamped to [0, 1]. A single-option row has margin 1.
inline double margin_of(std::span<const double> probs) {
  TopTwo t = top_two(probs);
  double m = t.p1 - t.p2;
  return m < 0 ? 0.0 : (m > 1 ? 1.0 : m);
}

inline double least_confidence_of(std::span<const double> probs) {
  return 1.0 - top_two(probs).p1;
}

inline double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0) h -= p * std::log(p);
  return h;
}

/// Uncertainty score where larger means more uncertain.
inline double uncertainty_of(std::span<const double> probs, Acquisition a) {
  switch (a) {
    case Acquisition::Margin: return 1.0 - margin_of(probs);
    case Acquisition::LeastConfidence: return least_confidence_of(probs);
    case Acquisition::Entropy: return entropy_of(probs);
  }
  return 0.0;
}

}  // namespace alps
