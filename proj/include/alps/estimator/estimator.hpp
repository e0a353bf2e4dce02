#pragma once

// Error-rate estimation from margins and the adaptive selection ratio.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "alps/corpus/types.hpp"
#include "alps/util/error.hpp"

namespace alps::est {

inline constexpr double kMarginEps = 1e-6;
inline constexpr double kConfidentMargin = 0.5;

struct CorrectnessSample {
  double margin = 0.0;
  bool label = false;  // argmax correct and margin above the threshold
};

inline bool confidently_correct(bool correct, double margin) {
  return correct && margin > kConfidentMargin;
}

inline double margin_feature(double margin) { return std::log(margin + kMarginEps); }

/// p(correct | margin) = sigmoid(weight * ln(margin + eps) + bias).
struct LogisticModel {
  double weight = 0.0;
  double bias = 0.0;
  bool constant = false;  // single-class fallback: p = sigmoid(bias)

  double predict(double margin) const {
    const double z = constant ? bias : weight * margin_feature(margin) + bias;
    return 1.0 / (1.0 + std::exp(-z));
  }
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One sample per sub-structure. `Model::analyze` must return margins and
/// argmax values and `Model::gold_values` the gold ones.
template <typename Model>
std::vector<CorrectnessSample> collect_dev_samples(const Model& model,
                                                   std::span<const Sentence* const> dev) {
  if (dev.empty()) throw std::invalid_argument("collect_dev_samples: empty dev set");
  std::vector<CorrectnessSample> out;
  for (const Sentence* s : dev) {
    auto a = model.analyze(*s);
    auto gold = model.gold_values(*s);
    for (std::size_t i = 0; i < gold.size(); ++i)
      out.push_back({a.margin[i], confidently_correct(a.argmax[i] == gold[i], a.margin[i])});
  }
  return out;
}

/// Maximum-likelihood 1-D logistic regression by Newton's method.
inline LogisticModel fit_logistic(std::span<const CorrectnessSample> samples) {
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label ? 1 : 0;
  if (samples.size() < 2 || pos == 0 || pos == samples.size()) {
    const double rate = samples.empty() ? 0.5 : static_cast<double>(pos) / samples.size();
    LogisticModel m;
    m.constant = true;
    m.bias = logit(std::clamp(rate, 1e-6, 1.0 - 1e-6));
    return m;
  }

  std::vector<double> x(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) x[i] = margin_feature(samples[i].margin);
  // a vanishing ridge on the weight keeps separable data finite
  const double ridge = 1e-8;
  double w = 0.0;
  double b = logit(static_cast<double>(pos) / samples.size());
  for (int iter = 0; iter < 100; ++iter) {
    double gw = -ridge * w, gb = 0.0;
    double hww = ridge, hwb = 0.0, hbb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(w * x[i] + b)));
      const double r = (samples[i].label ? 1.0 : 0.0) - p;
      gw += r * x[i];
      gb += r;
      const double v = p * (1.0 - p);
      hww += v * x[i] * x[i];
      hwb += v * x[i];
      hbb += v;
    }
    if (std::sqrt(gw * gw + gb * gb) < 1e-10) break;
    const double det = hww * hbb - hwb * hwb;
    if (!(det > 0)) break;
    double dw = (hbb * gw - hwb * gb) / det;
    double db = (hww * gb - hwb * gw) / det;
    // damp huge steps on nearly separable data
    const double len = std::sqrt(dw * dw + db * db);
    if (len > 10.0) {
      dw *= 10.0 / len;
      db *= 10.0 / len;
    }
    w += dw;
    b += db;
  }
  if (!std::isfinite(w) || !std::isfinite(b)) throw NumericalError("fit_logistic: non-finite fit");
  return {w, b, false};
}

struct RatioBounds {
  double r_min = 0.02;
  double r_max = 0.98;
};

/// r = 1 - mean predicted correctness over the query set, clamped.
inline double adaptive_ratio(const LogisticModel& model, std::span<const double> margins,
                             RatioBounds bounds = {}) {
  if (margins.empty()) throw std::invalid_argument("adaptive_ratio: empty query set");
  double sum = 0.0;
  for (double m : margins) sum += model.predict(m);
  const double r = 1.0 - sum / static_cast<double>(margins.size());
  return std::clamp(r, bounds.r_min, bounds.r_max);
}

}  // namespace alps::est
