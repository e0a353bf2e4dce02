#pragma once

// Exact inference for first-order linear-chain CRFs.
//
// All quantities live in log space. Constraints are imposed by adding -inf
// to disallowed emission entries; -inf is absorbing under max and
// log-sum-exp, so structures that violate a constraint get zero mass.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alps/util/error.hpp"
#include "alps/util/logmath.hpp"
#include "alps/util/matrix.hpp"
#include "alps/util/uncertainty.hpp"

namespace alps::chain {

struct ChainScores {
  Matrix emissions;             // [n x L]
  Matrix transitions;           // [L x L], (prev, next)
  std::vector<double> start;    // [L]
  std::vector<double> end;      // [L]

  ChainScores() = default;
  ChainScores(std::size_t n, std::size_t num_labels)
      : emissions(n, num_labels),
        transitions(num_labels, num_labels),
        start(num_labels, 0.0),
        end(num_labels, 0.0) {}

  std::size_t size() const { return emissions.rows(); }
  std::size_t num_labels() const { return emissions.cols(); }
};

/// Per-position set of permitted labels.
class ConstraintMask {
 public:
  ConstraintMask() = default;
  ConstraintMask(std::size_t n, std::size_t num_labels, bool allowed = true)
      : n_(n), labels_(num_labels), allowed_(n * num_labels, allowed ? 1 : 0) {}

  static ConstraintMask unconstrained(std::size_t n, std::size_t num_labels) {
    return ConstraintMask(n, num_labels, true);
  }
  static ConstraintMask from_sequence(std::span<const int> labels,
                                      std::size_t num_labels) {
    ConstraintMask m(labels.size(), num_labels, false);
    for (std::size_t i = 0; i < labels.size(); ++i) m.fix(i, labels[i]);
    return m;
  }

  std::size_t size() const { return n_; }
  std::size_t num_labels() const { return labels_; }

  bool allowed(std::size_t i, std::size_t l) const {
    return allowed_[i * labels_ + l] != 0;
  }
  void set(std::size_t i, std::size_t l, bool ok) {
    allowed_[i * labels_ + l] = ok ? 1 : 0;
  }
  /// Restricts position i to the single label l.
  void fix(std::size_t i, std::size_t l) {
    for (std::size_t k = 0; k < labels_; ++k) set(i, k, k == l);
  }
  std::size_t count_allowed(std::size_t i) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < labels_; ++k) c += allowed(i, k);
    return c;
  }
  bool is_free(std::size_t i) const { return count_allowed(i) == labels_; }
  bool is_unconstrained() const {
    for (std::size_t i = 0; i < n_; ++i)
      if (!is_free(i)) return false;
    return true;
  }

  bool operator==(const ConstraintMask&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t labels_ = 0;
  std::vector<std::uint8_t> allowed_;
};

struct ChainMarginals {
  Matrix unary;                  // [n x L]
  std::vector<Matrix> pairwise;  // (n-1) x [L x L]

  std::size_t size() const { return unary.rows(); }
  std::size_t num_labels() const { return unary.cols(); }
};

/// Gradient of a loss with respect to every entry of a ChainScores.
struct ChainGradient {
  Matrix emissions;
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> end;
};

struct ChainLoss {
  double value = 0.0;
  ChainGradient grad;
};

namespace detail {

inline void check_mask(const ChainScores& s, const ConstraintMask& m) {
  if (m.size() != s.size() || m.num_labels() != s.num_labels())
    throw std::invalid_argument("constraint mask dimension mismatch");
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.count_allowed(i) == 0)
      throw ConstraintError("all labels masked at position " + std::to_string(i));
}

inline ChainScores apply_mask(const ChainScores& s, const ConstraintMask& m) {
  check_mask(s, m);
  ChainScores out = s;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t l = 0; l < s.num_labels(); ++l)
      if (!m.allowed(i, l)) out.emissions(i, l) = kNegInf;
  return out;
}

inline Matrix forward(const ChainScores& s) {
  const std::size_t n = s.size(), L = s.num_labels();
  Matrix alpha(n, L, kNegInf);
  for (std::size_t l = 0; l < L; ++l) alpha(0, l) = s.start[l] + s.emissions(0, l);
  std::vector<double> buf(L);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t b = 0; b < L; ++b) {
      for (std::size_t a = 0; a < L; ++a) buf[a] = alpha(i - 1, a) + s.transitions(a, b);
      alpha(i, b) = log_sum_exp(buf) + s.emissions(i, b);
    }
  }
  return alpha;
}

inline Matrix backward(const ChainScores& s) {
  const std::size_t n = s.size(), L = s.num_labels();
  Matrix beta(n, L, kNegInf);
  for (std::size_t l = 0; l < L; ++l) beta(n - 1, l) = s.end[l];
  std::vector<double> buf(L);
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b)
        buf[b] = s.transitions(a, b) + s.emissions(i + 1, b) + beta(i + 1, b);
      beta(i, a) = log_sum_exp(buf);
    }
  }
  return beta;
}

inline double finish(const ChainScores& s, const Matrix& alpha) {
  const std::size_t n = s.size(), L = s.num_labels();
  std::vector<double> buf(L);
  for (std::size_t l = 0; l < L; ++l) buf[l] = alpha(n - 1, l) + s.end[l];
  return log_sum_exp(buf);
}

inline double safe_exp(double x) { return x == kNegInf ? 0.0 : std::exp(x); }

inline ChainMarginals marginals_unmasked(const ChainScores& s, double* log_z_out) {
  const std::size_t n = s.size(), L = s.num_labels();
  if (n == 0) throw std::invalid_argument("empty chain");
  Matrix alpha = forward(s);
  Matrix beta = backward(s);
  const double log_z = finish(s, alpha);
  if (log_z == kNegInf) throw ConstraintError("no label sequence satisfies the constraints");
  ChainMarginals m;
  m.unary = Matrix(n, L);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < L; ++l)
      m.unary(i, l) = safe_exp(alpha(i, l) + beta(i, l) - log_z);
  m.pairwise.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Matrix p(L, L);
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b)
        p(a, b) = safe_exp(alpha(i, a) + s.transitions(a, b) + s.emissions(i + 1, b) +
                           beta(i + 1, b) - log_z);
    m.pairwise.push_back(std::move(p));
  }
  if (log_z_out) *log_z_out = log_z;
  return m;
}

inline ChainGradient zero_gradient(std::size_t n, std::size_t L) {
  return ChainGradient{Matrix(n, L), Matrix(L, L), std::vector<double>(L, 0.0),
                       std::vector<double>(L, 0.0)};
}

/// Expected sufficient statistics of a marginal table, laid out as a gradient.
inline ChainGradient expectations(const ChainMarginals& m) {
  const std::size_t n = m.size(), L = m.num_labels();
  ChainGradient g = zero_gradient(n, L);
  g.emissions = m.unary;
  for (const Matrix& p : m.pairwise)
    for (std::size_t k = 0; k < L * L; ++k) g.transitions.data()[k] += p.data()[k];
  for (std::size_t l = 0; l < L; ++l) {
    g.start[l] = m.unary(0, l);
    g.end[l] = m.unary(n - 1, l);
  }
  return g;
}

inline void subtract_into(ChainGradient& a, const ChainGradient& b) {
  for (std::size_t k = 0; k < a.emissions.data().size(); ++k)
    a.emissions.data()[k] -= b.emissions.data()[k];
  for (std::size_t k = 0; k < a.transitions.data().size(); ++k)
    a.transitions.data()[k] -= b.transitions.data()[k];
  for (std::size_t l = 0; l < a.start.size(); ++l) {
    a.start[l] -= b.start[l];
    a.end[l] -= b.end[l];
  }
}

}  // namespace detail

/// log of the sum over all label sequences of exp(score).
inline double log_partition(const ChainScores& scores,
                            const std::optional<ConstraintMask>& mask = std::nullopt) {
  if (scores.size() == 0) throw std::invalid_argument("empty chain");
  if (mask) {
    ChainScores masked = detail::apply_mask(scores, *mask);
    return detail::finish(masked, detail::forward(masked));
  }
  return detail::finish(scores, detail::forward(scores));
}

inline ChainMarginals marginals(const ChainScores& scores,
                                const std::optional<ConstraintMask>& mask = std::nullopt,
                                double* log_z = nullptr) {
  if (mask) return detail::marginals_unmasked(detail::apply_mask(scores, *mask), log_z);
  return detail::marginals_unmasked(scores, log_z);
}

inline double sequence_score(const ChainScores& s, std::span<const int> y) {
  if (y.size() != s.size()) throw std::invalid_argument("sequence length mismatch");
  double total = s.start[y[0]] + s.end[y.back()];
  for (std::size_t i = 0; i < y.size(); ++i) {
    total += s.emissions(i, y[i]);
    if (i > 0) total += s.transitions(y[i - 1], y[i]);
  }
  return total;
}

/// Negative log-likelihood of a fully observed label sequence.
inline ChainLoss nll_full(const ChainScores& scores, std::span<const int> gold) {
  double log_z = 0.0;
  ChainMarginals m = detail::marginals_unmasked(scores, &log_z);
  const double gold_score = sequence_score(scores, gold);
  ChainLoss out;
  out.value = log_z - gold_score;
  out.grad = detail::expectations(m);
  const std::size_t n = gold.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.grad.emissions(i, gold[i]) -= 1.0;
    if (i > 0) out.grad.transitions(gold[i - 1], gold[i]) -= 1.0;
  }
  out.grad.start[gold[0]] -= 1.0;
  out.grad.end[gold[n - 1]] -= 1.0;
  return out;
}

/// Negative marginal log-likelihood of the sequences consistent with a mask.
inline ChainLoss nll_partial(const ChainScores& scores, const ConstraintMask& mask) {
  double log_z = 0.0, log_zc = 0.0;
  ChainMarginals free_m = detail::marginals_unmasked(scores, &log_z);
  ChainMarginals con_m = detail::marginals_unmasked(detail::apply_mask(scores, mask), &log_zc);
  ChainLoss out;
  out.value = log_z - log_zc;
  out.grad = detail::expectations(free_m);
  detail::subtract_into(out.grad, detail::expectations(con_m));
  return out;
}

/// Cross-entropy between a frozen teacher distribution (given through its
/// unary and pairwise marginals) and the distribution defined by `scores`.
inline ChainLoss kd_loss(const ChainMarginals& teacher, const ChainScores& scores) {
  const std::size_t n = scores.size(), L = scores.num_labels();
  if (teacher.size() != n || teacher.num_labels() != L ||
      teacher.pairwise.size() + 1 != n)
    throw std::invalid_argument("teacher marginals dimension mismatch");
  double log_z = 0.0;
  ChainMarginals student = detail::marginals_unmasked(scores, &log_z);

  // Zero teacher mass contributes nothing, even against a -inf score.
  auto term = [](double mu, double s) { return mu > 0.0 ? mu * s : 0.0; };
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < L; ++l) expected += term(teacher.unary(i, l), scores.emissions(i, l));
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b)
        expected += term(teacher.pairwise[i](a, b), scores.transitions(a, b));
  for (std::size_t l = 0; l < L; ++l) {
    expected += term(teacher.unary(0, l), scores.start[l]);
    expected += term(teacher.unary(n - 1, l), scores.end[l]);
  }
  ChainLoss out;
  out.value = log_z - expected;
  out.grad = detail::expectations(student);
  detail::subtract_into(out.grad, detail::expectations(teacher));
  return out;
}

/// Highest-scoring sequence; ties go to the lowest label index.
inline std::vector<int> viterbi(const ChainScores& scores,
                                const std::optional<ConstraintMask>& mask = std::nullopt) {
  const ChainScores s = mask ? detail::apply_mask(scores, *mask) : scores;
  const std::size_t n = s.size(), L = s.num_labels();
  if (n == 0) return {};
  Matrix delta(n, L, kNegInf);
  std::vector<int> back(n * L, 0);
  for (std::size_t l = 0; l < L; ++l) delta(0, l) = s.start[l] + s.emissions(0, l);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t b = 0; b < L; ++b) {
      double best = kNegInf;
      int arg = 0;
      for (std::size_t a = 0; a < L; ++a) {
        double v = delta(i - 1, a) + s.transitions(a, b);
        if (v > best) {
          best = v;
          arg = static_cast<int>(a);
        }
      }
      delta(i, b) = best + s.emissions(i, b);
      back[i * L + b] = arg;
    }
  }
  double best = kNegInf;
  int last = -1;
  for (std::size_t l = 0; l < L; ++l) {
    double v = delta(n - 1, l) + s.end[l];
    if (v > best) {
      best = v;
      last = static_cast<int>(l);
    }
  }
  if (last < 0) throw ConstraintError("no label sequence satisfies the constraints");
  std::vector<int> y(n);
  y[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) y[i - 1] = back[i * L + y[i]];
  return y;
}

/// Per-position margin between the two most probable labels.
inline std::vector<double> token_margins(const ChainMarginals& m) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = margin_of(m.unary.row(i));
  return out;
}

/// Per-position uncertainty (larger = more uncertain) under an acquisition function.
inline std::vector<double> token_uncertainty(const ChainMarginals& m,
                                             Acquisition a = Acquisition::Margin) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = uncertainty_of(m.unary.row(i), a);
  return out;
}

/// Per-position argmax of the unary marginals.
inline std::vector<int> marginal_argmax(const ChainMarginals& m) {
  std::vector<int> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    out[i] = static_cast<int>(top_two(m.unary.row(i)).best);
  return out;
}

}  // namespace alps::chain
