#pragma once

// Arc-factored non-projective dependency CRF.
//
// Partition function and arc marginals come from the Matrix-Tree theorem
// (multi-root variant: ROOT may take several children). Arc (h, m) has head
// h in 0..n (0 = ROOT) and modifier m in 1..n.

#include <Eigen/Dense>

#include <algorithm>
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

namespace alps::tree {

/// Score table of shape [(n+1) x n]; entry (h, m-1) scores head h -> modifier m.
class ArcScores {
 public:
  ArcScores() = default;
  explicit ArcScores(std::size_t n) : table_(n + 1, n, 0.0) {
    for (std::size_t m = 1; m <= n; ++m) table_(m, m - 1) = kNegInf;
  }

  std::size_t size() const { return table_.cols(); }

  double operator()(std::size_t head, std::size_t mod) const { return table_(head, mod - 1); }
  /// Self-arcs stay at -inf regardless of what is written.
  void set(std::size_t head, std::size_t mod, double v) {
    if (head != mod) table_(head, mod - 1) = v;
  }
  void add(std::size_t head, std::size_t mod, double v) {
    if (head != mod) table_(head, mod - 1) += v;
  }

  const Matrix& table() const { return table_; }

 private:
  Matrix table_;
};

/// Per-modifier probability of each head, same layout as ArcScores.
struct ArcMarginals {
  Matrix probs;  // [(n+1) x n]

  std::size_t size() const { return probs.cols(); }
  double operator()(std::size_t head, std::size_t mod) const { return probs(head, mod - 1); }
  std::vector<double> column(std::size_t mod) const {
    std::vector<double> c(probs.rows());
    for (std::size_t h = 0; h < probs.rows(); ++h) c[h] = probs(h, mod - 1);
    return c;
  }
};

/// Allowed heads per modifier.
class HeadConstraint {
 public:
  HeadConstraint() = default;
  explicit HeadConstraint(std::size_t n, bool allowed = true)
      : n_(n), allowed_(n * (n + 1), allowed ? 1 : 0) {}

  static HeadConstraint unconstrained(std::size_t n) { return HeadConstraint(n, true); }
  /// Fixes every modifier to the given heads (heads[m-1] = head of m).
  static HeadConstraint from_heads(std::span<const int> heads) {
    HeadConstraint c(heads.size(), false);
    for (std::size_t m = 1; m <= heads.size(); ++m) c.fix(m, heads[m - 1]);
    return c;
  }

  std::size_t size() const { return n_; }
  bool allowed(std::size_t head, std::size_t mod) const {
    return allowed_[(mod - 1) * (n_ + 1) + head] != 0;
  }
  void set(std::size_t head, std::size_t mod, bool ok) {
    allowed_[(mod - 1) * (n_ + 1) + head] = ok ? 1 : 0;
  }
  void fix(std::size_t mod, std::size_t head) {
    for (std::size_t h = 0; h <= n_; ++h) set(h, mod, h == head);
  }
  bool is_free(std::size_t mod) const {
    for (std::size_t h = 0; h <= n_; ++h)
      if (h != mod && !allowed(h, mod)) return false;
    return true;
  }

  bool operator==(const HeadConstraint&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> allowed_;
};

struct TreeLoss {
  double value = 0.0;
  Matrix grad;  // same layout as ArcScores::table()
};

namespace detail {

inline ArcScores apply_constraint(const ArcScores& arcs, const HeadConstraint& c) {
  if (c.size() != arcs.size()) throw std::invalid_argument("head constraint dimension mismatch");
  ArcScores out = arcs;
  const std::size_t n = arcs.size();
  for (std::size_t m = 1; m <= n; ++m)
    for (std::size_t h = 0; h <= n; ++h)
      if (h != m && !c.allowed(h, m)) out.set(h, m, kNegInf);
  return out;
}

/// Throws ConstraintError unless some arborescence rooted at 0 has finite score.
inline void check_feasible(const ArcScores& arcs) {
  const std::size_t n = arcs.size();
  for (std::size_t m = 1; m <= n; ++m) {
    bool any = false;
    for (std::size_t h = 0; h <= n; ++h) any |= (h != m && arcs(h, m) != kNegInf);
    if (!any) throw ConstraintError("modifier " + std::to_string(m) + " has no permitted head");
  }
  std::vector<char> seen(n + 1, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    std::size_t h = stack.back();
    stack.pop_back();
    for (std::size_t m = 1; m <= n; ++m)
      if (!seen[m] && h != m && arcs(h, m) != kNegInf) {
        seen[m] = 1;
        stack.push_back(m);
      }
  }
  for (std::size_t m = 1; m <= n; ++m)
    if (!seen[m]) throw ConstraintError("no spanning tree satisfies the head constraints");
}

struct Laplacian {
  Eigen::MatrixXd weights;  // [(n+1) x n] shifted exp-scores
  double log_z = 0.0;
  Eigen::MatrixXd inverse;  // [n x n]
};

inline Laplacian factor(const ArcScores& arcs, bool want_inverse) {
  check_feasible(arcs);
  const std::size_t n = arcs.size();
  Laplacian out;
  out.weights = Eigen::MatrixXd::Zero(n + 1, n);
  double shift_total = 0.0;
  for (std::size_t m = 1; m <= n; ++m) {
    double c = kNegInf;
    for (std::size_t h = 0; h <= n; ++h) c = std::max(c, arcs(h, m));
    shift_total += c;
    for (std::size_t h = 0; h <= n; ++h) {
      double s = arcs(h, m);
      out.weights(h, m - 1) = (s == kNegInf) ? 0.0 : std::exp(s - c);
    }
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = 1; m <= n; ++m) {
    lap(m - 1, m - 1) = out.weights.col(m - 1).sum();
    for (std::size_t h = 1; h <= n; ++h)
      if (h != m) lap(h - 1, m - 1) = -out.weights(h, m - 1);
  }

  // One retry with row equilibration when the first factorization looks
  // ill-conditioned; det(D L) = det(D) det(L).
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(n);
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::MatrixXd scaled = row_scale.asDiagonal() * lap;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(scaled);
    const double rcond = lu.rcond();
    if (!(rcond >= 1e-12)) {
      if (attempt == 0) {
        for (std::size_t i = 0; i < n; ++i) {
          double mx = lap.row(i).cwiseAbs().maxCoeff();
          row_scale(i) = mx > 0 ? 1.0 / mx : 1.0;
        }
        continue;
      }
      throw NumericalError("Laplacian is singular beyond tolerance (rcond=" +
                           std::to_string(rcond) + ")");
    }
    const Eigen::MatrixXd& packed = lu.matrixLU();
    double log_abs = 0.0;
    double sign = lu.permutationP().determinant();
    for (std::size_t i = 0; i < n; ++i) {
      double u = packed(i, i);
      if (u < 0) sign = -sign;
      log_abs += std::log(std::abs(u));
    }
    for (std::size_t i = 0; i < n; ++i) log_abs -= std::log(row_scale(i));
    if (sign <= 0 || !std::isfinite(log_abs))
      throw NumericalError("Laplacian determinant is not positive");
    out.log_z = log_abs + shift_total;
    if (want_inverse) out.inverse = lu.inverse() * row_scale.asDiagonal();
    return out;
  }
  throw NumericalError("Laplacian factorization failed");
}

inline ArcMarginals marginals_from(const Laplacian& lap) {
  const std::size_t n = static_cast<std::size_t>(lap.weights.cols());
  ArcMarginals out;
  out.probs = Matrix(n + 1, n, 0.0);
  for (std::size_t m = 1; m <= n; ++m) {
    const double inv_mm = lap.inverse(m - 1, m - 1);
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == m) continue;
      double w = lap.weights(h, m - 1);
      if (w == 0.0) continue;
      double mu = h == 0 ? w * inv_mm : w * (inv_mm - lap.inverse(m - 1, h - 1));
      out.probs(h, m - 1) = std::clamp(mu, 0.0, 1.0);
    }
  }
  return out;
}

inline Matrix marginal_table_minus(const ArcMarginals& a, const Matrix& b) {
  Matrix g = a.probs;
  for (std::size_t k = 0; k < g.data().size(); ++k) g.data()[k] -= b.data()[k];
  return g;
}

}  // namespace detail

/// Checks that heads (1-based, 0 = ROOT) form an arborescence rooted at 0.
inline bool is_tree(std::span<const int> heads) {
  const std::size_t n = heads.size();
  for (std::size_t m = 1; m <= n; ++m) {
    int h = heads[m - 1];
    if (h < 0 || h > static_cast<int>(n) || h == static_cast<int>(m)) return false;
  }
  // every node must reach ROOT without revisiting
  std::vector<int> state(n + 1, 0);  // 0 unknown, 1 in progress, 2 reaches root
  state[0] = 2;
  for (std::size_t start = 1; start <= n; ++start) {
    std::vector<std::size_t> path;
    std::size_t v = start;
    while (state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = static_cast<std::size_t>(heads[v - 1]);
    }
    if (state[v] == 1) return false;
    for (std::size_t p : path) state[p] = 2;
  }
  return true;
}

inline double mt_log_partition(const ArcScores& arcs,
                               const std::optional<HeadConstraint>& constraint = std::nullopt) {
  if (arcs.size() == 0) throw std::invalid_argument("empty sentence");
  const ArcScores s = constraint ? detail::apply_constraint(arcs, *constraint) : arcs;
  return detail::factor(s, false).log_z;
}

inline ArcMarginals mt_arc_marginals(const ArcScores& arcs,
                                     const std::optional<HeadConstraint>& constraint = std::nullopt,
                                     double* log_z = nullptr) {
  if (arcs.size() == 0) throw std::invalid_argument("empty sentence");
  const ArcScores s = constraint ? detail::apply_constraint(arcs, *constraint) : arcs;
  detail::Laplacian lap = detail::factor(s, true);
  if (log_z) *log_z = lap.log_z;
  return detail::marginals_from(lap);
}

inline double tree_score(const ArcScores& arcs, std::span<const int> heads) {
  double total = 0.0;
  for (std::size_t m = 1; m <= heads.size(); ++m) total += arcs(heads[m - 1], m);
  return total;
}

inline TreeLoss tree_nll_full(const ArcScores& arcs, std::span<const int> gold_heads) {
  if (gold_heads.size() != arcs.size() || !is_tree(gold_heads))
    throw ValidationError("gold heads do not form a tree");
  double log_z = 0.0;
  ArcMarginals m = mt_arc_marginals(arcs, std::nullopt, &log_z);
  TreeLoss out;
  out.value = log_z - tree_score(arcs, gold_heads);
  out.grad = m.probs;
  for (std::size_t mod = 1; mod <= gold_heads.size(); ++mod)
    out.grad(gold_heads[mod - 1], mod - 1) -= 1.0;
  return out;
}

inline TreeLoss tree_nll_partial(const ArcScores& arcs, const HeadConstraint& constraint) {
  double log_z = 0.0, log_zc = 0.0;
  ArcMarginals free_m = mt_arc_marginals(arcs, std::nullopt, &log_z);
  ArcMarginals con_m = mt_arc_marginals(arcs, constraint, &log_zc);
  TreeLoss out;
  out.value = log_z - log_zc;
  out.grad = detail::marginal_table_minus(free_m, con_m.probs);
  return out;
}

inline TreeLoss tree_kd_loss(const ArcMarginals& teacher, const ArcScores& arcs) {
  const std::size_t n = arcs.size();
  if (teacher.size() != n || teacher.probs.rows() != n + 1)
    throw std::invalid_argument("teacher marginals dimension mismatch");
  double log_z = 0.0;
  ArcMarginals student = mt_arc_marginals(arcs, std::nullopt, &log_z);
  double expected = 0.0;
  for (std::size_t m = 1; m <= n; ++m)
    for (std::size_t h = 0; h <= n; ++h) {
      double mu = teacher(h, m);
      if (mu > 0.0) expected += mu * arcs(h, m);
    }
  TreeLoss out;
  out.value = log_z - expected;
  out.grad = detail::marginal_table_minus(student, teacher.probs);
  return out;
}

namespace detail {

// Chu-Liu/Edmonds on a dense weight matrix w[u][v] (u -> v), node 0 is the
// root. Returns parent[v] for every v (parent[0] = -1).
inline std::vector<int> chu_liu_edmonds(const std::vector<std::vector<double>>& w) {
  const std::size_t N = w.size();
  std::vector<int> parent(N, -1);
  for (std::size_t v = 1; v < N; ++v) {
    double best = kNegInf;
    for (std::size_t u = 0; u < N; ++u)
      if (u != v && w[u][v] > best) {
        best = w[u][v];
        parent[v] = static_cast<int>(u);
      }
    if (parent[v] < 0) throw ConstraintError("node without an incoming arc");
  }

  // find a cycle
  std::vector<int> color(N, 0);
  std::vector<std::size_t> cycle;
  for (std::size_t s = 1; s < N && cycle.empty(); ++s) {
    if (color[s]) continue;
    std::vector<std::size_t> path;
    std::size_t v = s;
    while (v != 0 && color[v] == 0) {
      color[v] = static_cast<int>(s) + 1;
      path.push_back(v);
      v = static_cast<std::size_t>(parent[v]);
    }
    if (v != 0 && color[v] == static_cast<int>(s) + 1) {
      std::size_t u = v;
      do {
        cycle.push_back(u);
        u = static_cast<std::size_t>(parent[u]);
      } while (u != v);
    }
  }
  if (cycle.empty()) return parent;

  std::vector<char> in_cycle(N, 0);
  for (std::size_t c : cycle) in_cycle[c] = 1;
  // contracted graph: non-cycle nodes keep relative order, cycle node last
  std::vector<int> new_id(N, -1);
  std::vector<std::size_t> old_of;
  for (std::size_t v = 0; v < N; ++v)
    if (!in_cycle[v]) {
      new_id[v] = static_cast<int>(old_of.size());
      old_of.push_back(v);
    }
  const std::size_t cnode = old_of.size();
  const std::size_t M = cnode + 1;
  std::vector<std::vector<double>> w2(M, std::vector<double>(M, kNegInf));
  std::vector<std::size_t> enter_at(M, 0);  // for u -> cycle: which cycle node is entered
  std::vector<std::size_t> leave_from(M, 0);  // for cycle -> v: which cycle node leaves
  double cycle_weight = 0.0;
  for (std::size_t c : cycle) cycle_weight += w[parent[c]][c];

  for (std::size_t u = 0; u < N; ++u) {
    if (in_cycle[u]) continue;
    for (std::size_t v = 0; v < N; ++v) {
      if (u == v || w[u][v] == kNegInf) continue;
      if (!in_cycle[v]) {
        w2[new_id[u]][new_id[v]] = w[u][v];
      } else {
        double val = w[u][v] - w[parent[v]][v] + cycle_weight;
        if (val > w2[new_id[u]][cnode]) {
          w2[new_id[u]][cnode] = val;
          enter_at[new_id[u]] = v;
        }
      }
    }
  }
  for (std::size_t v = 0; v < N; ++v) {
    if (in_cycle[v]) continue;
    double best = kNegInf;
    std::size_t arg = 0;
    for (std::size_t u = 0; u < N; ++u) {
      if (!in_cycle[u] || w[u][v] == kNegInf) continue;
      if (w[u][v] > best) {
        best = w[u][v];
        arg = u;
      }
    }
    if (best != kNegInf) {
      w2[cnode][new_id[v]] = best;
      leave_from[new_id[v]] = arg;
    }
  }

  std::vector<int> sub = chu_liu_edmonds(w2);
  std::vector<int> result(N, -1);
  for (std::size_t v2 = 1; v2 < M; ++v2) {
    std::size_t p2 = static_cast<std::size_t>(sub[v2]);
    if (v2 == cnode) {
      std::size_t entered = enter_at[p2];
      for (std::size_t c : cycle) result[c] = parent[c];
      result[entered] = static_cast<int>(old_of[p2]);
    } else {
      std::size_t v = old_of[v2];
      result[v] = p2 == cnode ? static_cast<int>(leave_from[v2]) : static_cast<int>(old_of[p2]);
    }
  }
  return result;
}

}  // namespace detail

/// Maximum-score arborescence (multi-root); returns heads[m-1] for m in 1..n.
inline std::vector<int> decode_tree(const ArcScores& arcs,
                                    const std::optional<HeadConstraint>& constraint = std::nullopt) {
  const ArcScores s = constraint ? detail::apply_constraint(arcs, *constraint) : arcs;
  detail::check_feasible(s);
  const std::size_t n = s.size();
  std::vector<std::vector<double>> w(n + 1, std::vector<double>(n + 1, kNegInf));
  for (std::size_t h = 0; h <= n; ++h)
    for (std::size_t m = 1; m <= n; ++m)
      if (h != m) w[h][m] = s(h, m);
  std::vector<int> parent = detail::chu_liu_edmonds(w);
  return std::vector<int>(parent.begin() + 1, parent.end());
}

/// Per-modifier margin between its two most probable heads.
inline std::vector<double> head_margins(const ArcMarginals& m) {
  std::vector<double> out(m.size());
  for (std::size_t mod = 1; mod <= m.size(); ++mod) out[mod - 1] = margin_of(m.column(mod));
  return out;
}

inline std::vector<double> head_uncertainty(const ArcMarginals& m,
                                            Acquisition a = Acquisition::Margin) {
  std::vector<double> out(m.size());
  for (std::size_t mod = 1; mod <= m.size(); ++mod)
    out[mod - 1] = uncertainty_of(m.column(mod), a);
  return out;
}

/// Most probable head of each modifier under the marginals.
inline std::vector<int> marginal_argmax(const ArcMarginals& m) {
  std::vector<int> out(m.size());
  for (std::size_t mod = 1; mod <= m.size(); ++mod)
    out[mod - 1] = static_cast<int>(top_two(m.column(mod)).best);
  return out;
}

}  // namespace alps::tree
