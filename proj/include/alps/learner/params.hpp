#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "alps/util/hash.hpp"

namespace alps::learn {

/// Hashed weight table plus a small dense block (transitions and the like).
/// Hashed feature ids are folded into the table modulo its size.
struct ParameterStore {
  unsigned hash_bits = 22;
  std::vector<double> hashed;
  std::vector<double> dense;

  ParameterStore() = default;
  ParameterStore(unsigned bits, std::size_t dense_size)
      : hash_bits(bits), hashed(std::size_t{1} << bits, 0.0), dense(dense_size, 0.0) {
    if (bits < 4 || bits > 30) throw std::invalid_argument("hash_bits out of range");
  }

  std::size_t mask() const { return hashed.size() - 1; }

  /// Slot of feature `id` conjoined with output `out` (e.g. a label index).
  std::size_t slot(std::uint64_t id, std::uint64_t out) const {
    return static_cast<std::size_t>(mix64(id ^ ((out + 1) * 0x9e3779b97f4a7c15ULL))) & mask();
  }
  std::size_t slot(std::uint64_t id) const { return static_cast<std::size_t>(mix64(id)) & mask(); }

  bool all_finite() const {
    for (double w : hashed)
      if (!std::isfinite(w)) return false;
    for (double w : dense)
      if (!std::isfinite(w)) return false;
    return true;
  }

  void scale(double c) {
    for (double& w : hashed) w *= c;
    for (double& w : dense) w *= c;
  }

  bool operator==(const ParameterStore&) const = default;
};

/// Sparse gradient accumulator over a ParameterStore's shape.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParameterStore& p)
      : hashed_(p.hashed.size(), 0.0), touched_flag_(p.hashed.size(), 0), dense_(p.dense.size(), 0.0) {}

  void add_hashed(std::size_t slot, double g) {
    if (!touched_flag_[slot]) {
      touched_flag_[slot] = 1;
      touched_.push_back(slot);
    }
    hashed_[slot] += g;
  }
  void add_dense(std::size_t i, double g) { dense_[i] += g; }

  const std::vector<std::size_t>& touched() const { return touched_; }
  double hashed(std::size_t slot) const { return hashed_[slot]; }
  const std::vector<double>& dense() const { return dense_; }

  void clear() {
    for (std::size_t s : touched_) {
      hashed_[s] = 0.0;
      touched_flag_[s] = 0;
    }
    touched_.clear();
    std::fill(dense_.begin(), dense_.end(), 0.0);
  }

 private:
  std::vector<double> hashed_;
  std::vector<std::uint8_t> touched_flag_;
  std::vector<std::size_t> touched_;
  std::vector<double> dense_;
};

/// Adagrad with L2 applied to the coordinates touched in a step.
class Adagrad {
 public:
  Adagrad(const ParameterStore& p, double lr, double l2)
      : lr_(lr), l2_(l2), acc_hashed_(p.hashed.size(), 0.0), acc_dense_(p.dense.size(), 0.0) {}

  void step(ParameterStore& p, const GradBuffer& g) {
    for (std::size_t s : g.touched()) update(p.hashed[s], acc_hashed_[s], g.hashed(s));
    for (std::size_t i = 0; i < p.dense.size(); ++i)
      if (g.dense()[i] != 0.0) update(p.dense[i], acc_dense_[i], g.dense()[i]);
  }

 private:
  void update(double& w, double& acc, double grad) {
    double gi = grad + l2_ * w;
    acc += gi * gi;
    w -= lr_ * gi / (std::sqrt(acc) + 1e-8);
  }

  double lr_;
  double l2_;
  std::vector<double> acc_hashed_;
  std::vector<double> acc_dense_;
};

}  // namespace alps::learn
