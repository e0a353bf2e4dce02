#pragma once

// Step-based trainer shared by all task models.
//
// A Model provides:
//   using Gold, Pseudo;
//   ParameterStore& params();
//   double gold_loss(const Gold&, GradBuffer&);
//   double kd_loss(const Pseudo&, GradBuffer&);
//   std::size_t tokens(const Gold&) / tokens(const Pseudo&);
//   double dev_metric(std::span<const Sentence* const>);

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alps/corpus/types.hpp"
#include "alps/learner/params.hpp"
#include "alps/util/random.hpp"

namespace alps::learn {

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t minibatch_tokens = 128;
  double learning_rate = 0.1;
  double l2 = 1e-6;
  std::size_t eval_every = 200;
  std::size_t mix_gold = 1;
  std::size_t mix_pseudo = 1;
  unsigned hash_bits = 22;
  std::uint64_t seed = 1;

  void validate() const {
    if (steps == 0 || minibatch_tokens == 0 || eval_every == 0)
      throw ConfigError("train: steps, minibatch_tokens and eval_every must be positive");
    if (!(learning_rate > 0) || l2 < 0) throw ConfigError("train: bad learning rate or l2");
    if (mix_gold == 0 || mix_pseudo == 0) throw ConfigError("train: mixing ratio must be positive");
  }
};

struct TrainResult {
  double best_dev = -1.0;
  std::size_t best_step = 0;
  std::vector<std::pair<std::size_t, double>> dev_trajectory;
  double final_loss = 0.0;  // mean loss of the last minibatch
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::size_t step)
      : std::runtime_error("training diverged (non-finite loss) at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Endless shuffled pass over a list of items; reshuffles after each pass.
template <typename T>
class Stream {
 public:
  Stream(std::span<const T> items, std::uint64_t seed) : items_(items), rng_(seed) {
    order_.resize(items.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    shuffle_in_place(order_, rng_);
  }
  bool empty() const { return items_.empty(); }
  const T& next() {
    if (pos_ == order_.size()) {
      shuffle_in_place(order_, rng_);
      pos_ = 0;
      ++passes_;
    }
    return items_[order_[pos_++]];
  }
  std::size_t passes() const { return passes_; }

 private:
  std::span<const T> items_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::size_t passes_ = 0;
};

/// Which stream feeds minibatch `k` under a gold:pseudo mixing ratio.
inline bool is_gold_batch(std::size_t k, std::size_t mix_gold, std::size_t mix_pseudo) {
  return k % (mix_gold + mix_pseudo) < mix_gold;
}

/// Trains `model` from its current (normally zero) parameters and leaves the
/// best dev checkpoint in place. With no dev sentences the last parameters
/// are kept.
template <typename Model>
TrainResult train(Model& model, std::span<const typename Model::Gold> gold,
                  std::span<const typename Model::Pseudo> pseudo,
                  std::span<const Sentence* const> dev, const TrainConfig& cfg) {
  cfg.validate();
  if (gold.empty()) throw std::invalid_argument("train: empty labeled set");
  ParameterStore& params = model.params();
  Adagrad opt(params, cfg.learning_rate, cfg.l2);
  GradBuffer buf(params);
  Stream<typename Model::Gold> gold_stream(gold, cfg.seed * 2 + 1);
  Stream<typename Model::Pseudo> pseudo_stream(pseudo, cfg.seed * 2 + 2);

  TrainResult result;
  ParameterStore best;
  bool have_best = false;
  auto evaluate = [&](std::size_t step) {
    if (dev.empty()) return;
    const double metric = model.dev_metric(dev);
    result.dev_trajectory.emplace_back(step, metric);
    if (!have_best || metric > result.best_dev) {
      result.best_dev = metric;
      result.best_step = step;
      best = params;
      have_best = true;
    }
  };

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const bool use_gold = pseudo_stream.empty() || is_gold_batch(step - 1, cfg.mix_gold, cfg.mix_pseudo);
    double loss = 0.0;
    std::size_t tokens = 0;
    while (tokens < cfg.minibatch_tokens) {
      if (use_gold) {
        const auto& item = gold_stream.next();
        loss += model.gold_loss(item, buf);
        tokens += model.tokens(item);
      } else {
        const auto& item = pseudo_stream.next();
        loss += model.kd_loss(item, buf);
        tokens += model.tokens(item);
      }
    }
    if (!std::isfinite(loss)) throw TrainingDiverged(step);
    opt.step(params, buf);
    buf.clear();
    result.final_loss = loss / static_cast<double>(tokens);
    if (step % cfg.eval_every == 0 || step == cfg.steps) evaluate(step);
  }
  if (have_best) params = std::move(best);
  return result;
}

}  // namespace alps::learn
