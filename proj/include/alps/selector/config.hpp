#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alps/corpus/annotation.hpp"
#include "alps/corpus/types.hpp"
#include "alps/estimator/estimator.hpp"
#include "alps/learner/trainer.hpp"
#include "alps/util/error.hpp"
#include "alps/util/uncertainty.hpp"

namespace alps::al {

enum class Strategy { Rand, FA, PA };
enum class RatioMode { Adaptive, Fixed };

inline Strategy parse_strategy(std::string_view s) {
  if (s == "rand" || s == "RAND" || s == "random") return Strategy::Rand;
  if (s == "fa" || s == "FA") return Strategy::FA;
  if (s == "pa" || s == "PA") return Strategy::PA;
  throw ConfigError("strategy: unknown value '" + std::string(s) + "' (expected rand, fa or pa)");
}

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Rand: return "rand";
    case Strategy::FA: return "fa";
    case Strategy::PA: return "pa";
  }
  return "?";
}

inline RatioMode parse_ratio_mode(std::string_view s) {
  if (s == "adaptive") return RatioMode::Adaptive;
  if (s == "fixed") return RatioMode::Fixed;
  throw ConfigError("ratio_mode: unknown value '" + std::string(s) + "' (expected adaptive or fixed)");
}

inline const char* to_string(RatioMode m) { return m == RatioMode::Adaptive ? "adaptive" : "fixed"; }

/// Overlap rule used when correcting predicted mentions against gold ones.
enum class MatchRule { Overlap, Exact };

struct ALConfig {
  std::string name = "run";
  Task task = Task::Tagging;
  Strategy strategy = Strategy::FA;
  bool self_training = false;
  Acquisition acquisition = Acquisition::Margin;
  std::size_t batch_tokens = 4000;
  std::size_t cycles = 14;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t seed_tokens = 0;  // 0: same as batch_tokens
  std::size_t dev_tokens = 0;   // 0: same as batch_tokens
  RatioMode ratio_mode = RatioMode::Adaptive;
  double fixed_ratio = 0.5;
  est::RatioBounds bounds;
  CostConfig cost;
  learn::TrainConfig train;
  std::size_t pseudo_pool_limit = 0;  // 0: every unlabeled sentence

  // ie
  double beta = 0.9;
  MatchRule match_rule = MatchRule::Overlap;
  bool second_stage = true;
  bool fa_relation_cost_double = false;  // FA relation cost = 2 x entities

  nlohmann::json data;  // description of the corpora, for resume checks

  std::size_t effective_seed_tokens() const { return seed_tokens ? seed_tokens : batch_tokens; }
  std::size_t effective_dev_tokens() const { return dev_tokens ? dev_tokens : batch_tokens; }

  /// Short strategy label, e.g. "pa+st".
  std::string label() const {
    std::string s = to_string(strategy);
    if (self_training) s += "+st";
    return s;
  }

  void validate() const {
    if (batch_tokens == 0) throw ConfigError("batch_tokens: must be positive");
    if (cycles == 0) throw ConfigError("cycles: must be at least 1");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed required");
    if (ratio_mode == RatioMode::Fixed && !(fixed_ratio > 0.0 && fixed_ratio <= 1.0))
      throw ConfigError("fixed_ratio: must lie in (0, 1]");
    if (!(bounds.r_min >= 0 && bounds.r_min <= bounds.r_max && bounds.r_max <= 1))
      throw ConfigError("ratio bounds: need 0 <= r_min <= r_max <= 1");
    if (!(beta >= 0 && beta <= 1)) throw ConfigError("beta: must lie in [0, 1]");
    train.validate();
  }
};

/// Every field that influences results; used to validate resumed runs.
inline nlohmann::json to_json(const ALConfig& c) {
  const auto& t = c.train;
  return nlohmann::json{
      {"name", c.name},
      {"task", to_string(c.task)},
      {"strategy", to_string(c.strategy)},
      {"self_training", c.self_training},
      {"acquisition", to_string(c.acquisition)},
      {"batch_tokens", c.batch_tokens},
      {"cycles", c.cycles},
      {"seeds", c.seeds},
      {"seed_tokens", c.effective_seed_tokens()},
      {"dev_tokens", c.effective_dev_tokens()},
      {"ratio_mode", to_string(c.ratio_mode)},
      {"fixed_ratio", c.fixed_ratio},
      {"r_min", c.bounds.r_min},
      {"r_max", c.bounds.r_max},
      {"cost_pos", std::vector<std::string>(c.cost.cost_pos.begin(), c.cost.cost_pos.end())},
      {"dpar_count_edges", c.cost.dpar_count_edges},
      {"unfiltered_fa", c.cost.unfiltered_fa},
      {"pseudo_pool_limit", c.pseudo_pool_limit},
      {"beta", c.beta},
      {"match_rule", c.match_rule == MatchRule::Exact ? "exact" : "overlap"},
      {"second_stage", c.second_stage},
      {"fa_relation_cost_double", c.fa_relation_cost_double},
      {"data", c.data},
      {"train",
       {{"steps", t.steps},
        {"minibatch_tokens", t.minibatch_tokens},
        {"learning_rate", t.learning_rate},
        {"l2", t.l2},
        {"eval_every", t.eval_every},
        {"mix_gold", t.mix_gold},
        {"mix_pseudo", t.mix_pseudo},
        {"hash_bits", t.hash_bits}}}};
}

}  // namespace alps::al
