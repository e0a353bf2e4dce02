#pragma once

// Run configuration files.
//
// Grammar: one `key = value` per line; `#` starts a comment; blank lines are
// ignored; keys are case-sensitive and may appear once. Lists are
// comma-separated. Booleans: true/false/1/0/yes/no. Unknown keys are errors.
//
//   data:      task, train, test, strict_bio, out, deterministic
//   generator: gen.sentences, gen.test_sentences, gen.seed, gen.test_seed,
//              gen.vocab_size, gen.types, gen.min_len, gen.max_len, gen.noise,
//              gen.zipf, gen.geometric_p, gen.relation_labels
//   al:        name, strategy, self_training, acquisition, batch_tokens, cycles,
//              seeds, seed_tokens, dev_tokens, ratio_mode, fixed_ratio, r_min,
//              r_max, cost_pos, dpar_count_edges, unfiltered_fa,
//              pseudo_pool_limit, beta, match_rule, second_stage,
//              fa_relation_cost_double
//   train:     train.steps, train.minibatch_tokens, train.learning_rate,
//              train.l2, train.eval_every, train.mix (gold:pseudo),
//              train.hash_bits
//
// With no `train` path the corpora come from the synthetic generator.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alps/corpus/io.hpp"
#include "alps/corpus/synthetic.hpp"
#include "alps/selector/config.hpp"
#include "alps/util/error.hpp"

namespace alps::cli {

struct RunSpec {
  al::ALConfig al;
  std::optional<std::string> train_path;
  std::optional<std::string> test_path;
  bool strict_bio = false;
  GeneratorSpec gen;
  std::size_t test_sentences = 1000;
  std::uint64_t gen_seed = 11;
  std::uint64_t gen_test_seed = 12;
  std::filesystem::path out = "runs";
  bool deterministic = true;

  std::filesystem::path run_dir() const { return out / al.name; }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> list_of(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T integer(const std::string& key, const std::string& v) {
  T x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return x;
}

inline double real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

/// Reads `key = value` lines into a map, rejecting duplicates.
inline std::map<std::string, std::string> read_keyed(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, detail::trim(line.substr(eq + 1))).second)
      throw ConfigError(key + ": given more than once");
  }
  return kv;
}

inline RunSpec parse_runspec(const std::map<std::string, std::string>& kv) {
  using namespace detail;
  RunSpec r;
  auto& a = r.al;
  auto& t = a.train;
  auto& g = r.gen;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"task", [&](auto&, auto& v) { a.task = parse_task(v); }},
      {"train", [&](auto&, auto& v) { r.train_path = v; }},
      {"test", [&](auto&, auto& v) { r.test_path = v; }},
      {"strict_bio", [&](auto& k, auto& v) { r.strict_bio = boolean(k, v); }},
      {"out", [&](auto&, auto& v) { r.out = v; }},
      {"deterministic", [&](auto& k, auto& v) { r.deterministic = boolean(k, v); }},

      {"gen.sentences", [&](auto& k, auto& v) { g.sentences = integer<std::size_t>(k, v); }},
      {"gen.test_sentences", [&](auto& k, auto& v) { r.test_sentences = integer<std::size_t>(k, v); }},
      {"gen.seed", [&](auto& k, auto& v) { r.gen_seed = integer<std::uint64_t>(k, v); }},
      {"gen.test_seed", [&](auto& k, auto& v) { r.gen_test_seed = integer<std::uint64_t>(k, v); }},
      {"gen.vocab_size", [&](auto& k, auto& v) { g.vocab_size = integer<std::size_t>(k, v); }},
      {"gen.types", [&](auto&, auto& v) { g.types = list_of(v); }},
      {"gen.min_len", [&](auto& k, auto& v) { g.min_len = integer<std::size_t>(k, v); }},
      {"gen.max_len", [&](auto& k, auto& v) { g.max_len = integer<std::size_t>(k, v); }},
      {"gen.noise", [&](auto& k, auto& v) { g.noise = real(k, v); }},
      {"gen.zipf", [&](auto& k, auto& v) { g.zipf_exponent = real(k, v); }},
      {"gen.geometric_p", [&](auto& k, auto& v) { g.geometric_p = real(k, v); }},
      {"gen.relation_labels", [&](auto& k, auto& v) { g.relation_labels = integer<std::size_t>(k, v); }},

      {"name", [&](auto& k, auto& v) {
         if (v.empty() || v.find('/') != std::string::npos || v == "." || v == "..")
           throw ConfigError(k + ": must be a plain directory name");
         a.name = v;
       }},
      {"strategy", [&](auto&, auto& v) { a.strategy = al::parse_strategy(v); }},
      {"self_training", [&](auto& k, auto& v) { a.self_training = boolean(k, v); }},
      {"acquisition", [&](auto& k, auto& v) {
         try {
           a.acquisition = parse_acquisition(v);
         } catch (const std::invalid_argument&) {
           throw ConfigError(k + ": unknown value '" + v + "' (expected margin, least_confidence or entropy)");
         }
       }},
      {"batch_tokens", [&](auto& k, auto& v) { a.batch_tokens = integer<std::size_t>(k, v); }},
      {"cycles", [&](auto& k, auto& v) { a.cycles = integer<std::size_t>(k, v); }},
      {"seeds", [&](auto& k, auto& v) {
         a.seeds.clear();
         for (const auto& s : list_of(v)) a.seeds.push_back(integer<std::uint64_t>(k, s));
       }},
      {"seed_tokens", [&](auto& k, auto& v) { a.seed_tokens = integer<std::size_t>(k, v); }},
      {"dev_tokens", [&](auto& k, auto& v) { a.dev_tokens = integer<std::size_t>(k, v); }},
      {"ratio_mode", [&](auto&, auto& v) { a.ratio_mode = al::parse_ratio_mode(v); }},
      {"fixed_ratio", [&](auto& k, auto& v) { a.fixed_ratio = real(k, v); }},
      {"r_min", [&](auto& k, auto& v) { a.bounds.r_min = real(k, v); }},
      {"r_max", [&](auto& k, auto& v) { a.bounds.r_max = real(k, v); }},
      {"cost_pos", [&](auto&, auto& v) {
         const auto xs = list_of(v);
         a.cost.cost_pos = std::set<std::string>(xs.begin(), xs.end());
       }},
      {"dpar_count_edges", [&](auto& k, auto& v) { a.cost.dpar_count_edges = boolean(k, v); }},
      {"unfiltered_fa", [&](auto& k, auto& v) { a.cost.unfiltered_fa = boolean(k, v); }},
      {"pseudo_pool_limit", [&](auto& k, auto& v) { a.pseudo_pool_limit = integer<std::size_t>(k, v); }},
      {"beta", [&](auto& k, auto& v) { a.beta = real(k, v); }},
      {"match_rule", [&](auto& k, auto& v) {
         if (v == "overlap") a.match_rule = al::MatchRule::Overlap;
         else if (v == "exact") a.match_rule = al::MatchRule::Exact;
         else throw ConfigError(k + ": unknown value '" + v + "' (expected overlap or exact)");
       }},
      {"second_stage", [&](auto& k, auto& v) { a.second_stage = boolean(k, v); }},
      {"fa_relation_cost_double", [&](auto& k, auto& v) { a.fa_relation_cost_double = boolean(k, v); }},

      {"train.steps", [&](auto& k, auto& v) { t.steps = integer<std::size_t>(k, v); }},
      {"train.minibatch_tokens", [&](auto& k, auto& v) { t.minibatch_tokens = integer<std::size_t>(k, v); }},
      {"train.learning_rate", [&](auto& k, auto& v) { t.learning_rate = real(k, v); }},
      {"train.l2", [&](auto& k, auto& v) { t.l2 = real(k, v); }},
      {"train.eval_every", [&](auto& k, auto& v) { t.eval_every = integer<std::size_t>(k, v); }},
      {"train.mix", [&](auto& k, auto& v) {
         const auto c = v.find(':');
         if (c == std::string::npos) throw ConfigError(k + ": expected gold:pseudo, got '" + v + "'");
         t.mix_gold = integer<std::size_t>(k, trim(v.substr(0, c)));
         t.mix_pseudo = integer<std::size_t>(k, trim(v.substr(c + 1)));
       }},
      {"train.hash_bits", [&](auto& k, auto& v) { t.hash_bits = integer<unsigned>(k, v); }},
  };

  for (const auto& [k, v] : kv) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError(k + ": unknown key");
    it->second(k, v);
  }
  g.task = a.task;
  if (r.test_path && !r.train_path) throw ConfigError("test: given without train");
  if (r.train_path && !r.test_path) throw ConfigError("test: required when train is given");
  if (!r.train_path) g.validate();
  if (r.test_sentences == 0) throw ConfigError("gen.test_sentences: must be positive");
  if (t.hash_bits < 4 || t.hash_bits > 30) throw ConfigError("train.hash_bits: must lie in [4, 30]");
  a.data = r.train_path ? nlohmann::json{{"train", *r.train_path}, {"test", *r.test_path}, {"strict_bio", r.strict_bio}}
                        : nlohmann::json{{"sentences", g.sentences},
                                         {"test_sentences", r.test_sentences},
                                         {"seed", r.gen_seed},
                                         {"test_seed", r.gen_test_seed},
                                         {"vocab_size", g.vocab_size},
                                         {"types", g.types},
                                         {"min_len", g.min_len},
                                         {"max_len", g.max_len},
                                         {"noise", g.noise},
                                         {"zipf", g.zipf_exponent},
                                         {"geometric_p", g.geometric_p},
                                         {"relation_labels", g.relation_labels}};
  a.validate();
  return r;
}

/// Applies the environment override for deterministic mode.
inline void apply_environment(RunSpec& r) {
  if (const char* v = std::getenv("ALPS_DETERMINISTIC"))
    r.deterministic = detail::boolean("ALPS_DETERMINISTIC", detail::trim(v));
}

inline RunSpec load_runspec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  RunSpec r = parse_runspec(read_keyed(in, path));
  // relative data paths resolve against the config file's directory
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::optional<std::string>& p) {
    if (p && std::filesystem::path(*p).is_relative()) p = (base / *p).string();
  };
  resolve(r.train_path);
  resolve(r.test_path);
  for (const auto* p : {&r.train_path, &r.test_path})
    if (*p && !std::filesystem::exists(**p)) throw ConfigError("data: no such file " + **p);
  apply_environment(r);
  return r;
}

struct Corpora {
  Corpus train;
  Corpus test;
};

inline Corpora load_corpora(const RunSpec& r) {
  Corpora c;
  if (r.train_path) {
    const ColumnOptions opts{r.strict_bio};
    c.train = load_corpus(*r.train_path, r.al.task, opts);
    c.test = load_corpus(*r.test_path, r.al.task, opts);
  } else {
    GeneratorSpec g = r.gen;
    c.train = generate_synthetic(g, r.gen_seed);
    g.sentences = r.test_sentences;
    g.id_prefix = "test";
    c.test = generate_synthetic(g, r.gen_test_seed);
  }
  if (c.train.sentences.empty()) throw ConfigError("train: empty corpus");
  if (c.test.sentences.empty()) throw ConfigError("test: empty corpus");
  return c;
}

}  // namespace alps::cli
