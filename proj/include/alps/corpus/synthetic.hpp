#pragma once

// Deterministic synthetic corpora.
//
// Tagging: an explicit first-order HMM whose hidden states are O, a per-type
// "trigger" O state that strongly precedes B-<type>, and B-/I- states per
// type. Noise moves emissions into a shared ambiguous pool or into another
// type's vocabulary, so context is needed to recover the label.
//
// Parsing: POS sequence from a small HMM, heads drawn by attaching tokens in
// order of distance from the root, each choosing among already attached
// tokens with weight affinity(pos_h, pos_m) * p * (1 - p)^(distance - 1).
//
// IE: tagging sentences whose spans become mentions; a relation holds between
// two mentions when a relation trigger word sits between them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "alps/corpus/types.hpp"
#include "alps/tree/tree_crf.hpp"
#include "alps/util/hash.hpp"
#include "alps/util/random.hpp"

namespace alps {

struct GeneratorSpec {
  Task task = Task::Tagging;
  std::size_t sentences = 1000;
  std::size_t vocab_size = 2000;
  std::vector<std::string> types = {"PER", "LOC", "ORG", "MISC"};
  std::size_t min_len = 5;
  std::size_t max_len = 20;
  double noise = 0.1;
  double zipf_exponent = 1.1;
  double geometric_p = 0.5;       // parsing head distance decay
  std::size_t relation_labels = 2;  // IE
  std::string id_prefix = "syn";

  void validate() const {
    if (sentences == 0) throw ConfigError("generator: sentences must be positive");
    if (task != Task::Parsing && types.empty()) throw ConfigError("generator: zero labels");
    if (vocab_size < 20) throw ConfigError("generator: vocab_size must be at least 20");
    if (min_len == 0 || max_len < min_len) throw ConfigError("generator: bad length range");
    if (noise < 0 || noise > 1) throw ConfigError("generator: noise must lie in [0,1]");
    if (geometric_p <= 0 || geometric_p > 1) throw ConfigError("generator: geometric_p in (0,1]");
    if (task == Task::IE && relation_labels == 0) throw ConfigError("generator: zero relation labels");
  }
};

namespace synth {

/// A vocabulary slice with Zipfian sampling.
struct Slice {
  std::vector<std::string> words;
  std::vector<std::string> pos;
  std::vector<double> cumulative;

  const std::string& sample(Rng& rng, std::string* pos_out) const {
    double u = uniform01(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t k = std::min<std::size_t>(it - cumulative.begin(), words.size() - 1);
    if (pos_out) *pos_out = pos[k];
    return words[k];
  }
};

class WordFactory {
 public:
  std::string make(std::uint64_t key, bool capitalized, const std::string& suffix) {
    static const char* kCons = "bdfgklmnprstvz";
    static const char* kVow = "aeiou";
    std::uint64_t h = mix64(key);
    for (int attempt = 0;; ++attempt) {
      std::string w;
      int syll = 2 + static_cast<int>(h % 2) + attempt / 4;
      std::uint64_t x = h;
      for (int s = 0; s < syll; ++s) {
        w.push_back(kCons[x % 14]);
        x /= 14;
        w.push_back(kVow[x % 5]);
        x /= 5;
      }
      w += suffix;
      if (capitalized) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (used_.insert(w).second) return w;
      h = mix64(h + 0x51ed27);
    }
  }

 private:
  std::unordered_set<std::string> used_;
};

inline Slice make_slice(WordFactory& wf, std::uint64_t slice_id, std::size_t size, double zipf,
                        bool capitalized, const std::vector<std::string>& suffixes,
                        const std::vector<std::pair<std::string, double>>& pos_dist) {
  Slice s;
  double acc = 0.0;
  for (std::size_t k = 0; k < size; ++k) {
    std::uint64_t key = hash_combine(slice_id, k);
    std::string suffix;
    if (!suffixes.empty() && (mix64(key) >> 7) % 2 == 0) suffix = suffixes[(mix64(key) >> 9) % suffixes.size()];
    s.words.push_back(wf.make(key, capitalized, suffix));
    double u = static_cast<double>(mix64(key ^ 0xabcdef) >> 11) * 0x1.0p-53;
    std::string p = pos_dist.back().first;
    for (const auto& [tag, w] : pos_dist) {
      if (u < w) {
        p = tag;
        break;
      }
      u -= w;
    }
    s.pos.push_back(p);
    acc += 1.0 / std::pow(static_cast<double>(k + 1), zipf);
    s.cumulative.push_back(acc);
  }
  return s;
}

inline const std::vector<std::pair<std::string, double>>& function_pos() {
  static const std::vector<std::pair<std::string, double>> d = {
      {"DET", 0.12}, {"ADP", 0.14}, {"VERB", 0.2},  {"NOUN", 0.28},
      {"ADJ", 0.08}, {"ADV", 0.06}, {"PRON", 0.06}, {"PUNCT", 0.06}};
  return d;
}

inline std::vector<std::string> type_suffixes(std::size_t k) {
  static const std::vector<std::vector<std::string>> table = {
      {"son", "ey"}, {"ia", "burg"}, {"corp", "tek"}, {"ish", "an"}, {"ov", "ei"}, {"ul", "ix"}};
  return table[k % table.size()];
}

struct TaggingModel {
  std::size_t K = 0;
  std::vector<std::vector<double>> trans;  // [state][state]
  std::vector<double> start;
  std::vector<Slice> emit;                 // per state clean slice
  Slice ambiguous;
  std::vector<Slice> relation_triggers;    // IE only
  std::vector<std::string> state_tag;

  std::size_t o_plain() const { return 0; }
  std::size_t trig(std::size_t k) const { return 1 + k; }
  std::size_t b(std::size_t k) const { return 1 + K + 2 * k; }
  std::size_t i(std::size_t k) const { return 2 + K + 2 * k; }
  std::size_t num_states() const { return 1 + 3 * K; }
};

inline TaggingModel build_tagging_model(const GeneratorSpec& spec) {
  TaggingModel m;
  m.K = spec.types.size();
  const std::size_t K = m.K, S = m.num_states();
  WordFactory wf;
  const double V = static_cast<double>(spec.vocab_size);
  auto sz = [](double x) { return std::max<std::size_t>(4, static_cast<std::size_t>(x)); };

  m.emit.resize(S);
  m.state_tag.resize(S, "O");
  m.emit[m.o_plain()] = make_slice(wf, 1, sz(V * 0.5), spec.zipf_exponent, false, {}, function_pos());
  for (std::size_t k = 0; k < K; ++k) {
    const auto suf = type_suffixes(k);
    std::vector<std::pair<std::string, double>> ent_pos = {{"PROPN", 1.0}};
    if (k % 4 == 3) ent_pos = {{"ADJ", 0.5}, {"PROPN", 0.5}};
    m.emit[m.trig(k)] = make_slice(wf, 100 + k, 8, 0.8, false, {}, {{"NOUN", 1.0}});
    m.emit[m.b(k)] = make_slice(wf, 200 + k, sz(V * 0.3 / K), spec.zipf_exponent, true, suf, ent_pos);
    m.emit[m.i(k)] = make_slice(wf, 300 + k, sz(V * 0.15 / K), spec.zipf_exponent, true, suf, ent_pos);
    m.state_tag[m.b(k)] = "B-" + spec.types[k];
    m.state_tag[m.i(k)] = "I-" + spec.types[k];
  }
  m.ambiguous = make_slice(wf, 7, sz(V * 0.03), 0.8, true, {}, {{"PROPN", 0.7}, {"NOUN", 0.3}});
  if (spec.task == Task::IE)
    for (std::size_t r = 0; r < spec.relation_labels; ++r)
      m.relation_triggers.push_back(make_slice(wf, 900 + r, 6, 0.8, false, {}, {{"VERB", 1.0}}));

  const double Kd = static_cast<double>(K);
  m.trans.assign(S, std::vector<double>(S, 0.0));
  m.start.assign(S, 0.0);
  m.start[m.o_plain()] = 0.6;
  for (std::size_t k = 0; k < K; ++k) {
    m.start[m.trig(k)] = 0.25 / Kd;
    m.start[m.b(k)] = 0.15 / Kd;
  }
  m.trans[m.o_plain()][m.o_plain()] = 0.75;
  for (std::size_t k = 0; k < K; ++k) {
    m.trans[m.o_plain()][m.trig(k)] = 0.15 / Kd;
    m.trans[m.o_plain()][m.b(k)] = 0.10 / Kd;
    m.trans[m.trig(k)][m.b(k)] = 0.85;
    m.trans[m.trig(k)][m.o_plain()] = 0.15;
    m.trans[m.b(k)][m.i(k)] = 0.5;
    m.trans[m.b(k)][m.o_plain()] = 0.5;
    m.trans[m.i(k)][m.i(k)] = 0.3;
    m.trans[m.i(k)][m.o_plain()] = 0.7;
  }
  return m;
}

inline void emit_tagging_sentence(const TaggingModel& m, const GeneratorSpec& spec, Rng& rng,
                                  Sentence& s) {
  const std::size_t len = spec.min_len + uniform_index(rng, spec.max_len - spec.min_len + 1);
  std::size_t state = sample_categorical(rng, m.start);
  for (std::size_t t = 0; t < len; ++t) {
    if (t > 0) state = sample_categorical(rng, m.trans[state]);
    Token tok;
    tok.tag = m.state_tag[state];
    const bool entity = state > m.K;
    const double u = uniform01(rng);
    if (entity && u < spec.noise) {
      tok.form = m.ambiguous.sample(rng, &tok.pos);
    } else if (entity && u < 2 * spec.noise && m.K > 1) {
      // borrow a word of the same role from another type
      std::size_t k = (state - 1 - m.K) / 2;
      bool inside = (state - 1 - m.K) % 2 == 1;
      std::size_t other = (k + 1 + uniform_index(rng, m.K - 1)) % m.K;
      tok.form = m.emit[inside ? m.i(other) : m.b(other)].sample(rng, &tok.pos);
    } else if (state == m.o_plain() && u < spec.noise / 2) {
      tok.form = m.ambiguous.sample(rng, &tok.pos);
    } else if (state == m.o_plain() && !m.relation_triggers.empty() && u >= 0.88) {
      std::size_t r = uniform_index(rng, m.relation_triggers.size());
      tok.form = m.relation_triggers[r].sample(rng, &tok.pos);
    } else {
      tok.form = m.emit[state].sample(rng, &tok.pos);
    }
    s.tokens.push_back(std::move(tok));
  }
}

inline const std::vector<std::string>& parse_pos_set() {
  static const std::vector<std::string> p = {"NOUN", "VERB", "DET", "ADJ", "ADP", "PROPN", "ADV", "PRON"};
  return p;
}

inline double attach_affinity(const std::string& head, const std::string& mod) {
  static const std::map<std::pair<std::string, std::string>, double> table = {
      {{"NOUN", "DET"}, 8.0},  {{"PROPN", "DET"}, 4.0}, {{"NOUN", "ADJ"}, 8.0},
      {{"PROPN", "ADJ"}, 3.0}, {{"VERB", "NOUN"}, 5.0}, {{"VERB", "PROPN"}, 5.0},
      {{"VERB", "PRON"}, 6.0}, {{"VERB", "ADV"}, 6.0},  {{"ADJ", "ADV"}, 3.0},
      {{"NOUN", "ADP"}, 5.0},  {{"PROPN", "ADP"}, 4.0}, {{"VERB", "VERB"}, 2.0},
      {{"NOUN", "NOUN"}, 1.5}, {{"NOUN", "PROPN"}, 1.0}};
  auto it = table.find({head, mod});
  return it == table.end() ? 0.05 : it->second;
}

inline std::string relation_name(const std::string& head_pos, const std::string& mod_pos,
                                 bool head_right) {
  if (mod_pos == "DET") return "det";
  if (mod_pos == "ADJ") return "amod";
  if (mod_pos == "ADP") return "case";
  if (mod_pos == "ADV") return "advmod";
  if (mod_pos == "PRON") return "nsubj";
  if ((mod_pos == "NOUN" || mod_pos == "PROPN") && head_pos == "VERB")
    return head_right ? "nsubj" : "obj";
  if ((mod_pos == "NOUN" || mod_pos == "PROPN")) return "nmod";
  if (mod_pos == "VERB") return "conj";
  return "dep";
}

}  // namespace synth

/// Generates a corpus; the output depends only on (spec, rng_seed).
inline Corpus generate_synthetic(const GeneratorSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  Rng rng(rng_seed);
  Corpus corpus;
  corpus.sentences.reserve(spec.sentences);

  if (spec.task == Task::Parsing) {
    const auto& P = synth::parse_pos_set();
    synth::WordFactory wf;
    std::vector<synth::Slice> words;
    for (std::size_t p = 0; p < P.size(); ++p)
      words.push_back(synth::make_slice(wf, 500 + p, std::max<std::size_t>(4, spec.vocab_size / P.size()),
                                        spec.zipf_exponent, P[p] == "PROPN", {}, {{P[p], 1.0}}));
    // POS bigram preferences
    std::vector<std::vector<double>> trans(P.size(), std::vector<double>(P.size(), 1.0));
    auto at = [&](const char* a, const char* b) -> double& {
      auto ia = std::find(P.begin(), P.end(), a) - P.begin();
      auto ib = std::find(P.begin(), P.end(), b) - P.begin();
      return trans[ia][ib];
    };
    at("DET", "NOUN") = 10;
    at("DET", "ADJ") = 4;
    at("ADJ", "NOUN") = 8;
    at("ADP", "DET") = 6;
    at("ADP", "PROPN") = 4;
    at("VERB", "DET") = 5;
    at("NOUN", "VERB") = 5;
    at("PRON", "VERB") = 8;
    at("PROPN", "VERB") = 5;
    at("NOUN", "ADP") = 4;
    at("ADV", "VERB") = 4;
    for (std::size_t si = 0; si < spec.sentences; ++si) {
      Sentence s;
      s.id = spec.id_prefix + std::to_string(si + 1);
      const std::size_t len = spec.min_len + uniform_index(rng, spec.max_len - spec.min_len + 1);
      std::size_t p = uniform_index(rng, P.size());
      for (std::size_t t = 0; t < len; ++t) {
        if (t > 0) p = sample_categorical(rng, trans[p]);
        Token tok;
        tok.form = words[p].sample(rng, nullptr);
        tok.pos = P[p];
        tok.tag = "O";
        s.tokens.push_back(std::move(tok));
      }
      // root: first verb, otherwise a uniform token
      std::size_t root = len;
      for (std::size_t t = 0; t < len && root == len; ++t)
        if (s.tokens[t].pos == "VERB") root = t;
      if (root == len) root = uniform_index(rng, len);
      std::vector<std::size_t> order(len);
      for (std::size_t t = 0; t < len; ++t) order[t] = t;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto da = a > root ? a - root : root - a;
        auto db = b > root ? b - root : root - b;
        return da < db;
      });
      std::vector<std::size_t> attached{root};
      s.tokens[root].head = 0;
      s.tokens[root].deprel = "root";
      for (std::size_t oi = 1; oi < len; ++oi) {
        const std::size_t m = order[oi];
        std::vector<double> w(attached.size());
        for (std::size_t a = 0; a < attached.size(); ++a) {
          std::size_t h = attached[a];
          std::size_t d = h > m ? h - m : m - h;
          w[a] = synth::attach_affinity(s.tokens[h].pos, s.tokens[m].pos) * spec.geometric_p *
                 std::pow(1.0 - spec.geometric_p, static_cast<double>(d - 1));
          if (spec.geometric_p == 1.0 && d > 1) w[a] = 0.0;
        }
        std::size_t pick;
        if (uniform01(rng) < spec.noise) {
          pick = uniform_index(rng, attached.size());
        } else {
          double tot = 0;
          for (double x : w) tot += x;
          pick = tot > 0 ? sample_categorical(rng, w) : attached.size() - 1;
        }
        const std::size_t h = attached[pick];
        s.tokens[m].head = static_cast<int>(h) + 1;
        s.tokens[m].deprel = synth::relation_name(s.tokens[h].pos, s.tokens[m].pos, h > m);
        attached.push_back(m);
      }
      corpus.sentences.push_back(std::move(s));
    }
    return corpus;
  }

  const synth::TaggingModel model = synth::build_tagging_model(spec);
  std::map<std::string, std::size_t> trigger_of;
  for (std::size_t r = 0; r < model.relation_triggers.size(); ++r)
    for (const auto& w : model.relation_triggers[r].words) trigger_of[w] = r;

  for (std::size_t si = 0; si < spec.sentences; ++si) {
    Sentence s;
    s.id = spec.id_prefix + std::to_string(si + 1);
    synth::emit_tagging_sentence(model, spec, rng, s);
    if (spec.task == Task::IE) {
      s.mentions = spans_from_tags(tags_of(s));
      for (std::size_t a = 0; a < s.mentions.size(); ++a)
        for (std::size_t b = a + 1; b < s.mentions.size(); ++b) {
          const Mention& ma = s.mentions[a];
          const Mention& mb = s.mentions[b];
          if (mb.start - ma.end > 6) continue;
          int found = -1;
          for (int t = ma.end + 1; t < mb.start && found < 0; ++t) {
            auto it = trigger_of.find(s.tokens[t].form);
            if (it != trigger_of.end()) found = static_cast<int>(it->second);
          }
          const double u = uniform01(rng);
          if (found >= 0 && u < 1.0 - spec.noise) {
            s.relations.push_back({static_cast<int>(a), static_cast<int>(b), "rel" + std::to_string(found)});
          } else if (found < 0 && u < spec.noise * 0.1) {
            std::size_t r = uniform_index(rng, spec.relation_labels);
            s.relations.push_back({static_cast<int>(a), static_cast<int>(b), "rel" + std::to_string(r)});
          }
        }
    }
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace alps
