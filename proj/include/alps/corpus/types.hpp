#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alps/util/error.hpp"
#include "alps/util/labels.hpp"

namespace alps {

enum class Task { Tagging, Parsing, IE };

inline Task parse_task(std::string_view s) {
  if (s == "tagging" || s == "ner") return Task::Tagging;
  if (s == "parsing" || s == "dpar") return Task::Parsing;
  if (s == "ie") return Task::IE;
  throw ConfigError("task: unknown value '" + std::string(s) + "'");
}

inline const char* to_string(Task t) {
  switch (t) {
    case Task::Tagging: return "tagging";
    case Task::Parsing: return "parsing";
    case Task::IE: return "ie";
  }
  return "?";
}

struct Token {
  std::string form;
  std::string pos;
  std::string tag;       // BIO label (tagging and IE mentions)
  int head = -1;         // 0 = ROOT (parsing)
  std::string deprel;    // parsing

  bool operator==(const Token&) const = default;
};

/// Inclusive token span with a type.
struct Mention {
  int start = 0;
  int end = 0;
  std::string type;

  int length() const { return end - start + 1; }
  bool overlaps(const Mention& o) const { return start <= o.end && o.start <= end; }
  int overlap(const Mention& o) const {
    return std::max(0, std::min(end, o.end) - std::max(start, o.start) + 1);
  }
  auto operator<=>(const Mention&) const = default;
};

/// Directed relation between two mentions of the same sentence (indices into
/// Sentence::mentions).
struct Relation {
  int arg1 = 0;
  int arg2 = 0;
  std::string label;

  bool operator==(const Relation&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;
  std::vector<Mention> mentions;    // IE gold mentions
  std::vector<Relation> relations;  // IE gold relations

  std::size_t size() const { return tokens.size(); }
  std::vector<int> heads() const {
    std::vector<int> h(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) h[i] = tokens[i].head;
    return h;
  }

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t num_tokens() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  bool operator==(const Corpus&) const = default;
};

// ---- BIO helpers ----------------------------------------------------------

inline bool is_outside(std::string_view tag) { return tag == "O"; }

/// Entity type of a B-/I- tag, empty for O.
inline std::string bio_type(std::string_view tag) {
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return std::string(tag.substr(2));
  return {};
}

inline bool is_well_formed_tag(std::string_view tag) {
  return tag == "O" || !bio_type(tag).empty();
}

/// True when `tag` may follow `prev` ("" for sentence start).
inline bool bio_transition_ok(std::string_view prev, std::string_view tag) {
  if (tag.size() > 0 && tag[0] == 'I') {
    if (prev.empty() || prev == "O") return false;
    return bio_type(prev) == bio_type(tag);
  }
  return true;
}

/// Index of the first orphan I- tag, or -1.
inline int first_bio_violation(const std::vector<std::string>& tags) {
  std::string prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!bio_transition_ok(prev, tags[i])) return static_cast<int>(i);
    prev = tags[i];
  }
  return -1;
}

/// Rewrites orphan I-X to B-X. Returns the number of repairs.
inline int repair_bio(std::vector<std::string>& tags) {
  int fixes = 0;
  std::string prev;
  for (auto& t : tags) {
    if (!bio_transition_ok(prev, t)) {
      t = "B-" + bio_type(t);
      ++fixes;
    }
    prev = t;
  }
  return fixes;
}

/// Spans decoded from a BIO sequence (orphan I- opens a new span).
inline std::vector<Mention> spans_from_tags(const std::vector<std::string>& tags) {
  std::vector<Mention> out;
  std::string prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (t == "O") {
      prev = t;
      continue;
    }
    if (t[0] == 'B' || !bio_transition_ok(prev, t)) {
      out.push_back({static_cast<int>(i), static_cast<int>(i), bio_type(t)});
    } else {
      out.back().end = static_cast<int>(i);
    }
    prev = t;
  }
  return out;
}

inline std::vector<std::string> tags_of(const Sentence& s) {
  std::vector<std::string> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = s.tokens[i].tag;
  return t;
}

inline std::vector<std::string> tags_from_spans(std::size_t n, const std::vector<Mention>& spans) {
  std::vector<std::string> tags(n, "O");
  for (const auto& m : spans) {
    tags[m.start] = "B-" + m.type;
    for (int i = m.start + 1; i <= m.end; ++i) tags[i] = "I-" + m.type;
  }
  return tags;
}

/// BIO label set for the given entity types: O, then B-/I- per type in order.
inline LabelSet bio_labels(const std::vector<std::string>& types) {
  LabelSet ls;
  ls.add("O");
  for (const auto& t : types) {
    ls.add("B-" + t);
    ls.add("I-" + t);
  }
  return ls;
}

/// Sorted entity types appearing in a corpus' tags.
inline std::vector<std::string> entity_types(const Corpus& c) {
  std::set<std::string> types;
  for (const auto& s : c.sentences)
    for (const auto& t : s.tokens) {
      std::string ty = bio_type(t.tag);
      if (!ty.empty()) types.insert(ty);
    }
  for (const auto& s : c.sentences)
    for (const auto& m : s.mentions) types.insert(m.type);
  return {types.begin(), types.end()};
}

inline std::vector<std::string> dependency_labels(const Corpus& c) {
  std::set<std::string> labels;
  for (const auto& s : c.sentences)
    for (const auto& t : s.tokens) labels.insert(t.deprel);
  return {labels.begin(), labels.end()};
}

}  // namespace alps
