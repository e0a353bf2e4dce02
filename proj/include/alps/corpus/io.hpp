#pragma once

// Corpus readers and writers: whitespace column tagging data, CoNLL-U, and
// the JSON-lines format used for IE corpora.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alps/corpus/types.hpp"
#include "alps/tree/tree_crf.hpp"
#include "alps/util/log.hpp"

namespace alps {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string f;
  while (is >> f) out.push_back(f);
  return out;
}

inline std::vector<std::string> split_char(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

struct ColumnOptions {
  bool strict_bio = false;
};

/// Reads `form pos tag` lines (a 4-column CoNLL-2003 line `form pos chunk tag`
/// is also accepted), sentences separated by blank lines.
inline Corpus read_column_tagging(std::istream& in, const ColumnOptions& opts = {},
                                  const std::string& source = "<stream>") {
  Corpus corpus;
  Sentence cur;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.id = "s" + std::to_string(corpus.sentences.size() + 1);
    std::vector<std::string> tags = tags_of(cur);
    int bad = first_bio_violation(tags);
    if (bad >= 0) {
      if (opts.strict_bio)
        throw ValidationError(source + ": sentence " + cur.id + " has orphan tag '" +
                              tags[bad] + "' at token " + std::to_string(bad + 1));
      repair_bio(tags);
      for (std::size_t i = 0; i < tags.size(); ++i) cur.tokens[i].tag = tags[i];
    }
    corpus.sentences.push_back(std::move(cur));
    cur = Sentence{};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) {
      flush();
      continue;
    }
    auto cols = detail::split_ws(line);
    if (cols[0] == "-DOCSTART-") continue;
    if (cols.size() != 3 && cols.size() != 4)
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 3 columns, got " +
                       std::to_string(cols.size()));
    Token t;
    t.form = cols[0];
    t.pos = cols[1];
    t.tag = cols.back();
    if (!is_well_formed_tag(t.tag))
      throw ParseError(source + ":" + std::to_string(lineno) + ": malformed tag '" + t.tag + "'");
    cur.tokens.push_back(std::move(t));
  }
  flush();
  if (corpus.empty()) log::warn(source + ": no sentences read");
  return corpus;
}

inline Corpus load_column_tagging(const std::string& path, const ColumnOptions& opts = {}) {
  auto in = detail::open_input(path);
  return read_column_tagging(in, opts, path);
}

inline void write_column_tagging(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) out << t.form << ' ' << t.pos << ' ' << t.tag << '\n';
    out << '\n';
  }
}

/// CoNLL-U reader. Multiword-token ranges and empty nodes are skipped; the
/// heads of each sentence must form a tree.
inline Corpus read_conllu(std::istream& in, const std::string& source = "<stream>") {
  Corpus corpus;
  Sentence cur;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (cur.tokens.empty()) {
      cur = Sentence{};
      return;
    }
    if (cur.id.empty()) cur.id = "s" + std::to_string(corpus.sentences.size() + 1);
    std::vector<int> heads = cur.heads();
    if (!tree::is_tree(heads))
      throw ValidationError(source + ": sentence '" + cur.id + "' heads do not form a tree");
    corpus.sentences.push_back(std::move(cur));
    cur = Sentence{};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::blank(line)) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string key = "# sent_id = ";
      if (line.rfind(key, 0) == 0) cur.id = line.substr(key.size());
      continue;
    }
    auto cols = detail::split_char(line, '\t');
    if (cols.size() != 10)
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 10 columns, got " +
                       std::to_string(cols.size()));
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    Token t;
    t.form = cols[1];
    t.pos = cols[3];
    t.tag = "O";
    try {
      if (std::stoi(cols[0]) != static_cast<int>(cur.tokens.size()) + 1)
        throw ParseError(source + ":" + std::to_string(lineno) + ": token ids out of order");
      t.head = std::stoi(cols[6]);
    } catch (const std::logic_error&) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": non-numeric id or head");
    }
    t.deprel = cols[7];
    cur.tokens.push_back(std::move(t));
  }
  flush();
  if (corpus.empty()) log::warn(source + ": no sentences read");
  return corpus;
}

inline Corpus load_conllu(const std::string& path) {
  auto in = detail::open_input(path);
  return read_conllu(in, path);
}

inline void write_conllu(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sentences) {
    out << "# sent_id = " << s.id << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Token& t = s.tokens[i];
      out << (i + 1) << '\t' << t.form << "\t_\t" << t.pos << "\t_\t_\t" << t.head << '\t'
          << t.deprel << "\t_\t_\n";
    }
    out << '\n';
  }
}

/// JSON-lines IE corpus: {"id", "tokens":[...], "pos":[...],
/// "mentions":[[start,end,type],...], "relations":[[i,j,label],...]}.
/// Mention spans are inclusive token indices.
inline Corpus read_ie_jsonl(std::istream& in, const std::string& source = "<stream>") {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      Sentence s;
      s.id = j.value("id", "s" + std::to_string(corpus.sentences.size() + 1));
      const auto& toks = j.at("tokens");
      const auto pos = j.value("pos", nlohmann::json::array());
      for (std::size_t i = 0; i < toks.size(); ++i) {
        Token t;
        t.form = toks[i].get<std::string>();
        t.pos = i < pos.size() ? pos[i].get<std::string>() : "X";
        t.tag = "O";
        s.tokens.push_back(std::move(t));
      }
      for (const auto& m : j.value("mentions", nlohmann::json::array())) {
        Mention mm{m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<std::string>()};
        if (mm.start < 0 || mm.end < mm.start || mm.end >= static_cast<int>(s.size()))
          throw ValidationError(source + ":" + std::to_string(lineno) + ": bad mention span");
        s.mentions.push_back(mm);
      }
      for (const auto& r : j.value("relations", nlohmann::json::array())) {
        Relation rr{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<std::string>()};
        const int nm = static_cast<int>(s.mentions.size());
        if (rr.arg1 < 0 || rr.arg2 < 0 || rr.arg1 >= nm || rr.arg2 >= nm || rr.arg1 == rr.arg2)
          throw ValidationError(source + ":" + std::to_string(lineno) + ": bad relation args");
        s.relations.push_back(rr);
      }
      auto tags = tags_from_spans(s.size(), s.mentions);
      for (std::size_t i = 0; i < s.size(); ++i) s.tokens[i].tag = tags[i];
      if (s.tokens.empty()) throw ValidationError(source + ":" + std::to_string(lineno) + ": empty sentence");
      corpus.sentences.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (corpus.empty()) log::warn(source + ": no sentences read");
  return corpus;
}

inline Corpus load_ie_jsonl(const std::string& path) {
  auto in = detail::open_input(path);
  return read_ie_jsonl(in, path);
}

inline void write_ie_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sentences) {
    nlohmann::json j;
    j["id"] = s.id;
    auto toks = nlohmann::json::array(), pos = nlohmann::json::array();
    for (const auto& t : s.tokens) {
      toks.push_back(t.form);
      pos.push_back(t.pos);
    }
    j["tokens"] = toks;
    j["pos"] = pos;
    auto ms = nlohmann::json::array();
    for (const auto& m : s.mentions) ms.push_back({m.start, m.end, m.type});
    j["mentions"] = ms;
    auto rs = nlohmann::json::array();
    for (const auto& r : s.relations) rs.push_back({r.arg1, r.arg2, r.label});
    j["relations"] = rs;
    out << j.dump() << '\n';
  }
}

/// Loads a corpus in the format implied by the task.
inline Corpus load_corpus(const std::string& path, Task task, const ColumnOptions& opts = {}) {
  switch (task) {
    case Task::Tagging: return load_column_tagging(path, opts);
    case Task::Parsing: return load_conllu(path);
    case Task::IE: return load_ie_jsonl(path);
  }
  throw ConfigError("unknown task");
}

inline void write_corpus(std::ostream& out, const Corpus& c, Task task) {
  switch (task) {
    case Task::Tagging: write_column_tagging(out, c); break;
    case Task::Parsing: write_conllu(out, c); break;
    case Task::IE: write_ie_jsonl(out, c); break;
  }
}

}  // namespace alps
