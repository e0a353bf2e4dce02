#pragma once

// Hashed sparse feature templates for tagging, arcs, and mention pairs.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "alps/corpus/types.hpp"
#include "alps/util/hash.hpp"

namespace alps::learn {

struct Feature {
  std::uint64_t id = 0;
  double value = 1.0;

  bool operator==(const Feature&) const = default;
};

using FeatureVector = std::vector<Feature>;

inline constexpr std::size_t kTokenTemplates = 20;
inline constexpr std::size_t kArcTemplates = 16;

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Collapsed character classes, e.g. "Xxxx" -> "Xx", "12-a" -> "d-x".
inline std::string shape(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    char k = std::isupper(c) ? 'X' : std::islower(c) ? 'x' : std::isdigit(c) ? 'd' : static_cast<char>(c);
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

class Builder {
 public:
  explicit Builder(std::size_t reserve) { out_.reserve(reserve); }
  void add(std::uint64_t tmpl, std::string_view a) { push(fnv1a(a, mix64(tmpl))); }
  void add(std::uint64_t tmpl, std::string_view a, std::string_view b) {
    push(fnv1a(b, fnv1a("|", fnv1a(a, mix64(tmpl)))));
  }
  void add(std::uint64_t tmpl, std::string_view a, std::string_view b, std::string_view c) {
    push(fnv1a(c, fnv1a("|", fnv1a(b, fnv1a("|", fnv1a(a, mix64(tmpl)))))));
  }
  FeatureVector finish() {
    std::sort(out_.begin(), out_.end(), [](const Feature& x, const Feature& y) { return x.id < y.id; });
    out_.erase(std::unique(out_.begin(), out_.end(),
                           [](const Feature& x, const Feature& y) { return x.id == y.id; }),
               out_.end());
    return std::move(out_);
  }

 private:
  void push(std::uint64_t id) { out_.push_back({id, 1.0}); }
  FeatureVector out_;
};

inline std::string_view form_at(const Sentence& s, long i) {
  if (i < 0) return "<s>";
  if (i >= static_cast<long>(s.size())) return "</s>";
  return s.tokens[i].form;
}
inline std::string_view pos_at(const Sentence& s, long i) {
  if (i < 0) return "<s>";
  if (i >= static_cast<long>(s.size())) return "</s>";
  return s.tokens[i].pos;
}

inline std::string distance_bin(long d) {
  long a = d < 0 ? -d : d;
  long bin = a <= 5 ? a : (a <= 7 ? 6 : (a <= 10 ? 8 : (a <= 20 ? 11 : 21)));
  return (d < 0 ? "-" : "+") + std::to_string(bin);
}

}  // namespace detail

/// Features of one token position; at most kTokenTemplates entries.
inline FeatureVector token_features(const Sentence& s, std::size_t i) {
  using detail::form_at;
  using detail::pos_at;
  detail::Builder b(kTokenTemplates);
  const long k = static_cast<long>(i);
  const std::string& w = s.tokens[i].form;
  const std::string lw = detail::lower(w);
  b.add(1, "bias");
  b.add(2, w);
  b.add(3, lw);
  for (std::size_t n = 1; n <= 3; ++n) {
    b.add(3 + n, lw.substr(0, std::min(n, lw.size())));
    b.add(6 + n, lw.substr(lw.size() - std::min(n, lw.size())));
  }
  b.add(10, detail::shape(w));
  b.add(11, s.tokens[i].pos);
  b.add(12, detail::lower(form_at(s, k - 1)));
  b.add(13, detail::lower(form_at(s, k + 1)));
  b.add(14, detail::lower(form_at(s, k - 2)));
  b.add(15, detail::lower(form_at(s, k + 2)));
  b.add(16, pos_at(s, k - 1));
  b.add(17, pos_at(s, k + 1));
  b.add(18, pos_at(s, k - 1), s.tokens[i].pos);
  b.add(19, detail::lower(form_at(s, k - 1)), lw);
  b.add(20, detail::shape(form_at(s, k - 1)), detail::shape(w));
  return b.finish();
}

/// Features of the arc head -> mod (1-based, head 0 = ROOT).
inline FeatureVector arc_features(const Sentence& s, std::size_t head, std::size_t mod) {
  using detail::form_at;
  using detail::pos_at;
  detail::Builder b(kArcTemplates);
  const long h = static_cast<long>(head) - 1;  // 0-based, -1 = ROOT
  const long m = static_cast<long>(mod) - 1;
  const std::string_view hw = head == 0 ? "<root>" : form_at(s, h);
  const std::string_view hp = head == 0 ? "<root>" : pos_at(s, h);
  const std::string_view mw = form_at(s, m);
  const std::string_view mp = pos_at(s, m);
  const std::string dist = head == 0 ? "root" : detail::distance_bin(m - h);
  const std::string_view dir = head == 0 ? "R" : (h < m ? ">" : "<");
  b.add(101, "bias", dir);
  b.add(102, hw, dir);
  b.add(103, hp, dir);
  b.add(104, mw, dir);
  b.add(105, mp, dir);
  b.add(106, hp, mp, dist);
  b.add(107, hp, mp, dir);
  b.add(108, hw, mp, dir);
  b.add(109, hp, mw, dir);
  b.add(110, hw, mw);
  b.add(111, dist);
  b.add(112, hp, dist);
  b.add(113, mp, dist);
  const std::string_view hp_next = head == 0 ? "<root>" : pos_at(s, h + 1);
  const std::string_view hp_prev = head == 0 ? "<root>" : pos_at(s, h - 1);
  b.add(114, std::string(hp) + "|" + std::string(hp_next), std::string(pos_at(s, m - 1)) + "|" + std::string(mp), dir);
  b.add(115, std::string(hp_prev) + "|" + std::string(hp), std::string(mp) + "|" + std::string(pos_at(s, m + 1)), dir);
  // a rough "something in between" signal
  std::string between = "none";
  if (head != 0) {
    long lo = std::min(h, m), hi = std::max(h, m);
    for (long t = lo + 1; t < hi; ++t)
      if (s.tokens[t].pos == "VERB") {
        between = "verb";
        break;
      }
  }
  b.add(116, hp, mp, between);
  return b.finish();
}

/// Features of an ordered mention pair (a before b).
inline FeatureVector pair_features(const Sentence& s, const Mention& a, const Mention& c) {
  detail::Builder b(24);
  const Mention& first = a.start <= c.start ? a : c;
  const Mention& second = a.start <= c.start ? c : a;
  const long gap = second.start - first.end - 1;
  b.add(201, "bias");
  b.add(202, a.type, c.type);
  b.add(203, detail::distance_bin(gap));
  b.add(204, a.type, c.type, detail::distance_bin(gap));
  b.add(205, detail::lower(s.tokens[a.end].form));
  b.add(206, detail::lower(s.tokens[c.end].form));
  for (long t = first.end + 1; t < second.start && t <= first.end + 8; ++t) {
    b.add(207, detail::lower(s.tokens[t].form));
    b.add(208, a.type, c.type, detail::lower(s.tokens[t].form));
  }
  if (gap == 0) b.add(209, "adjacent");
  bool first_verb = true;
  for (long t = first.end + 1; t < second.start; ++t) {
    if (s.tokens[t].pos != "VERB") continue;
    const std::string lw = detail::lower(s.tokens[t].form);
    if (first_verb) b.add(210, lw);
    first_verb = false;
    b.add(211, lw, detail::distance_bin(gap));
  }
  return b.finish();
}

/// Per-token features (tagging, ie) or per-arc features laid out [mod-1][head]
/// with heads 0..n (parsing; the diagonal entries stay empty).
inline std::vector<FeatureVector> featurize(const Sentence& s, Task task) {
  std::vector<FeatureVector> out;
  if (task != Task::Parsing) {
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(token_features(s, i));
    return out;
  }
  const std::size_t n = s.size();
  out.resize((n + 1) * n);
  for (std::size_t m = 1; m <= n; ++m)
    for (std::size_t h = 0; h <= n; ++h)
      if (h != m) out[(m - 1) * (n + 1) + h] = arc_features(s, h, m);
  return out;
}

}  // namespace alps::learn
