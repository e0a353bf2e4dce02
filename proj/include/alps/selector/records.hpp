#pragma once

// Cycle records, their JSON form, and per-cycle aggregation across seeds.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "alps/eval/metrics.hpp"
#include "alps/util/error.hpp"

namespace alps::al {

using nlohmann::json;

struct CycleRecord {
  std::size_t cycle = 0;
  std::uint64_t seed = 0;
  std::string strategy;
  std::string task;
  std::size_t sentences = 0;        // selected this cycle
  double reading_cost = 0;          // cumulative tokens read
  double labeling_cost = 0;         // cumulative, task cost rule
  double annotated = 0;             // cumulative annotated sub-structures, unfiltered
  double cycle_reading_cost = 0;
  double cycle_labeling_cost = 0;
  double cycle_annotated = 0;
  double ratio = 1.0;               // selection ratio used
  double relation_ratio = 0;        // ie: NIL-adjusted relation ratio
  double estimated_error = 0;       // 1 - mean predicted correctness on Q
  double actual_error = 0;          // argmax error rate on Q
  std::size_t discarded = 0;        // ie: dropped relation queries
  eval::EvalReport test;
  double test_primary = 0;
  double dev_metric = 0;
  std::size_t pool_remaining = 0;
  std::size_t budget_remaining = 0;
  std::vector<std::string> selected_ids;

  bool operator==(const CycleRecord&) const = default;
};

inline json report_to_json(const eval::EvalReport& r) {
  return json{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
              {"las", r.las},             {"uas", r.uas},       {"mention_f1", r.mention_f1},
              {"relation_f1", r.relation_f1}};
}

inline eval::EvalReport report_from_json(const json& j) {
  eval::EvalReport r;
  r.precision = j.at("precision");
  r.recall = j.at("recall");
  r.f1 = j.at("f1");
  r.las = j.at("las");
  r.uas = j.at("uas");
  r.mention_f1 = j.at("mention_f1");
  r.relation_f1 = j.at("relation_f1");
  return r;
}

inline json to_json(const CycleRecord& r) {
  return json{{"cycle", r.cycle},
              {"seed", r.seed},
              {"strategy", r.strategy},
              {"task", r.task},
              {"sentences", r.sentences},
              {"reading_cost", r.reading_cost},
              {"labeling_cost", r.labeling_cost},
              {"annotated", r.annotated},
              {"cycle_reading_cost", r.cycle_reading_cost},
              {"cycle_labeling_cost", r.cycle_labeling_cost},
              {"cycle_annotated", r.cycle_annotated},
              {"ratio", r.ratio},
              {"relation_ratio", r.relation_ratio},
              {"estimated_error", r.estimated_error},
              {"actual_error", r.actual_error},
              {"discarded", r.discarded},
              {"test", report_to_json(r.test)},
              {"test_primary", r.test_primary},
              {"dev_metric", r.dev_metric},
              {"pool_remaining", r.pool_remaining},
              {"budget_remaining", r.budget_remaining},
              {"selected_ids", r.selected_ids}};
}

inline CycleRecord record_from_json(const json& j) {
  CycleRecord r;
  r.cycle = j.at("cycle");
  r.seed = j.at("seed");
  r.strategy = j.at("strategy");
  r.task = j.at("task");
  r.sentences = j.at("sentences");
  r.reading_cost = j.at("reading_cost");
  r.labeling_cost = j.at("labeling_cost");
  r.annotated = j.at("annotated");
  r.cycle_reading_cost = j.at("cycle_reading_cost");
  r.cycle_labeling_cost = j.at("cycle_labeling_cost");
  r.cycle_annotated = j.at("cycle_annotated");
  r.ratio = j.at("ratio");
  r.relation_ratio = j.at("relation_ratio");
  r.estimated_error = j.at("estimated_error");
  r.actual_error = j.at("actual_error");
  r.discarded = j.at("discarded");
  r.test = report_from_json(j.at("test"));
  r.test_primary = j.at("test_primary");
  r.dev_metric = j.at("dev_metric");
  r.pool_remaining = j.at("pool_remaining");
  r.budget_remaining = j.at("budget_remaining");
  r.selected_ids = j.at("selected_ids").get<std::vector<std::string>>();
  return r;
}

/// Costs never decrease and the budget never grows.
inline bool records_consistent(const std::vector<CycleRecord>& recs) {
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (r.reading_cost < 0 || r.labeling_cost < 0 || r.annotated < 0) return false;
    if (r.cycle_reading_cost < 0 || r.cycle_labeling_cost < 0) return false;
    if (r.cycle != i + 1) return false;
    if (i > 0) {
      const auto& p = recs[i - 1];
      if (r.reading_cost < p.reading_cost || r.labeling_cost < p.labeling_cost ||
          r.annotated < p.annotated || r.budget_remaining > p.budget_remaining)
        return false;
    }
  }
  return true;
}

inline std::string cycle_file(std::size_t cycle) { return "cycle" + std::to_string(cycle) + ".json"; }

/// Writes through a process-unique temporary and renames, so readers and
/// concurrent writers never see a partial file.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

// ---- aggregation -----------------------------------------------------------

struct Stat {
  double mean = 0, std = 0;
};

/// Mean and population standard deviation.
inline Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double v = 0;
  for (double x : xs) v += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(v / static_cast<double>(xs.size()));
  return s;
}

struct AggregateRow {
  std::size_t cycle = 0;
  std::size_t seeds = 0;
  std::map<std::string, Stat> stats;
};

inline const std::vector<std::string>& aggregate_fields() {
  static const std::vector<std::string> f = {
      "reading_cost", "labeling_cost", "annotated",   "ratio",       "relation_ratio", "estimated_error",
      "actual_error", "test_primary",  "dev_metric",  "precision",   "recall",
      "f1",           "las",           "uas",         "mention_f1",  "relation_f1"};
  return f;
}

inline double field_of(const CycleRecord& r, const std::string& f) {
  if (f == "reading_cost") return r.reading_cost;
  if (f == "labeling_cost") return r.labeling_cost;
  if (f == "annotated") return r.annotated;
  if (f == "ratio") return r.ratio;
  if (f == "relation_ratio") return r.relation_ratio;
  if (f == "estimated_error") return r.estimated_error;
  if (f == "actual_error") return r.actual_error;
  if (f == "test_primary") return r.test_primary;
  if (f == "dev_metric") return r.dev_metric;
  if (f == "precision") return r.test.precision;
  if (f == "recall") return r.test.recall;
  if (f == "f1") return r.test.f1;
  if (f == "las") return r.test.las;
  if (f == "uas") return r.test.uas;
  if (f == "mention_f1") return r.test.mention_f1;
  if (f == "relation_f1") return r.test.relation_f1;
  throw std::invalid_argument("unknown field " + f);
}

/// One row per cycle index over however many seeds reached it.
inline std::vector<AggregateRow> aggregate(const std::vector<std::vector<CycleRecord>>& per_seed) {
  std::map<std::size_t, std::vector<const CycleRecord*>> by_cycle;
  for (const auto& recs : per_seed)
    for (const auto& r : recs) by_cycle[r.cycle].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [c, recs] : by_cycle) {
    AggregateRow row;
    row.cycle = c;
    row.seeds = recs.size();
    for (const auto& f : aggregate_fields()) {
      std::vector<double> xs;
      for (const auto* r : recs) xs.push_back(field_of(*r, f));
      row.stats[f] = stat_of(xs);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "cycle,seeds";
  for (const auto& f : aggregate_fields()) out << "," << f << "_mean," << f << "_std";
  out << "\n";
  for (const auto& r : rows) {
    out << r.cycle << "," << r.seeds;
    for (const auto& f : aggregate_fields()) {
      const Stat& s = r.stats.at(f);
      out << "," << fmt_num(s.mean) << "," << fmt_num(s.std);
    }
    out << "\n";
  }
}

inline void write_aggregate(const std::filesystem::path& run_dir, const std::vector<AggregateRow>& rows) {
  std::filesystem::create_directories(run_dir);
  std::ostringstream out;
  write_aggregate_csv(out, rows);
  write_text_file(run_dir / "aggregate.csv", out.str());
}

}  // namespace alps::al
