// Copyright 2026 The passivekit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PASSIVEKIT_ANALYSIS_HPP_
#define PASSIVEKIT_ANALYSIS_HPP_

// Judgment-data and score-table analyses: participant exclusion, passive
// drop (always active minus passive, so positive means a degraded passive),
// split-half reliability and intervention deltas.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "passivekit/corpus.hpp"
#include "passivekit/scoring.hpp"
#include "passivekit/stats.hpp"
#include "passivekit/stimuli.hpp"
#include "passivekit/util/csv.hpp"
#include "passivekit/util/random.hpp"

namespace passivekit {

struct JudgmentRow {
  std::string participant_id;
  std::string item_id;
  int score = 0;
  std::string verb;
  std::string class_name;
  std::string voice;  // "active", "passive" or empty for fillers
  bool is_filler = false;
  bool expected_acceptable = true;
  bool is_attention_check = false;
};

inline bool valid_slider_score(long long s) { return s >= 0 && s <= 100 && s != 50; }

namespace detail {

inline std::optional<bool> parse_bool(std::string_view s) {
  const std::string l = text::to_lower(text::trim(s));
  if (l == "1" || l == "true" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "no" || l.empty()) return false;
  return std::nullopt;
}

}  // namespace detail

// Header-driven CSV. Required: participant_id, item_id, score. Optional:
// verb, class, voice, is_filler, expected_acceptable, attention_check.
// Rejected rows are reported with their line numbers.
inline std::vector<JudgmentRow> read_judgments_csv(std::istream& in, std::vector<Diagnostic>& rejected) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = csv::parse_line(line);
  if (!header) throw std::runtime_error("judgment CSV: malformed header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[text::to_lower(text::trim((*header)[i]))] = i;
  for (const char* req : {"participant_id", "item_id", "score"}) {
    if (!col.count(req)) throw std::runtime_error(std::string("judgment CSV: missing column '") + req + "'");
  }
  std::vector<JudgmentRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = csv::parse_line(line);
    if (!f || f->size() != header->size()) {
      rejected.push_back({line_no, "", "expected " + std::to_string(header->size()) + " fields"});
      continue;
    }
    auto get = [&](const std::string& name) -> std::string {
      auto it = col.find(name);
      return it == col.end() ? std::string() : (*f)[it->second];
    };
    JudgmentRow r;
    r.participant_id = get("participant_id");
    r.item_id = get("item_id");
    const auto score = text::parse_int(text::trim(get("score")));
    if (!score) {
      rejected.push_back({line_no, r.item_id, "score is not an integer"});
      continue;
    }
    if (!valid_slider_score(*score)) {
      rejected.push_back({line_no, r.item_id, "score " + std::to_string(*score) + " outside [0,100] or equal to 50"});
      continue;
    }
    r.score = static_cast<int>(*score);
    r.verb = get("verb");
    r.class_name = get("class");
    r.voice = text::to_lower(get("voice"));
    const auto filler = detail::parse_bool(get("is_filler"));
    const auto expected = detail::parse_bool(col.count("expected_acceptable") ? get("expected_acceptable") : "1");
    const auto check = detail::parse_bool(get("attention_check"));
    if (!filler || !expected || !check) {
      rejected.push_back({line_no, r.item_id, "unreadable boolean column"});
      continue;
    }
    r.is_filler = *filler;
    r.expected_acceptable = *expected;
    r.is_attention_check = *check;
    if (r.participant_id.empty() || r.item_id.empty()) {
      rejected.push_back({line_no, r.item_id, "empty participant or item id"});
      continue;
    }
    if (!r.is_filler && r.voice != "active" && r.voice != "passive") {
      rejected.push_back({line_no, r.item_id, "critical item needs voice active|passive"});
      continue;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_judgments_csv(const std::vector<JudgmentRow>& rows, std::ostream& out) {
  csv::Writer w(out);
  w.row({"participant_id", "item_id", "score", "verb", "class", "voice", "is_filler", "expected_acceptable",
         "attention_check"});
  for (const auto& r : rows) {
    w.row({r.participant_id, r.item_id, std::to_string(r.score), r.verb, r.class_name, r.voice,
           r.is_filler ? "1" : "0", r.expected_acceptable ? "1" : "0", r.is_attention_check ? "1" : "0"});
  }
}

inline bool is_unexpected_filler_rating(const JudgmentRow& r) {
  return r.is_filler && ((r.expected_acceptable && r.score < 50) || (!r.expected_acceptable && r.score > 50));
}

struct ExclusionResult {
  std::vector<JudgmentRow> kept;
  std::vector<std::string> excluded;          // more than `threshold` unexpected filler ratings
  std::vector<std::string> no_filler_ratings;  // flagged and excluded
  std::map<std::string, std::size_t> unexpected_counts;
};

inline ExclusionResult exclude_participants(const std::vector<JudgmentRow>& rows, std::size_t threshold = 15) {
  std::map<std::string, std::size_t> fillers_seen;
  ExclusionResult res;
  for (const auto& r : rows) {
    res.unexpected_counts[r.participant_id];
    if (!r.is_filler) continue;
    ++fillers_seen[r.participant_id];
    if (is_unexpected_filler_rating(r)) ++res.unexpected_counts[r.participant_id];
  }
  std::set<std::string> drop;
  for (const auto& [p, n] : res.unexpected_counts) {
    if (!fillers_seen.count(p)) {
      res.no_filler_ratings.push_back(p);
      drop.insert(p);
    } else if (n > threshold) {
      res.excluded.push_back(p);
      drop.insert(p);
    }
  }
  for (const auto& r : rows) {
    if (!drop.count(r.participant_id)) res.kept.push_back(r);
  }
  return res;
}

// "<pair>.active" / "<pair>.passive" -> "<pair>".
inline std::string pair_key(const std::string& item_id) {
  for (std::string_view suffix : {".active", ".passive"}) {
    if (item_id.size() > suffix.size() && item_id.compare(item_id.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return item_id.substr(0, item_id.size() - suffix.size());
    }
  }
  return item_id;
}

struct PassiveDropRecord {
  std::string pair_id;
  std::string verb;
  std::string class_name;
  double drop = 0.0;
  double active_mean = 0.0;
  double passive_mean = 0.0;
  std::size_t n_active = 0;
  std::size_t n_passive = 0;
  std::string source;  // "human" or "model"
  Interval ci;
};

struct DropTable {
  std::vector<PassiveDropRecord> records;
  std::vector<Diagnostic> skipped;
};

struct VoicedObservation {
  std::string pair_id;
  std::string verb;
  std::string class_name;
  bool active = true;
  double value = 0.0;
};

// drop = mean(active values) - mean(passive values), per pair, in first-seen
// pair order.
inline DropTable passive_drop(const std::vector<VoicedObservation>& obs, const std::string& source) {
  struct Acc {
    PassiveDropRecord rec;
    double sa = 0.0, sp = 0.0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  for (const auto& o : obs) {
    auto [it, inserted] = acc.try_emplace(o.pair_id);
    if (inserted) {
      order.push_back(o.pair_id);
      it->second.rec.pair_id = o.pair_id;
      it->second.rec.verb = o.verb;
      it->second.rec.class_name = o.class_name;
      it->second.rec.source = source;
    }
    auto& a = it->second;
    if (o.active) {
      a.sa += o.value;
      ++a.rec.n_active;
    } else {
      a.sp += o.value;
      ++a.rec.n_passive;
    }
  }
  DropTable t;
  for (const auto& id : order) {
    auto& a = acc.at(id);
    if (a.rec.n_active == 0 || a.rec.n_passive == 0) {
      t.skipped.push_back({0, id, a.rec.n_active ? "no passive observations" : "no active observations"});
      continue;
    }
    a.rec.active_mean = a.sa / static_cast<double>(a.rec.n_active);
    a.rec.passive_mean = a.sp / static_cast<double>(a.rec.n_passive);
    a.rec.drop = a.rec.active_mean - a.rec.passive_mean;
    t.records.push_back(a.rec);
  }
  return t;
}

inline DropTable human_passive_drops(const std::vector<JudgmentRow>& rows) {
  std::vector<VoicedObservation> obs;
  for (const auto& r : rows) {
    if (r.is_filler) continue;
    obs.push_back({pair_key(r.item_id), r.verb, r.class_name, r.voice == "active", static_cast<double>(r.score)});
  }
  return passive_drop(obs, "human");
}

// Single drop over every critical rating: mean(active) - mean(passive).
inline PassiveDropRecord overall_passive_drop(const std::vector<JudgmentRow>& rows) {
  std::vector<VoicedObservation> obs;
  for (const auto& r : rows) {
    if (!r.is_filler) obs.push_back({"all", "", "", r.voice == "active", static_cast<double>(r.score)});
  }
  auto t = passive_drop(obs, "human");
  if (t.records.empty()) throw StatsError("overall_passive_drop: need active and passive ratings");
  return t.records.front();
}

// Model drops from one or more scored runs of the same suite (e.g. several
// seeds); each voice's mean is taken over runs.
inline DropTable model_passive_drops(const std::vector<SuiteScores>& runs, const std::vector<SentencePair>& pairs) {
  std::map<std::string, const SentencePair*> meta;
  for (const auto& p : pairs) meta[p.pair_id] = &p;
  std::vector<VoicedObservation> obs;
  std::vector<Diagnostic> unknown;
  for (const auto& p : pairs) {
    for (const auto& run : runs) {
      for (const auto& ps : run.scored) {
        if (ps.pair_id != p.pair_id) continue;
        obs.push_back({p.pair_id, p.verb, p.class_name, true, ps.active.total});
        obs.push_back({p.pair_id, p.verb, p.class_name, false, ps.passive.total});
      }
    }
  }
  auto table = passive_drop(obs, "model");
  for (const auto& p : pairs) {
    bool found = std::any_of(table.records.begin(), table.records.end(),
                             [&](const PassiveDropRecord& r) { return r.pair_id == p.pair_id; });
    if (!found) table.skipped.push_back({0, p.pair_id, "pair has no scores"});
  }
  return table;
}

struct GroupSummary {
  std::string key;
  std::size_t n = 0;
  double mean_drop = 0.0;
  Interval ci;  // bootstrap over the pairs in the group; NaN when n < 2
};

// Mean drop per group (verb or class) with a percentile bootstrap CI over
// the group's pairs (i.e. frames).
template <typename KeyFn>
std::vector<GroupSummary> summarize_drops(const std::vector<PassiveDropRecord>& records, KeyFn&& key,
                                          const BootstrapOptions& opts = {}) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : records) groups[key(r)].push_back(r.drop);
  std::vector<GroupSummary> out;
  for (const auto& [k, drops] : groups) {
    GroupSummary s;
    s.key = k;
    s.n = drops.size();
    s.mean_drop = mean(drops);
    if (drops.size() >= 2) s.ci = bootstrap_mean_ci(drops, opts);
    out.push_back(s);
  }
  return out;
}

// Per-pair drops with bootstrap CIs over participants. Each participant
// rates a pair in one voice only, so active and passive ratings are
// resampled separately (two-sample percentile bootstrap).
inline void attach_participant_cis(DropTable& table, const std::vector<JudgmentRow>& rows,
                                   const BootstrapOptions& opts = {}) {
  if (opts.iterations < 1000) throw StatsError("bootstrap: need at least 1000 iterations");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_pair;
  for (const auto& r : rows) {
    if (r.is_filler) continue;
    auto& cell = by_pair[pair_key(r.item_id)];
    (r.voice == "active" ? cell.first : cell.second).push_back(static_cast<double>(r.score));
  }
  Rng rng(opts.seed);
  for (auto& rec : table.records) {
    const auto& [act, pas] = by_pair[rec.pair_id];
    if (act.size() < 2 || pas.size() < 2) continue;
    Rng local(rng.derive_seed());
    std::vector<double> reps(opts.iterations);
    for (auto& rep : reps) {
      double sa = 0.0, sp = 0.0;
      for (std::size_t i = 0; i < act.size(); ++i) sa += act[local.uniform_below(act.size())];
      for (std::size_t i = 0; i < pas.size(); ++i) sp += pas[local.uniform_below(pas.size())];
      rep = sa / static_cast<double>(act.size()) - sp / static_cast<double>(pas.size());
    }
    std::sort(reps.begin(), reps.end());
    const double alpha = (1.0 - opts.level) / 2.0;
    rec.ci = {quantile_sorted(reps, alpha), quantile_sorted(reps, 1.0 - alpha)};
  }
}

struct SplitHalfResult {
  double corrected = 0.0;
  double mean_r = 0.0;
  std::vector<double> split_rs;
  std::vector<Diagnostic> diagnostics;
};

// Repeatedly splits participants at random into two halves, correlates the
// per-item mean ratings of the halves, averages r over splits and applies
// the Spearman-Brown correction.
inline SplitHalfResult split_half_reliability(const std::vector<JudgmentRow>& rows, std::size_t n_splits = 10,
                                              std::uint64_t seed = 0) {
  if (n_splits == 0) throw StatsError("split_half_reliability: n_splits must be positive");
  std::vector<std::string> participants;
  {
    std::set<std::string> seen;
    for (const auto& r : rows) {
      if (seen.insert(r.participant_id).second) participants.push_back(r.participant_id);
    }
  }
  std::sort(participants.begin(), participants.end());
  if (participants.size() < 2) throw StatsError("split_half_reliability: need at least 2 participants");

  SplitHalfResult res;
  Rng rng(seed);
  for (std::size_t split = 0; split < n_splits; ++split) {
    auto shuffled = participants;
    rng.shuffle(shuffled);
    std::set<std::string> half_a(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(shuffled.size() / 2));
    std::map<std::string, std::pair<double, std::size_t>> a, b;
    for (const auto& r : rows) {
      auto& cell = (half_a.count(r.participant_id) ? a : b)[r.item_id];
      cell.first += r.score;
      ++cell.second;
    }
    std::vector<double> xa, xb;
    std::set<std::string> items;
    for (const auto& [k, v] : a) items.insert(k);
    for (const auto& [k, v] : b) items.insert(k);
    for (const auto& item : items) {
      auto ia = a.find(item), ib = b.find(item);
      if (ia == a.end() || ib == b.end()) {
        res.diagnostics.push_back({0, item, "split " + std::to_string(split + 1) + ": item rated in one half only; dropped"});
        continue;
      }
      xa.push_back(ia->second.first / static_cast<double>(ia->second.second));
      xb.push_back(ib->second.first / static_cast<double>(ib->second.second));
    }
    res.split_rs.push_back(pearson_r(xa, xb).r);
  }
  res.mean_r = mean(res.split_rs);
  res.corrected = spearman_brown(res.mean_r);
  return res;
}

struct DeltaRow {
  std::string pair_id;
  std::string verb;
  std::string class_name;
  double baseline = 0.0;
  double intervened = 0.0;
  double delta = 0.0;
  bool mutating = false;
};

struct DeltaTable {
  std::vector<DeltaRow> pairs;
  std::vector<DeltaRow> verbs;  // means over each verb's pairs
};

inline DeltaTable intervention_delta(const std::vector<PassiveDropRecord>& baseline,
                                     const std::vector<PassiveDropRecord>& intervened,
                                     const std::set<std::string>& mutating) {
  std::map<std::string, const PassiveDropRecord*> after;
  for (const auto& r : intervened) after[r.pair_id] = &r;
  if (after.size() != baseline.size()) throw StatsError("intervention_delta: suites differ in size");
  DeltaTable t;
  std::vector<std::string> verb_order;
  std::map<std::string, DeltaRow> verb_acc;
  std::map<std::string, std::size_t> verb_n;
  for (const auto& b : baseline) {
    auto it = after.find(b.pair_id);
    if (it == after.end()) throw StatsError("intervention_delta: pair " + b.pair_id + " missing after intervention");
    DeltaRow row{b.pair_id, b.verb, b.class_name, b.drop, it->second->drop, it->second->drop - b.drop,
                 mutating.count(b.verb) > 0};
    t.pairs.push_back(row);
    auto [vit, inserted] = verb_acc.try_emplace(b.verb, DeltaRow{"", b.verb, b.class_name, 0, 0, 0, row.mutating});
    if (inserted) verb_order.push_back(b.verb);
    vit->second.baseline += row.baseline;
    vit->second.intervened += row.intervened;
    ++verb_n[b.verb];
  }
  for (const auto& v : verb_order) {
    DeltaRow r = verb_acc[v];
    const auto n = static_cast<double>(verb_n[v]);
    r.baseline /= n;
    r.intervened /= n;
    r.delta = r.intervened - r.baseline;
    t.verbs.push_back(r);
  }
  return t;
}

// Pearson r between two drop tables matched on pair id.
inline PearsonResult correlate_drops(const std::vector<PassiveDropRecord>& a,
                                     const std::vector<PassiveDropRecord>& b) {
  std::map<std::string, double> bm;
  for (const auto& r : b) bm[r.pair_id] = r.drop;
  std::vector<double> x, y;
  for (const auto& r : a) {
    auto it = bm.find(r.pair_id);
    if (it == bm.end()) continue;
    x.push_back(r.drop);
    y.push_back(it->second);
  }
  return pearson_r(x, y);
}

inline void write_drops_csv(const std::vector<PassiveDropRecord>& records, std::ostream& out) {
  csv::Writer w(out);
  w.row({"pair_id", "verb", "class", "source", "active_mean", "passive_mean", "drop", "n_active", "n_passive",
         "ci_low", "ci_high"});
  for (const auto& r : records) {
    w.row({r.pair_id, r.verb, r.class_name, r.source, csv::number(r.active_mean), csv::number(r.passive_mean),
           csv::number(r.drop), std::to_string(r.n_active), std::to_string(r.n_passive),
           std::isnan(r.ci.low) ? "" : csv::number(r.ci.low), std::isnan(r.ci.high) ? "" : csv::number(r.ci.high)});
  }
}

inline std::vector<PassiveDropRecord> read_drops_csv(std::istream& in) {
  std::string line;
  std::vector<PassiveDropRecord> out;
  if (!std::getline(in, line)) return out;
  const auto header = csv::parse_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[(*header)[i]] = i;
  for (const char* req : {"pair_id", "verb", "class", "drop"}) {
    if (!col.count(req)) throw std::runtime_error(std::string("drop table: missing column '") + req + "'");
  }
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = csv::parse_line(line);
    if (!f || f->size() != header->size()) throw std::runtime_error("drop table: malformed row");
    PassiveDropRecord r;
    r.pair_id = (*f)[col["pair_id"]];
    r.verb = (*f)[col["verb"]];
    r.class_name = (*f)[col["class"]];
    r.drop = std::stod((*f)[col["drop"]]);
    if (col.count("source")) r.source = (*f)[col["source"]];
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_summary_csv(const std::vector<GroupSummary>& rows, const std::string& key_name, std::ostream& out) {
  csv::Writer w(out);
  w.row({key_name, "n_pairs", "mean_drop", "ci_low", "ci_high"});
  for (const auto& s : rows) {
    w.row({s.key, std::to_string(s.n), csv::number(s.mean_drop), std::isnan(s.ci.low) ? "" : csv::number(s.ci.low),
           std::isnan(s.ci.high) ? "" : csv::number(s.ci.high)});
  }
}

inline void write_delta_csv(const std::vector<DeltaRow>& rows, std::ostream& out) {
  csv::Writer w(out);
  w.row({"pair_id", "verb", "class", "mutating", "baseline_drop", "intervened_drop", "delta"});
  for (const auto& r : rows) {
    w.row({r.pair_id, r.verb, r.class_name, r.mutating ? "1" : "0", csv::number(r.baseline),
           csv::number(r.intervened), csv::number(r.delta)});
  }
}

}  // namespace passivekit

#endif  // PASSIVEKIT_ANALYSIS_HPP_
