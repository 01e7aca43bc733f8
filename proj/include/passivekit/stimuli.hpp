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

#ifndef PASSIVEKIT_STIMULI_HPP_
#define PASSIVEKIT_STIMULI_HPP_

// Verb classes, sentence frames and fillers (shipped as data files), the
// active/passive minimal pairs built from them, and counterbalanced
// presentation lists for judgment experiments.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "passivekit/util/random.hpp"
#include "passivekit/util/text.hpp"

namespace passivekit {

class StimulusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerbForms {
  std::string lemma;
  std::string past;
  std::string participle;
};

struct Frame {
  std::string id;
  std::string verb;  // set only for control frames, which belong to one verb
  std::string subject;
  std::string object;
  std::string aux = "was";
};

struct VerbClass {
  std::string name;
  bool control = false;
  std::vector<VerbForms> verbs;
  std::vector<Frame> frames;
};

struct SentencePair {
  std::string pair_id;
  std::string verb;
  std::string class_name;
  std::string frame_id;
  std::string active_text;
  std::string passive_text;
  bool is_control = false;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct FillerItem {
  std::string id;
  std::string text;
  bool expected_acceptable = true;
  bool is_attention_check = false;
};

inline std::string default_data_dir() {
  if (const char* env = std::getenv("PASSIVEKIT_DATA")) return env;
#ifdef PASSIVEKIT_DATA_DIR
  return PASSIVEKIT_DATA_DIR;
#else
  return "data";
#endif
}

inline std::vector<VerbClass> parse_verb_classes(const nlohmann::json& j) {
  std::vector<VerbClass> classes;
  if (!j.contains("classes") || !j["classes"].is_array()) {
    throw StimulusError("verb class data: missing 'classes' array");
  }
  for (const auto& c : j["classes"]) {
    VerbClass vc;
    vc.name = c.at("name").get<std::string>();
    vc.control = c.value("control", false);
    for (const auto& v : c.at("verbs")) {
      vc.verbs.push_back({v.at("lemma").get<std::string>(), v.at("past").get<std::string>(),
                          v.at("participle").get<std::string>()});
    }
    for (const auto& f : c.at("frames")) {
      vc.frames.push_back({f.at("id").get<std::string>(), f.value("verb", ""),
                           f.at("subject").get<std::string>(), f.at("object").get<std::string>(),
                           f.value("aux", "was")});
    }
    if (vc.verbs.empty()) throw StimulusError("verb class '" + vc.name + "' has no verbs");
    if (!vc.control) {
      if (vc.frames.size() != 5) {
        throw StimulusError("test class '" + vc.name + "' must have exactly 5 shared frames");
      }
      for (const auto& f : vc.frames) {
        if (!f.verb.empty()) throw StimulusError("frame " + f.id + " of a test class names a verb");
      }
    } else {
      std::set<std::string> lemmas;
      for (const auto& v : vc.verbs) lemmas.insert(v.lemma);
      std::set<std::tuple<std::string, std::string, std::string>> seen;
      for (const auto& f : vc.frames) {
        if (!lemmas.count(f.verb)) {
          throw StimulusError("control frame " + f.id + " names unknown verb '" + f.verb + "'");
        }
        if (!seen.insert({f.verb, f.subject, f.object}).second) {
          throw StimulusError("control frame " + f.id + " duplicates another frame of its verb");
        }
      }
    }
    for (const auto& f : vc.frames) {
      if (f.subject.empty() || f.object.empty()) throw StimulusError("frame " + f.id + " has an empty argument");
      if (f.aux != "was" && f.aux != "were") throw StimulusError("frame " + f.id + ": aux must be was/were");
    }
    classes.push_back(std::move(vc));
  }
  return classes;
}

inline std::vector<VerbClass> load_verb_classes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StimulusError("cannot open verb class data: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StimulusError("corrupt verb class data " + path + ": " + e.what());
  }
  return parse_verb_classes(j);
}

// Tab-separated: filler_id, expected (acceptable|unacceptable),
// attention_check (0|1), origin, text. First line is a header.
inline std::vector<FillerItem> load_fillers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StimulusError("cannot open filler data: " + path);
  std::vector<FillerItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1 || text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 5) throw StimulusError(path + ":" + std::to_string(line_no) + ": expected 5 fields");
    FillerItem item;
    item.id = f[0];
    if (f[1] != "acceptable" && f[1] != "unacceptable") {
      throw StimulusError(path + ":" + std::to_string(line_no) + ": bad expectation '" + std::string(f[1]) + "'");
    }
    item.expected_acceptable = f[1] == "acceptable";
    item.is_attention_check = f[2] == "1";
    item.text = f[4];
    out.push_back(std::move(item));
  }
  return out;
}

inline SentencePair make_pair(const VerbClass& vc, const VerbForms& verb, const Frame& frame,
                              std::size_t frame_ordinal) {
  SentencePair p;
  p.verb = verb.lemma;
  p.class_name = vc.name;
  p.frame_id = frame.id;
  p.is_control = vc.control;
  p.pair_id = vc.name + "-" + verb.lemma + "-" + std::to_string(frame_ordinal);
  p.active_text = text::capitalize(frame.subject) + " " + verb.past + " " + frame.object + ".";
  p.passive_text = text::capitalize(frame.object) + " " + frame.aux + " " + verb.participle +
                   " by " + frame.subject + ".";
  return p;
}

// Test classes: every verb in every shared frame. Control classes: each verb
// in its own frames.
inline std::vector<SentencePair> generate_pairs(const std::vector<VerbClass>& classes) {
  std::vector<SentencePair> pairs;
  for (const auto& vc : classes) {
    for (const auto& verb : vc.verbs) {
      std::size_t ordinal = 0;
      for (const auto& frame : vc.frames) {
        if (vc.control && frame.verb != verb.lemma) continue;
        pairs.push_back(make_pair(vc, verb, frame, ++ordinal));
      }
    }
  }
  return pairs;
}

inline std::vector<SentencePair> generate_pairs() {
  return generate_pairs(load_verb_classes(default_data_dir() + "/verb_classes.json"));
}

inline nlohmann::json to_json(const SentencePair& p) {
  return {{"pair_id", p.pair_id},       {"class", p.class_name},     {"verb", p.verb},
          {"frame_id", p.frame_id},     {"active", p.active_text},   {"passive", p.passive_text},
          {"is_control", p.is_control}};
}

// Suite files: one JSON object per line.
inline void export_stimuli(const std::vector<SentencePair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
  if (!out) throw StimulusError("I/O failure while writing stimulus suite");
}

inline void export_stimuli(const std::vector<SentencePair>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StimulusError("cannot open for writing: " + path);
  export_stimuli(pairs, out);
}

inline std::vector<SentencePair> import_stimuli(std::istream& in) {
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      pairs.push_back({j.at("pair_id").get<std::string>(), j.at("verb").get<std::string>(),
                       j.at("class").get<std::string>(), j.value("frame_id", ""),
                       j.at("active").get<std::string>(), j.at("passive").get<std::string>(),
                       j.value("is_control", false)});
    } catch (const nlohmann::json::exception& e) {
      throw StimulusError("suite line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

inline std::vector<SentencePair> import_stimuli(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StimulusError("cannot open stimulus suite: " + path);
  return import_stimuli(in);
}

// ---------------------------------------------------------------------------
// Presentation lists

enum class Voice { kActive, kPassive };

inline std::string_view to_string(Voice v) { return v == Voice::kActive ? "active" : "passive"; }

struct CriticalItem {
  std::string item_id;  // "<pair_id>.active" or "<pair_id>.passive"
  std::string pair_id;
  std::string class_name;
  std::string verb;
  Voice voice = Voice::kActive;
  std::string text;
};

inline CriticalItem critical_item(const SentencePair& p, Voice v) {
  return {p.pair_id + "." + std::string(to_string(v)), p.pair_id, p.class_name, p.verb, v,
          v == Voice::kActive ? p.active_text : p.passive_text};
}

struct ListEntry {
  std::size_t position = 0;  // 1-based
  std::string item_id;
  bool is_filler = false;
};

struct PresentationList {
  std::string id;  // e.g. "g1-o2-rev"
  int group = 0;
  int order = 0;
  bool reversed = false;
  std::vector<ListEntry> entries;
};

struct ListBuild {
  std::vector<PresentationList> lists;
  std::map<std::string, CriticalItem> items;  // by item_id
  std::map<std::string, FillerItem> fillers;  // by filler id
  std::map<std::string, int> pair_group;      // pair_id -> 1|2
};

struct ListOptions {
  std::size_t max_attempts = 200;
  std::size_t node_budget = 200000;
};

// Critical items seen in order, fillers skipped. C1 and C2 apply to this
// subsequence; with a filler after every critical item they would otherwise
// hold trivially.
inline std::vector<std::string> check_list_constraints(const PresentationList& list,
                                                       const std::map<std::string, CriticalItem>& items) {
  std::vector<std::string> problems;
  const CriticalItem* prev = nullptr;
  const CriticalItem* prev2 = nullptr;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    if (e.is_filler) continue;
    const auto it = items.find(e.item_id);
    if (it == items.end()) {
      problems.push_back("unknown item " + e.item_id);
      continue;
    }
    const CriticalItem& cur = it->second;
    if (i + 1 >= list.entries.size() || !list.entries[i + 1].is_filler) {
      problems.push_back("C3: critical item at position " + std::to_string(e.position) +
                         " is not followed by a filler");
    }
    if (prev && prev2 && prev->voice == cur.voice && prev2->voice == cur.voice) {
      problems.push_back("C1: three consecutive " + std::string(to_string(cur.voice)) +
                         " items ending at position " + std::to_string(e.position));
    }
    if (prev && prev->class_name == cur.class_name) {
      problems.push_back("C2: consecutive " + cur.class_name + " items at position " +
                         std::to_string(e.position));
    }
    prev2 = prev;
    prev = &cur;
  }
  return problems;
}

namespace detail {

// Orders critical items so that C1/C2 hold. Items are consumed phase by
// phase (used to pin which items fall in the first half). Items sharing
// (class, voice) are interchangeable for the constraints, so the search
// branches over those types and draws a random member.
class ConstrainedOrderer {
 public:
  ConstrainedOrderer(const std::vector<CriticalItem>& items, std::vector<std::vector<std::size_t>> phases,
                     Rng& rng, std::size_t node_budget)
      : items_(items), rng_(rng), budget_(node_budget) {
    for (const auto& phase : phases) {
      std::map<std::pair<std::string, Voice>, std::vector<std::size_t>> buckets;
      for (std::size_t i : phase) buckets[{items[i].class_name, items[i].voice}].push_back(i);
      for (auto& [k, v] : buckets) rng_.shuffle(v);
      phases_.push_back(std::move(buckets));
    }
  }

  std::optional<std::vector<std::size_t>> run() {
    if (search(0)) return sequence_;
    return std::nullopt;
  }

  bool exhausted() const { return nodes_ >= budget_; }

 private:
  using Key = std::pair<std::string, Voice>;

  bool allowed(const CriticalItem& x) const {
    const std::size_t n = sequence_.size();
    if (n >= 1 && items_[sequence_[n - 1]].class_name == x.class_name) return false;
    if (n >= 2 && items_[sequence_[n - 1]].voice == x.voice && items_[sequence_[n - 2]].voice == x.voice) {
      return false;
    }
    return true;
  }

  // Necessary conditions for the rest of the phase to be orderable.
  static bool feasible(const std::map<Key, std::vector<std::size_t>>& buckets) {
    std::map<std::string, std::size_t> by_class;
    std::size_t active = 0, passive = 0, total = 0;
    for (const auto& [k, v] : buckets) {
      by_class[k.first] += v.size();
      (k.second == Voice::kActive ? active : passive) += v.size();
      total += v.size();
    }
    for (const auto& [c, n] : by_class) {
      if (n > (total + 1) / 2) return false;
    }
    if (active > 2 * (passive + 1) || passive > 2 * (active + 1)) return false;
    return true;
  }

  bool search(std::size_t phase) {
    if (phase == phases_.size()) return true;
    auto& buckets = phases_[phase];
    bool empty = true;
    for (const auto& [k, v] : buckets) empty &= v.empty();
    if (empty) return search(phase + 1);
    if (++nodes_ > budget_) return false;
    if (!feasible(buckets)) return false;

    std::vector<Key> keys;
    for (const auto& [k, v] : buckets) {
      if (!v.empty() && allowed(items_[v.back()])) keys.push_back(k);
    }
    rng_.shuffle(keys);
    // Prefer the fullest classes first; keeps the search shallow.
    std::stable_sort(keys.begin(), keys.end(), [&](const Key& a, const Key& b) {
      return buckets[a].size() > buckets[b].size();
    });
    for (const Key& k : keys) {
      auto& bucket = buckets[k];
      const std::size_t item = bucket.back();
      bucket.pop_back();
      sequence_.push_back(item);
      if (search(phase)) return true;
      sequence_.pop_back();
      bucket.push_back(item);
      if (nodes_ > budget_) return false;
    }
    return false;
  }

  const std::vector<CriticalItem>& items_;
  Rng& rng_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<std::map<Key, std::vector<std::size_t>>> phases_;
  std::vector<std::size_t> sequence_;
};

inline std::vector<std::size_t> order_with_retries(const std::vector<CriticalItem>& items,
                                                   const std::vector<std::vector<std::size_t>>& phases,
                                                   Rng& rng, const ListOptions& options,
                                                   const std::string& what) {
  for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    Rng local(rng.derive_seed());
    ConstrainedOrderer orderer(items, phases, local, options.node_budget);
    if (auto seq = orderer.run()) return *seq;
  }
  // Name the constraint that cannot be met.
  std::map<std::string, std::size_t> by_class;
  std::size_t active = 0, passive = 0;
  for (const auto& phase : phases) {
    for (std::size_t i : phase) {
      ++by_class[items[i].class_name];
      (items[i].voice == Voice::kActive ? active : passive)++;
    }
  }
  const std::size_t total = active + passive;
  for (const auto& [c, n] : by_class) {
    if (n > (total + 1) / 2) {
      throw StimulusError(what + ": C2 infeasible, class '" + c + "' has " + std::to_string(n) +
                          " of " + std::to_string(total) + " items");
    }
  }
  if (active > 2 * (passive + 1) || passive > 2 * (active + 1)) {
    throw StimulusError(what + ": C1 infeasible, voice split " + std::to_string(active) + "/" +
                        std::to_string(passive));
  }
  throw StimulusError(what + ": no ordering satisfying C1/C2 found within the retry budget");
}

}  // namespace detail

// Two groups of pairs (each verb contributes floor or ceil of half its
// frames to each group); in each group the active and passive of every pair
// go to different sets; each set gets a C1/C2-respecting order, with the
// second set's first half drawn from the first set's second half; each order
// also ships reversed. Every critical item is followed by a filler.
inline ListBuild build_lists(const std::vector<SentencePair>& pairs,
                             const std::vector<FillerItem>& fillers, std::uint64_t seed,
                             const ListOptions& options = {}) {
  if (pairs.empty()) throw StimulusError("build_lists: no sentence pairs");
  Rng rng(seed);
  ListBuild build;
  for (const auto& f : fillers) build.fillers[f.id] = f;

  // Group assignment per verb.
  std::map<std::string, std::vector<std::size_t>> by_verb;
  std::vector<std::string> verb_order;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string key = pairs[i].class_name + "/" + pairs[i].verb;
    if (!by_verb.count(key)) verb_order.push_back(key);
    by_verb[key].push_back(i);
  }
  std::vector<std::string> odd;
  for (const auto& v : verb_order) {
    if (by_verb[v].size() % 2) odd.push_back(v);
  }
  if (odd.size() % 2) throw StimulusError("build_lists: pairs cannot be split into two equal groups");
  rng.shuffle(odd);
  std::set<std::string> gets_ceil(odd.begin(), odd.begin() + static_cast<std::ptrdiff_t>(odd.size() / 2));
  std::vector<std::vector<std::size_t>> groups(2);
  for (const auto& v : verb_order) {
    auto idx = by_verb[v];
    rng.shuffle(idx);
    const std::size_t first = idx.size() / 2 + (gets_ceil.count(v) ? 1 : 0);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      groups[k < first ? 0 : 1].push_back(idx[k]);
      build.pair_group[pairs[idx[k]].pair_id] = k < first ? 1 : 2;
    }
  }

  for (int g = 0; g < 2; ++g) {
    auto members = groups[static_cast<std::size_t>(g)];
    std::sort(members.begin(), members.end());
    if (fillers.size() < members.size()) {
      throw StimulusError("build_lists: C3 infeasible, " + std::to_string(fillers.size()) +
                          " fillers for " + std::to_string(members.size()) + " critical items per list");
    }
    rng.shuffle(members);
    // Set A takes the active of the first half of members and the passive of
    // the rest; set B takes the complements.
    std::vector<CriticalItem> set_a, set_b;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& p = pairs[members[k]];
      const bool a_active = k < members.size() / 2;
      set_a.push_back(critical_item(p, a_active ? Voice::kActive : Voice::kPassive));
      set_b.push_back(critical_item(p, a_active ? Voice::kPassive : Voice::kActive));
    }
    for (const auto& it : set_a) build.items[it.item_id] = it;
    for (const auto& it : set_b) build.items[it.item_id] = it;

    const std::string gname = "g" + std::to_string(g + 1);
    std::vector<std::size_t> all_a(set_a.size());
    for (std::size_t i = 0; i < all_a.size(); ++i) all_a[i] = i;
    const auto order_a = detail::order_with_retries(set_a, {all_a}, rng, options, gname + " order 1");

    // Pair k sits at the same index in set_a and set_b.
    const std::size_t half = order_a.size() / 2;
    std::vector<std::size_t> first_b(order_a.begin() + static_cast<std::ptrdiff_t>(half), order_a.end());
    std::vector<std::size_t> second_b(order_a.begin(), order_a.begin() + static_cast<std::ptrdiff_t>(half));
    const auto order_b = detail::order_with_retries(set_b, {first_b, second_b}, rng, options, gname + " order 2");

    auto emit = [&](const std::vector<CriticalItem>& set, const std::vector<std::size_t>& order, int o) {
      // Attention checks always appear; the remaining slots are sampled.
      std::vector<const FillerItem*> checks, rest;
      for (const auto& f : fillers) (f.is_attention_check ? checks : rest).push_back(&f);
      std::vector<const FillerItem*> chosen = checks;
      rng.shuffle(rest);
      for (const auto* f : rest) {
        if (chosen.size() >= order.size()) break;
        chosen.push_back(f);
      }
      chosen.resize(std::min(chosen.size(), order.size()));
      rng.shuffle(chosen);

      // Units of (critical, filler); the reversed list reverses the units.
      std::vector<std::pair<std::string, std::string>> units;
      for (std::size_t i = 0; i < order.size(); ++i) units.emplace_back(set[order[i]].item_id, chosen[i]->id);
      for (bool reversed : {false, true}) {
        PresentationList list;
        list.group = g + 1;
        list.order = o;
        list.reversed = reversed;
        list.id = gname + "-o" + std::to_string(o) + (reversed ? "-rev" : "-fwd");
        auto seq = units;
        if (reversed) std::reverse(seq.begin(), seq.end());
        std::size_t pos = 0;
        for (const auto& [crit, fill] : seq) {
          list.entries.push_back({++pos, crit, false});
          list.entries.push_back({++pos, fill, true});
        }
        build.lists.push_back(std::move(list));
      }
    };
    emit(set_a, order_a, 1);
    emit(set_b, order_b, 2);
  }
  return build;
}

inline void write_list_csv(const PresentationList& list, std::ostream& out) {
  out << "position,item_id,kind\n";
  for (const auto& e : list.entries) {
    out << e.position << ',' << e.item_id << ',' << (e.is_filler ? "filler" : "critical") << '\n';
  }
}

}  // namespace passivekit

#endif  // PASSIVEKIT_STIMULI_HPP_
