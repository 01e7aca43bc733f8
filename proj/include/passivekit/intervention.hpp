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

#ifndef PASSIVEKIT_INTERVENTION_HPP_
#define PASSIVEKIT_INTERVENTION_HPP_

// Counterfactual corpus edits.
//
// Frequency matching: the mutating verb keeps exactly as many passive
// occurrences as the target verb has; every sentence holding one of its other
// passive occurrences is dropped. Nothing else is touched.
//
// Verb transplantation: a fraction of the sentences in which the target verb
// occurs outside the passive get the target's surface forms rewritten to the
// mutating verb's forms. No sentence is added or removed and passive
// occurrences are never rewritten.
//
// Both run in two passes over the source (collect, then rewrite), so a
// file-backed source is streamed twice and never held in memory.

#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "passivekit/corpus.hpp"
#include "passivekit/util/random.hpp"
#include "passivekit/util/text.hpp"
#include "passivekit/voice.hpp"

namespace passivekit {

class InterventionError : public std::runtime_error {
 public:
  explicit InterventionError(const std::string& what, std::vector<std::string> missing = {})
      : std::runtime_error(what), missing_forms(std::move(missing)) {}
  std::vector<std::string> missing_forms;
};

struct FrequencyInterventionSpec {
  std::string mutating_lemma;
  std::string target_lemma;
  std::uint64_t seed = 0;
  std::vector<std::string> watch_list;
};

struct SwapInterventionSpec {
  std::string mutating_lemma;
  std::string target_lemma;
  double fraction = 0.30;
  // Lower-cased surface form of the target verb -> replacement form.
  std::map<std::string, std::string> inflection_map;
  std::uint64_t seed = 0;
  std::vector<std::string> watch_list;
};

using InterventionSpec = std::variant<FrequencyInterventionSpec, SwapInterventionSpec>;

struct InterventionReport {
  std::string kind;
  std::string mutating_lemma;
  std::string target_lemma;
  std::uint64_t seed = 0;
  double fraction = 0.0;
  std::size_t sentences_in = 0;
  std::size_t sentences_out = 0;
  std::size_t sentences_removed = 0;
  std::size_t sentences_altered = 0;
  std::size_t swap_candidates = 0;
  std::size_t passives_kept = 0;
  std::size_t both_lemma_sentences = 0;
  VoiceCountTable before;
  VoiceCountTable after;
  std::vector<std::string> changed_sentence_ids;
  std::vector<Diagnostic> diagnostics;

  // Machine-readable "key<TAB>value" lines.
  void write_key_values(std::ostream& out) const {
    out << "kind\t" << kind << '\n';
    out << "mutating_lemma\t" << mutating_lemma << '\n';
    out << "target_lemma\t" << target_lemma << '\n';
    out << "rng\t" << kRngAlgorithm << '\n';
    out << "seed\t" << seed << '\n';
    if (kind == "swap") out << "fraction\t" << fraction << '\n';
    out << "sentences_in\t" << sentences_in << '\n';
    out << "sentences_out\t" << sentences_out << '\n';
    out << "sentences_removed\t" << sentences_removed << '\n';
    out << "sentences_altered\t" << sentences_altered << '\n';
    if (kind == "swap") out << "swap_candidates\t" << swap_candidates << '\n';
    if (kind == "frequency") out << "passives_kept\t" << passives_kept << '\n';
    out << "both_lemma_sentences\t" << both_lemma_sentences << '\n';
    for (const auto& [phase, table] : {std::pair{"before", &before}, std::pair{"after", &after}}) {
      for (const auto& [lemma, c] : *table) {
        out << phase << '.' << lemma << ".active\t" << c.active << '\n';
        out << phase << '.' << lemma << ".passive\t" << c.passive << '\n';
        out << phase << '.' << lemma << ".other\t" << c.other << '\n';
      }
    }
    for (const auto& id : changed_sentence_ids) out << "changed\t" << id << '\n';
  }

  void write_summary(std::ostream& out) const {
    out << (kind == "frequency" ? "Passive-frequency matching" : "Verb transplantation") << ": "
        << mutating_lemma << " <- " << target_lemma << " (seed " << seed << ")\n";
    out << "  sentences: " << sentences_in << " in, " << sentences_out << " out, "
        << sentences_removed << " removed, " << sentences_altered << " altered\n";
    out << "  lemma            active(before->after)  passive(before->after)  other(before->after)\n";
    for (const auto& [lemma, b] : before) {
      const auto& a = after.at(lemma);
      out << "  " << lemma << std::string(lemma.size() < 16 ? 16 - lemma.size() : 1, ' ')
          << b.active << " -> " << a.active << "\t\t" << b.passive << " -> " << a.passive << "\t\t"
          << b.other << " -> " << a.other << '\n';
    }
    if (!diagnostics.empty()) out << "  diagnostics: " << diagnostics.size() << '\n';
  }
};

namespace detail {

inline std::vector<std::string> tracked_lemmas(const std::string& mutating,
                                               const std::string& target,
                                               const std::vector<std::string>& watch) {
  std::set<std::string> all{text::to_lower(mutating), text::to_lower(target)};
  for (const auto& w : watch) all.insert(text::to_lower(w));
  return {all.begin(), all.end()};
}

inline void check_lemmas(const std::string& mutating, const std::string& target) {
  if (mutating.empty() || target.empty()) {
    throw InterventionError("intervention spec needs both a mutating and a target lemma");
  }
  if (text::to_lower(mutating) == text::to_lower(target)) {
    throw InterventionError("mutating and target lemma must differ");
  }
}

inline void count_into(VoiceCountTable& table, const ParsedSentence& s) {
  for (const Token& t : s.tokens) {
    if (!t.is_verbal()) continue;
    auto it = table.find(text::to_lower(t.lemma));
    if (it != table.end()) it->second.add(classify_occurrence(s, t.index), false);
  }
}

inline VoiceCountTable empty_table(const std::vector<std::string>& lemmas) {
  VoiceCountTable table;
  for (const auto& l : lemmas) table[l].lemma = l;
  return table;
}

// Character offsets of each token surface inside raw_text, matched left to
// right with only whitespace between tokens. nullopt if the text and tokens
// disagree.
inline std::optional<std::vector<std::size_t>> align_tokens(const ParsedSentence& s) {
  std::vector<std::size_t> offsets;
  offsets.reserve(s.tokens.size());
  std::size_t cursor = 0;
  for (const Token& t : s.tokens) {
    while (cursor < s.raw_text.size() &&
           std::isspace(static_cast<unsigned char>(s.raw_text[cursor]))) {
      ++cursor;
    }
    if (s.raw_text.compare(cursor, t.surface.size(), t.surface) != 0) return std::nullopt;
    offsets.push_back(cursor);
    cursor += t.surface.size();
  }
  return offsets;
}

}  // namespace detail

template <SentenceSource Source, typename Sink>
InterventionReport apply_frequency_intervention(const Source& source,
                                                const FrequencyInterventionSpec& spec, Sink&& sink) {
  detail::check_lemmas(spec.mutating_lemma, spec.target_lemma);
  const std::string mutating = text::to_lower(spec.mutating_lemma);
  const std::string target = text::to_lower(spec.target_lemma);
  const auto lemmas = detail::tracked_lemmas(mutating, target, spec.watch_list);

  InterventionReport report;
  report.kind = "frequency";
  report.mutating_lemma = mutating;
  report.target_lemma = target;
  report.seed = spec.seed;
  report.before = detail::empty_table(lemmas);
  report.after = detail::empty_table(lemmas);

  // Pass 1: counts and the sentences that carry passive mutating occurrences.
  struct Holder {
    std::size_t ordinal;
    std::size_t passives;
  };
  std::vector<Holder> holders;
  std::size_t ordinal = 0;
  for_each_sentence(source, [&](const ParsedSentence& s) {
    detail::count_into(report.before, s);
    std::size_t passives = 0;
    for (const auto& occ : classify_sentence(s, mutating)) {
      if (occ.label == VoiceLabel::kPassive) ++passives;
    }
    if (passives > 0) holders.push_back({ordinal, passives});
    ++ordinal;
  });
  report.sentences_in = ordinal;

  const auto& mut_before = report.before.at(mutating);
  const auto& tgt_before = report.before.at(target);
  if (mut_before.total() == 0) throw InterventionError("mutating lemma '" + mutating + "' not found in corpus");
  if (tgt_before.total() == 0) throw InterventionError("target lemma '" + target + "' not found in corpus");
  const std::size_t keep = tgt_before.passive;
  if (keep > mut_before.passive) {
    throw InterventionError("target '" + target + "' has " + std::to_string(keep) +
                            " passive occurrences but mutating '" + mutating + "' has only " +
                            std::to_string(mut_before.passive));
  }

  // Survivors: walk the holders in a seeded random order, keeping a sentence
  // while it fits in the budget. With one passive per sentence this is a
  // uniform random subset of the passive occurrences.
  Rng rng(spec.seed);
  std::vector<std::size_t> order(holders.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t kept = 0;
  std::set<std::size_t> drop;
  for (std::size_t i : order) {
    if (kept + holders[i].passives <= keep) {
      kept += holders[i].passives;
    } else {
      drop.insert(holders[i].ordinal);
    }
  }
  if (kept != keep) {
    throw InterventionError("cannot keep exactly " + std::to_string(keep) +
                            " passive occurrences of '" + mutating +
                            "': sentences with several passive occurrences do not add up");
  }
  report.passives_kept = kept;

  // Pass 2.
  ordinal = 0;
  for_each_sentence(source, [&](const ParsedSentence& s) {
    if (drop.count(ordinal++)) {
      report.changed_sentence_ids.push_back(s.id);
      return;
    }
    detail::count_into(report.after, s);
    ++report.sentences_out;
    sink(s);
  });
  report.sentences_removed = drop.size();
  return report;
}

template <SentenceSource Source, typename Sink>
InterventionReport apply_swap_intervention(const Source& source, const SwapInterventionSpec& spec,
                                           Sink&& sink) {
  detail::check_lemmas(spec.mutating_lemma, spec.target_lemma);
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
    throw InterventionError("swap fraction must lie in (0, 1]");
  }
  const std::string mutating = text::to_lower(spec.mutating_lemma);
  const std::string target = text::to_lower(spec.target_lemma);
  const auto lemmas = detail::tracked_lemmas(mutating, target, spec.watch_list);
  std::map<std::string, std::string> forms;
  for (const auto& [k, v] : spec.inflection_map) forms[text::to_lower(k)] = v;

  InterventionReport report;
  report.kind = "swap";
  report.mutating_lemma = mutating;
  report.target_lemma = target;
  report.seed = spec.seed;
  report.fraction = spec.fraction;
  report.before = detail::empty_table(lemmas);
  report.after = detail::empty_table(lemmas);

  // Pass 1: candidate sentences hold at least one non-passive occurrence of
  // the target whose surface can be located in raw_text.
  std::vector<std::size_t> candidates;
  std::set<std::string> missing;
  std::size_t ordinal = 0;
  for_each_sentence(source, [&](const ParsedSentence& s) {
    detail::count_into(report.before, s);
    bool donor = false;
    for (const auto& occ : classify_sentence(s, target)) {
      if (occ.label == VoiceLabel::kPassive) continue;
      donor = true;
      const std::string surface = text::to_lower(s.token(occ.token_index).surface);
      if (!forms.count(surface)) missing.insert(surface);
    }
    if (donor) {
      if (detail::align_tokens(s)) {
        candidates.push_back(ordinal);
      } else {
        report.diagnostics.push_back({0, s.id, "raw_text does not align with tokens; not a swap candidate"});
      }
    }
    ++ordinal;
  });
  report.sentences_in = ordinal;
  if (!missing.empty()) {
    std::vector<std::string> list(missing.begin(), missing.end());
    throw InterventionError("inflection map is missing forms of '" + target + "': " +
                                text::join(list, ", "),
                            list);
  }
  if (report.before.at(mutating).total() == 0) {
    throw InterventionError("mutating lemma '" + mutating + "' not found in corpus");
  }
  if (report.before.at(target).total() == 0) {
    throw InterventionError("target lemma '" + target + "' not found in corpus");
  }
  report.swap_candidates = candidates.size();

  // floor(), with a small tolerance so 0.3 * 10 is 3 and not 2.
  const auto n_select = static_cast<std::size_t>(
      std::floor(spec.fraction * static_cast<double>(candidates.size()) + 1e-9));
  Rng rng(spec.seed);
  std::set<std::size_t> selected;
  for (std::size_t i : rng.sample_indices(candidates.size(), n_select)) selected.insert(candidates[i]);

  // Pass 2.
  ordinal = 0;
  for_each_sentence(source, [&](const ParsedSentence& s) {
    if (!selected.count(ordinal++)) {
      detail::count_into(report.after, s);
      ++report.sentences_out;
      sink(s);
      return;
    }
    ParsedSentence out = s;
    const auto offsets = *detail::align_tokens(s);
    bool had_mutating = false;
    for (const Token& t : s.tokens) had_mutating |= lemma_matches(t, mutating);
    if (had_mutating) ++report.both_lemma_sentences;

    std::string raw;
    std::size_t copied = 0;
    for (const auto& occ : classify_sentence(s, target)) {
      if (occ.label == VoiceLabel::kPassive) continue;
      Token& tok = out.token(occ.token_index);
      const std::string replacement = text::mirror_case(tok.surface, forms.at(text::to_lower(tok.surface)));
      const std::size_t at = offsets[static_cast<std::size_t>(occ.token_index - 1)];
      raw.append(s.raw_text, copied, at - copied);
      raw += replacement;
      copied = at + tok.surface.size();
      tok.surface = replacement;
      tok.lemma = mutating;
    }
    raw.append(s.raw_text, copied, std::string::npos);
    out.raw_text = std::move(raw);

    report.changed_sentence_ids.push_back(out.id);
    ++report.sentences_altered;
    detail::count_into(report.after, out);
    ++report.sentences_out;
    sink(out);
  });
  return report;
}

// In-memory conveniences.
template <SentenceSource Source>
std::pair<std::vector<ParsedSentence>, InterventionReport> apply_frequency_intervention(
    const Source& source, const FrequencyInterventionSpec& spec) {
  std::vector<ParsedSentence> out;
  auto report = apply_frequency_intervention(source, spec, [&](const ParsedSentence& s) { out.push_back(s); });
  return {std::move(out), std::move(report)};
}

template <SentenceSource Source>
std::pair<std::vector<ParsedSentence>, InterventionReport> apply_swap_intervention(
    const Source& source, const SwapInterventionSpec& spec) {
  std::vector<ParsedSentence> out;
  auto report = apply_swap_intervention(source, spec, [&](const ParsedSentence& s) { out.push_back(s); });
  return {std::move(out), std::move(report)};
}

// Spec files are JSON objects:
//   {"type": "frequency", "mutating": "drop", "target": "last", "seed": 7,
//    "rng": "mt19937_64", "watch": ["push", "wash"]}
//   {"type": "swap", "mutating": "last", "target": "drop", "fraction": 0.3,
//    "seed": 7, "inflections": {"drop": "last", "dropped": "lasted", ...}}
inline InterventionSpec parse_intervention_spec(const nlohmann::json& j) {
  std::vector<std::string> problems;
  if (!j.is_object()) throw InterventionError("intervention spec must be a JSON object");
  const std::string type = j.value("type", "");
  const std::string mutating = j.value("mutating", "");
  const std::string target = j.value("target", "");
  if (mutating.empty()) problems.push_back("missing 'mutating'");
  if (target.empty()) problems.push_back("missing 'target'");
  if (!mutating.empty() && text::to_lower(mutating) == text::to_lower(target)) {
    problems.push_back("'mutating' and 'target' must differ");
  }
  if (!j.contains("seed") || !j["seed"].is_number_integer()) problems.push_back("missing integer 'seed'");
  if (j.contains("rng") && j["rng"] != std::string(kRngAlgorithm)) {
    problems.push_back("unsupported rng '" + j["rng"].dump() + "'");
  }
  std::vector<std::string> watch;
  if (j.contains("watch")) {
    if (!j["watch"].is_array()) problems.push_back("'watch' must be an array of lemmas");
    else for (const auto& w : j["watch"]) watch.push_back(w.get<std::string>());
  }
  const std::uint64_t seed = j.contains("seed") && j["seed"].is_number_integer() ? j["seed"].get<std::uint64_t>() : 0;

  if (type == "frequency") {
    if (!problems.empty()) throw InterventionError("invalid frequency spec: " + text::join(problems, "; "));
    return FrequencyInterventionSpec{mutating, target, seed, watch};
  }
  if (type == "swap") {
    SwapInterventionSpec spec{mutating, target, j.value("fraction", 0.30), {}, seed, watch};
    if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) problems.push_back("'fraction' must lie in (0, 1]");
    if (!j.contains("inflections") || !j["inflections"].is_object() || j["inflections"].empty()) {
      problems.push_back("missing 'inflections' map");
    } else {
      for (const auto& [k, v] : j["inflections"].items()) spec.inflection_map[text::to_lower(k)] = v.get<std::string>();
    }
    if (!problems.empty()) throw InterventionError("invalid swap spec: " + text::join(problems, "; "));
    return spec;
  }
  problems.insert(problems.begin(), "'type' must be \"frequency\" or \"swap\"");
  throw InterventionError("invalid intervention spec: " + text::join(problems, "; "));
}

inline nlohmann::json to_json(const InterventionSpec& spec) {
  return std::visit(
      [](const auto& s) {
        nlohmann::json j;
        using T = std::decay_t<decltype(s)>;
        j["type"] = std::is_same_v<T, FrequencyInterventionSpec> ? "frequency" : "swap";
        j["mutating"] = s.mutating_lemma;
        j["target"] = s.target_lemma;
        j["seed"] = s.seed;
        j["rng"] = std::string(kRngAlgorithm);
        j["watch"] = s.watch_list;
        if constexpr (std::is_same_v<T, SwapInterventionSpec>) {
          j["fraction"] = s.fraction;
          j["inflections"] = s.inflection_map;
        }
        return j;
      },
      spec);
}

}  // namespace passivekit

#endif  // PASSIVEKIT_INTERVENTION_HPP_
