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

#ifndef PASSIVEKIT_VOICE_HPP_
#define PASSIVEKIT_VOICE_HPP_

// Voice of a verb token, read off the dependency edges it governs:
//   PASSIVE  some child attaches with auxpass, nsubjpass or csubjpass
//   ACTIVE   otherwise, some child attaches with dobj or ccomp
//   OTHER    neither
// Passive evidence wins when both kinds are present.

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "passivekit/corpus.hpp"

namespace passivekit {

enum class VoiceLabel { kPassive, kActive, kOther };

inline std::string_view to_string(VoiceLabel label) {
  switch (label) {
    case VoiceLabel::kPassive: return "PASSIVE";
    case VoiceLabel::kActive: return "ACTIVE";
    case VoiceLabel::kOther: return "OTHER";
  }
  return "OTHER";
}

inline std::optional<VoiceLabel> parse_voice_label(std::string_view s) {
  const std::string u = text::to_upper(s);
  if (u == "PASSIVE") return VoiceLabel::kPassive;
  if (u == "ACTIVE") return VoiceLabel::kActive;
  if (u == "OTHER") return VoiceLabel::kOther;
  return std::nullopt;
}

// Maps relation labels from either the ClearNLP-style inventory (auxpass,
// nsubjpass, dobj) or Universal Dependencies (aux:pass, nsubj:pass, obj) onto
// one vocabulary.
inline std::string canonical_deprel(std::string_view label) {
  std::string l = text::to_lower(label);
  if (l == "aux:pass") return "auxpass";
  if (l == "nsubj:pass") return "nsubjpass";
  if (l == "csubj:pass") return "csubjpass";
  if (l == "obj") return "dobj";
  return l;
}

inline bool is_passive_evidence(std::string_view canonical) {
  return canonical == "auxpass" || canonical == "nsubjpass" || canonical == "csubjpass";
}

inline bool is_active_evidence(std::string_view canonical) {
  return canonical == "dobj" || canonical == "ccomp";
}

struct VoiceOccurrence {
  std::string sentence_id;
  int token_index = 0;
  std::string lemma;
  VoiceLabel label = VoiceLabel::kOther;
  std::optional<std::string> evidence;
  // Both passive and active edges were present; resolved as PASSIVE.
  bool priority_applied = false;
};

inline VoiceOccurrence classify_occurrence(const ParsedSentence& sentence, int verb_index) {
  if (!sentence.has_index(verb_index)) {
    throw std::out_of_range("classify_occurrence: token index " + std::to_string(verb_index) +
                            " out of range in sentence " + sentence.id);
  }
  const Token& verb = sentence.token(verb_index);
  if (!verb.is_verbal()) {
    throw std::invalid_argument("classify_occurrence: token " + std::to_string(verb_index) +
                                " in sentence " + sentence.id + " is not verbal (" + verb.upos +
                                ")");
  }
  VoiceOccurrence occ;
  occ.sentence_id = sentence.id;
  occ.token_index = verb_index;
  occ.lemma = text::to_lower(verb.lemma);

  std::optional<std::string> passive, active;
  for (const Token& t : sentence.tokens) {
    if (t.head != verb_index) continue;
    const std::string rel = canonical_deprel(t.deprel);
    if (!passive && is_passive_evidence(rel)) passive = rel;
    if (!active && is_active_evidence(rel)) active = rel;
  }
  if (passive) {
    occ.label = VoiceLabel::kPassive;
    occ.evidence = passive;
    occ.priority_applied = active.has_value();
  } else if (active) {
    occ.label = VoiceLabel::kActive;
    occ.evidence = active;
  }
  return occ;
}

// Classifies every verbal occurrence of `lemma` in one sentence.
inline std::vector<VoiceOccurrence> classify_sentence(const ParsedSentence& sentence,
                                                      std::string_view lemma) {
  std::vector<VoiceOccurrence> out;
  for (const Token& t : sentence.tokens) {
    if (lemma_matches(t, lemma)) out.push_back(classify_occurrence(sentence, t.index));
  }
  return out;
}

struct VoiceCounts {
  std::string lemma;
  std::size_t active = 0;
  std::size_t passive = 0;
  std::size_t other = 0;
  std::size_t priority_conflicts = 0;
  std::vector<VoiceOccurrence> occurrences;

  std::size_t total() const { return active + passive + other; }

  void add(VoiceOccurrence occ, bool keep_occurrence = true) {
    switch (occ.label) {
      case VoiceLabel::kPassive: ++passive; break;
      case VoiceLabel::kActive: ++active; break;
      case VoiceLabel::kOther: ++other; break;
    }
    if (occ.priority_applied) ++priority_conflicts;
    if (keep_occurrence) occurrences.push_back(std::move(occ));
  }

  bool same_counts(const VoiceCounts& o) const {
    return active == o.active && passive == o.passive && other == o.other;
  }
};

using VoiceCountTable = std::map<std::string, VoiceCounts>;

// One pass over the source for several lemmas at once.
template <SentenceSource Source>
VoiceCountTable count_voices(const Source& source, const std::vector<std::string>& lemmas,
                             bool keep_occurrences = true) {
  VoiceCountTable table;
  for (const auto& l : lemmas) {
    const std::string key = text::to_lower(l);
    table[key].lemma = key;
  }
  for_each_sentence(source, [&](const ParsedSentence& s) {
    for (const Token& t : s.tokens) {
      if (!t.is_verbal()) continue;
      auto it = table.find(text::to_lower(t.lemma));
      if (it == table.end()) continue;
      it->second.add(classify_occurrence(s, t.index), keep_occurrences);
    }
  });
  return table;
}

template <SentenceSource Source>
VoiceCountTable count_voices(const Source& source, std::initializer_list<std::string> lemmas,
                             bool keep_occurrences = true) {
  return count_voices(source, std::vector<std::string>(lemmas), keep_occurrences);
}

template <SentenceSource Source>
VoiceCounts count_voices(const Source& source, const std::string& lemma) {
  auto table = count_voices(source, std::vector<std::string>{lemma});
  return std::move(table.begin()->second);
}

inline void write_counts_report(const VoiceCountTable& table, std::ostream& out) {
  out << "lemma\tactive\tpassive\tother\n";
  for (const auto& [lemma, c] : table) {
    out << lemma << '\t' << c.active << '\t' << c.passive << '\t' << c.other << '\n';
  }
}

}  // namespace passivekit

#endif  // PASSIVEKIT_VOICE_HPP_
