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

#ifndef PASSIVEKIT_CORPUS_HPP_
#define PASSIVEKIT_CORPUS_HPP_

// Parsed-corpus data model and streaming I/O for the 10-column dependency
// format (ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL DEPS MISC), one token per
// line, blank line between sentences, `# sent_id = ` and `# text = ` comments.

#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <ranges>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "passivekit/util/text.hpp"

namespace passivekit {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  int index = 0;
  std::string surface;
  std::string lemma;
  std::string upos;
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;
  std::string deprel;
  std::string deps = "_";
  std::string misc = "_";

  bool is_verbal() const { return upos == "VERB" || upos == "AUX"; }

  friend bool operator==(const Token&, const Token&) = default;
};

struct ParsedSentence {
  std::string id;
  std::vector<Token> tokens;
  std::string raw_text;
  // Comment lines other than sent_id/text, kept verbatim (without "# ").
  std::vector<std::string> comments;

  const Token& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
  Token& token(int index) { return tokens.at(static_cast<std::size_t>(index - 1)); }
  bool has_index(int index) const {
    return index >= 1 && static_cast<std::size_t>(index) <= tokens.size();
  }

  friend bool operator==(const ParsedSentence&, const ParsedSentence&) = default;
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based line of the offending block or row; 0 if n/a
  std::string sentence_id;
  std::string message;
};

inline std::ostream& operator<<(std::ostream& os, const Diagnostic& d) {
  os << "line " << d.line;
  if (!d.sentence_id.empty()) os << " [" << d.sentence_id << "]";
  return os << ": " << d.message;
}

// Returns an error message if the sentence violates the token/tree invariants.
inline std::optional<std::string> validate_sentence(const ParsedSentence& s) {
  if (s.tokens.empty()) return "sentence has no tokens";
  const int n = static_cast<int>(s.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = s.tokens[static_cast<std::size_t>(i)];
    if (t.index != i + 1) {
      return "non-contiguous token index " + std::to_string(t.index) + " at position " +
             std::to_string(i + 1);
    }
    if (t.head < 0 || t.head > n) return "head out of range for token " + std::to_string(t.index);
    if (t.head == t.index) return "token " + std::to_string(t.index) + " is its own head";
    if (t.deprel.empty() || t.deprel == "_") return "empty deprel for token " + std::to_string(t.index);
    if (t.head == 0) ++roots;
  }
  if (roots != 1) return "expected exactly one root, found " + std::to_string(roots);
  // Every chain of heads must reach the root within n steps.
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != 0) {
      cur = s.tokens[static_cast<std::size_t>(cur - 1)].head;
      if (++steps > n) return "cycle through token " + std::to_string(i);
    }
  }
  return std::nullopt;
}

namespace detail {

struct RawBlock {
  std::size_t first_line = 0;
  std::streampos offset = -1;
  std::vector<std::string> lines;
};

// Parses one blank-line-delimited block. `ordinal` is the 1-based block number
// used for a fallback id when the block carries no sent_id.
inline std::optional<ParsedSentence> parse_block(const RawBlock& block, std::size_t ordinal,
                                                 Diagnostic& error) {
  ParsedSentence s;
  bool have_text = false;
  std::size_t line_no = block.first_line;
  error = {};
  auto fail = [&](std::size_t line, std::string msg) {
    error.line = line;
    error.sentence_id = s.id;
    error.message = std::move(msg);
    return std::nullopt;
  };
  for (const std::string& line : block.lines) {
    std::string_view v(line);
    if (!v.empty() && v.front() == '#') {
      std::string_view body = text::trim(v.substr(1));
      if (body.rfind("sent_id", 0) == 0 && body.find('=') != std::string_view::npos) {
        s.id = std::string(text::trim(body.substr(body.find('=') + 1)));
      } else if (body.rfind("text", 0) == 0 && body.size() > 4 &&
                 (body[4] == ' ' || body[4] == '=')) {
        const auto eq = body.find('=');
        if (eq != std::string_view::npos) {
          s.raw_text = std::string(text::trim(body.substr(eq + 1)));
          have_text = true;
        } else {
          s.comments.emplace_back(body);
        }
      } else {
        s.comments.emplace_back(body);
      }
      ++line_no;
      continue;
    }
    auto fields = text::split(v, '\t');
    if (fields.size() != 10) {
      return fail(line_no, "expected 10 tab-separated fields, found " +
                               std::to_string(fields.size()));
    }
    // Multiword-token ranges and empty nodes are not syntactic words.
    if (fields[0].find('-') != std::string_view::npos ||
        fields[0].find('.') != std::string_view::npos) {
      ++line_no;
      continue;
    }
    Token t;
    auto idx = text::parse_int(fields[0]);
    auto head = text::parse_int(fields[6]);
    if (!idx) return fail(line_no, "non-numeric token index '" + std::string(fields[0]) + "'");
    if (!head) return fail(line_no, "non-numeric head '" + std::string(fields[6]) + "'");
    t.index = static_cast<int>(*idx);
    t.surface = fields[1];
    t.lemma = fields[2];
    t.upos = fields[3];
    t.xpos = fields[4];
    t.feats = fields[5];
    t.head = static_cast<int>(*head);
    t.deprel = fields[7];
    t.deps = fields[8];
    t.misc = fields[9];
    s.tokens.push_back(std::move(t));
    ++line_no;
  }
  if (s.id.empty()) s.id = "s" + std::to_string(ordinal);
  if (auto problem = validate_sentence(s)) return fail(block.first_line, *problem);
  if (!have_text) {
    std::vector<std::string> words;
    for (const Token& t : s.tokens) words.push_back(t.surface);
    s.raw_text = text::join(words, " ");
  }
  return s;
}

}  // namespace detail

inline std::string to_conllu(const ParsedSentence& s) {
  std::ostringstream os;
  os << "# sent_id = " << s.id << '\n';
  os << "# text = " << s.raw_text << '\n';
  for (const auto& c : s.comments) os << "# " << c << '\n';
  for (const Token& t : s.tokens) {
    os << t.index << '\t' << t.surface << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos
       << '\t' << t.feats << '\t' << t.head << '\t' << t.deprel << '\t' << t.deps << '\t'
       << t.misc << '\n';
  }
  os << '\n';
  return os.str();
}

enum class ReadMode { kStreaming, kIndexed };

// Single-pass reader. Memory use is bounded by one sentence block. Malformed
// blocks are skipped and reported through diagnostics().
class CorpusReader {
 public:
  explicit CorpusReader(const std::string& path) : owned_(std::make_unique<std::ifstream>(path)) {
    if (!*owned_) throw CorpusError("cannot open corpus file: " + path);
    in_ = owned_.get();
  }
  explicit CorpusReader(std::istream& in) : in_(&in) {}

  std::optional<ParsedSentence> next() {
    detail::RawBlock block;
    while (read_block(block)) {
      ++ordinal_;
      Diagnostic err;
      if (auto s = detail::parse_block(block, ordinal_, err)) return s;
      diagnostics_.push_back(std::move(err));
    }
    if (in_->bad()) throw CorpusError("I/O failure while reading corpus");
    return std::nullopt;
  }

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  class iterator {
   public:
    using value_type = ParsedSentence;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    explicit iterator(CorpusReader* r) : reader_(r) { ++*this; }
    const ParsedSentence& operator*() const { return *current_; }
    const ParsedSentence* operator->() const { return &*current_; }
    iterator& operator++() {
      current_ = reader_->next();
      if (!current_) reader_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& a, const iterator& b) { return a.reader_ == b.reader_; }

   private:
    CorpusReader* reader_ = nullptr;
    std::optional<ParsedSentence> current_;
  };
  iterator begin() { return iterator(this); }
  iterator end() { return iterator(); }

 private:
  friend class IndexedCorpus;

  bool read_block(detail::RawBlock& block) {
    block.lines.clear();
    std::string line;
    while (true) {
      const std::streampos pos = track_offsets_ ? in_->tellg() : std::streampos(-1);
      if (!std::getline(*in_, line)) break;
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        if (!block.lines.empty()) return true;
        continue;
      }
      if (block.lines.empty()) {
        block.first_line = line_;
        block.offset = pos;
      }
      block.lines.push_back(std::move(line));
    }
    return !block.lines.empty();
  }

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_ = nullptr;
  std::size_t line_ = 0;
  std::size_t ordinal_ = 0;
  bool track_offsets_ = false;
  std::vector<Diagnostic> diagnostics_;
};

// Random-access view over a corpus file: one scan records where each
// well-formed sentence starts; sentences are re-parsed on access.
class IndexedCorpus {
 public:
  explicit IndexedCorpus(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw CorpusError("cannot open corpus file: " + path_);
    CorpusReader reader(in);
    reader.track_offsets_ = true;
    detail::RawBlock block;
    while (reader.read_block(block)) {
      ++reader.ordinal_;
      Diagnostic err;
      if (detail::parse_block(block, reader.ordinal_, err)) {
        entries_.push_back({block.offset, reader.ordinal_, block.first_line});
      } else {
        diagnostics_.push_back(std::move(err));
      }
    }
    if (in.bad()) throw CorpusError("I/O failure while indexing " + path_);
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  ParsedSentence at(std::size_t i) const {
    const Entry& e = entries_.at(i);
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw CorpusError("cannot reopen corpus file: " + path_);
    in.seekg(e.offset);
    CorpusReader reader(in);
    reader.line_ = e.first_line - 1;
    detail::RawBlock block;
    Diagnostic err;
    std::optional<ParsedSentence> s;
    if (reader.read_block(block)) s = detail::parse_block(block, e.ordinal, err);
    if (!s) throw CorpusError("index out of sync with " + path_);
    return std::move(*s);
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < size(); ++i) fn(at(i));
  }

 private:
  struct Entry {
    std::streampos offset;
    std::size_t ordinal;
    std::size_t first_line;
  };
  std::string path_;
  std::vector<Entry> entries_;
  std::vector<Diagnostic> diagnostics_;
};

// A corpus file consumed by streaming; every for_each call re-reads the file,
// so multi-pass algorithms never hold the corpus in memory.
class FileCorpus {
 public:
  explicit FileCorpus(std::string path) : path_(std::move(path)) {
    std::ifstream probe(path_);
    if (!probe) throw CorpusError("cannot open corpus file: " + path_);
  }

  const std::string& path() const { return path_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    CorpusReader reader(path_);
    while (auto s = reader.next()) fn(*s);
    diagnostics_ = reader.diagnostics();
  }

 private:
  std::string path_;
  mutable std::vector<Diagnostic> diagnostics_;
};

// Anything that can replay its sentences in order: a range of ParsedSentence
// (e.g. std::vector) or a type with a const for_each(fn) member.
template <typename S>
concept SentenceRange =
    std::ranges::input_range<S> &&
    std::is_same_v<std::remove_cvref_t<std::ranges::range_value_t<S>>, ParsedSentence>;

template <typename S>
concept SentenceSource =
    SentenceRange<S> ||
    requires(const S& s, void (*fn)(const ParsedSentence&)) { s.for_each(fn); };

template <SentenceSource Source, typename Fn>
void for_each_sentence(const Source& source, Fn&& fn) {
  if constexpr (SentenceRange<Source>) {
    for (const ParsedSentence& s : source) fn(s);
  } else {
    source.for_each(fn);
  }
}

// Reads a whole file. Streaming mode parses once; indexed mode goes through
// the offset index. Both yield the same sequence and diagnostics.
inline std::vector<ParsedSentence> read_parsed_corpus(const std::string& path, ReadMode mode,
                                                      std::vector<Diagnostic>* diagnostics = nullptr) {
  std::vector<ParsedSentence> out;
  if (mode == ReadMode::kStreaming) {
    CorpusReader reader(path);
    while (auto s = reader.next()) out.push_back(std::move(*s));
    if (diagnostics) *diagnostics = reader.diagnostics();
  } else {
    IndexedCorpus index(path);
    out.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) out.push_back(index.at(i));
    if (diagnostics) *diagnostics = index.diagnostics();
  }
  return out;
}

template <SentenceSource Source>
std::size_t write_conllu(const Source& source, std::ostream& out) {
  std::size_t n = 0;
  for_each_sentence(source, [&](const ParsedSentence& s) {
    out << to_conllu(s);
    ++n;
  });
  if (!out) throw CorpusError("I/O failure while writing corpus");
  return n;
}

template <SentenceSource Source>
std::size_t write_conllu(const Source& source, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot open for writing: " + path);
  return write_conllu(source, out);
}

// One raw_text per line. Embedded CR/LF become a single space each and a
// warning is recorded for the sentence.
template <SentenceSource Source>
std::size_t write_plaintext(const Source& source, std::ostream& out,
                            std::vector<Diagnostic>* warnings = nullptr) {
  std::size_t n = 0;
  for_each_sentence(source, [&](const ParsedSentence& s) {
    ++n;
    if (s.raw_text.find_first_of("\r\n") == std::string::npos) {
      out << s.raw_text << '\n';
      return;
    }
    std::string line;
    line.reserve(s.raw_text.size());
    for (std::size_t i = 0; i < s.raw_text.size(); ++i) {
      const char c = s.raw_text[i];
      if (c == '\r' && i + 1 < s.raw_text.size() && s.raw_text[i + 1] == '\n') continue;
      line += (c == '\n' || c == '\r') ? ' ' : c;
    }
    out << line << '\n';
    if (warnings) warnings->push_back({0, s.id, "newline in raw_text replaced by space"});
  });
  if (!out) throw CorpusError("I/O failure while writing plaintext");
  return n;
}

template <SentenceSource Source>
std::size_t write_plaintext(const Source& source, const std::string& path,
                            std::vector<Diagnostic>* warnings = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot open for writing: " + path);
  return write_plaintext(source, out, warnings);
}

struct OccurrenceRef {
  std::string sentence_id;
  int token_index = 0;
  friend bool operator==(const OccurrenceRef&, const OccurrenceRef&) = default;
};

// lemma -> verbal occurrences in corpus order.
struct LemmaIndex {
  std::size_t sentence_count = 0;
  std::map<std::string, std::vector<OccurrenceRef>> occurrences;

  const std::vector<OccurrenceRef>& of(const std::string& lemma) const {
    static const std::vector<OccurrenceRef> kEmpty;
    auto it = occurrences.find(lemma);
    return it == occurrences.end() ? kEmpty : it->second;
  }
};

inline bool lemma_matches(const Token& t, std::string_view lemma) {
  return t.is_verbal() && text::to_lower(t.lemma) == lemma;
}

template <SentenceSource Source>
LemmaIndex build_lemma_index(const Source& source, const std::set<std::string>& lemmas) {
  if (lemmas.empty()) throw std::invalid_argument("build_lemma_index: no lemmas requested");
  LemmaIndex index;
  for (const auto& l : lemmas) index.occurrences[text::to_lower(l)];
  for_each_sentence(source, [&](const ParsedSentence& s) {
    ++index.sentence_count;
    for (const Token& t : s.tokens) {
      if (!t.is_verbal()) continue;
      auto it = index.occurrences.find(text::to_lower(t.lemma));
      if (it != index.occurrences.end()) it->second.push_back({s.id, t.index});
    }
  });
  return index;
}

}  // namespace passivekit

#endif  // PASSIVEKIT_CORPUS_HPP_
