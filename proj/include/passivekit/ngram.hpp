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

#ifndef PASSIVEKIT_NGRAM_HPP_
#define PASSIVEKIT_NGRAM_HPP_

// Interpolated Kneser-Ney n-gram model with one absolute discount D.
//
//   p_k(w | h) = max(c_k(h w) - D, 0) / c_k(h .)
//              + D * N1+(h .) / c_k(h .) * p_{k-1}(w | h')
//
// c_n are raw counts; c_k for k < n are continuation counts N1+(. h w). The
// recursion ends in the uniform distribution over the vocabulary (all seen
// words, </s> and <unk>). A context never seen at level k falls through to
// k-1. Sentences are padded with n-1 <s> on the left and one </s>.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <fstream>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "passivekit/util/text.hpp"

namespace passivekit {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

// Lower-cases and splits on whitespace; punctuation becomes its own token
// except apostrophes and hyphens between word characters ("don't", "x-ray").
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (std::ispunct(u)) {
      const bool joiner = (c == '\'' || c == '-') && !cur.empty() && i + 1 < s.size() &&
                          text::is_word_char(s[i + 1]);
      if (joiner) {
        cur += c;
      } else {
        flush();
        out.emplace_back(1, c);
      }
    } else {
      cur += static_cast<char>(std::tolower(u));
    }
  }
  flush();
  return out;
}

class NGramModel {
 public:
  using WordId = std::uint32_t;

  static NGramModel train(std::istream& in, int order, double discount) {
    if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
    if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must lie in (0, 1]");
    NGramModel m;
    m.order_ = order;
    m.discount_ = discount;
    m.intern(std::string(kUnk));
    m.intern(std::string(kBos));
    m.intern(std::string(kEos));

    // Raw counts of highest-order n-grams.
    std::unordered_map<std::string, std::uint64_t> top;
    std::string line;
    std::size_t sentences = 0;
    std::vector<WordId> padded;
    while (std::getline(in, line)) {
      const auto words = tokenize(line);
      if (words.empty()) continue;
      ++sentences;
      padded.assign(static_cast<std::size_t>(order - 1), kBosId);
      for (const auto& w : words) padded.push_back(m.intern(w));
      padded.push_back(kEosId);
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
        ++top[key(std::span(padded).subspan(i + 1 - static_cast<std::size_t>(order), static_cast<std::size_t>(order)))];
      }
    }
    if (sentences == 0) throw std::invalid_argument("cannot train an n-gram model on an empty corpus");
    m.sentences_ = sentences;

    m.levels_.resize(static_cast<std::size_t>(order) + 1);
    std::unordered_map<std::string, std::uint64_t> counts = std::move(top);
    for (int k = order; k >= 1; --k) {
      auto& level = m.levels_[static_cast<std::size_t>(k)];
      std::unordered_map<std::string, std::uint64_t> lower;
      for (const auto& [gram, c] : counts) {
        const auto ids = unkey(gram);
        const std::string ctx = key(std::span(ids).first(ids.size() - 1));
        auto& st = level[ctx];
        st.followers[ids.back()] += c;
        st.total += c;
        if (k > 1) ++lower[key(std::span(ids).subspan(1))];
      }
      for (auto& [ctx, st] : level) st.types = st.followers.size();
      counts = std::move(lower);
    }
    return m;
  }

  static NGramModel train_file(const std::string& path, int order, double discount) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open training text: " + path);
    return train(in, order, discount);
  }

  int order() const { return order_; }
  double discount() const { return discount_; }
  std::size_t training_sentences() const { return sentences_; }

  // Predictable vocabulary: every word type seen, </s> and <unk>.
  std::size_t vocab_size() const { return words_.size() - 1; }

  std::vector<std::string> vocabulary() const {
    std::vector<std::string> v;
    for (WordId i = 0; i < words_.size(); ++i) {
      if (i != kBosId) v.push_back(words_[i]);
    }
    return v;
  }

  WordId id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    return it == ids_.end() ? kUnkId : it->second;
  }

  // P(word | history). `history` is the list of preceding words of the
  // sentence (no <s> markers); only the last order-1 are used.
  double prob(std::span<const std::string> history, std::string_view word) const {
    std::vector<WordId> ctx = context_ids(history);
    return prob_ids(ctx, id(word));
  }

  double logprob(std::span<const std::string> history, std::string_view word) const {
    return std::log(prob(history, word));
  }

  // Natural-log probability of each token of `words` followed by </s>.
  std::vector<double> sentence_logprobs(const std::vector<std::string>& words) const {
    std::vector<double> out;
    out.reserve(words.size() + 1);
    std::vector<WordId> padded(static_cast<std::size_t>(order_ - 1), kBosId);
    for (const auto& w : words) padded.push_back(id(w));
    padded.push_back(kEosId);
    const auto n = static_cast<std::size_t>(order_ - 1);
    for (std::size_t i = n; i < padded.size(); ++i) {
      std::vector<WordId> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - n),
                              padded.begin() + static_cast<std::ptrdiff_t>(i));
      out.push_back(std::log(prob_ids(ctx, padded[i])));
    }
    return out;
  }

 private:
  static constexpr WordId kUnkId = 0;
  static constexpr WordId kBosId = 1;
  static constexpr WordId kEosId = 2;

  struct ContextStats {
    std::uint64_t total = 0;
    std::size_t types = 0;
    std::unordered_map<WordId, std::uint64_t> followers;
  };

  WordId intern(const std::string& w) {
    auto [it, inserted] = ids_.emplace(w, static_cast<WordId>(words_.size()));
    if (inserted) words_.push_back(w);
    return it->second;
  }

  static std::string key(std::span<const WordId> ids) {
    return {reinterpret_cast<const char*>(ids.data()), ids.size() * sizeof(WordId)};
  }

  static std::vector<WordId> unkey(const std::string& k) {
    std::vector<WordId> ids(k.size() / sizeof(WordId));
    std::memcpy(ids.data(), k.data(), k.size());
    return ids;
  }

  std::vector<WordId> context_ids(std::span<const std::string> history) const {
    const auto n = static_cast<std::size_t>(order_ - 1);
    std::vector<WordId> ctx(n, kBosId);
    const std::size_t take = std::min(n, history.size());
    for (std::size_t i = 0; i < take; ++i) ctx[n - take + i] = id(history[history.size() - take + i]);
    return ctx;
  }

  // `ctx` holds exactly order-1 ids.
  double prob_ids(const std::vector<WordId>& ctx, WordId w) const {
    double p = 1.0 / static_cast<double>(vocab_size());
    for (int k = 1; k <= order_; ++k) {
      const auto len = static_cast<std::size_t>(k - 1);
      const std::string ck = key(std::span(ctx).last(len));
      const auto& level = levels_[static_cast<std::size_t>(k)];
      auto it = level.find(ck);
      if (it == level.end() || it->second.total == 0) continue;
      const ContextStats& st = it->second;
      const auto f = st.followers.find(w);
      const double c = f == st.followers.end() ? 0.0 : static_cast<double>(f->second);
      const double t = static_cast<double>(st.total);
      p = std::max(c - discount_, 0.0) / t + discount_ * static_cast<double>(st.types) / t * p;
    }
    return p;
  }

  int order_ = 1;
  double discount_ = 0.75;
  std::size_t sentences_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::unordered_map<std::string, ContextStats>> levels_;
};

}  // namespace passivekit

#endif  // PASSIVEKIT_NGRAM_HPP_
