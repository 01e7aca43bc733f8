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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "passivekit/ngram.hpp"
#include "passivekit/util/random.hpp"

namespace passivekit {
namespace {

// Direct, unoptimised interpolated Kneser-Ney written from the textbook
// recursion over string n-grams.
class KneserNeyOracle {
 public:
  KneserNeyOracle(const std::vector<std::vector<std::string>>& sentences, int n, double d) : n_(n), d_(d) {
    std::set<std::string> words;
    for (const auto& s : sentences) {
      std::vector<std::string> p(static_cast<std::size_t>(n - 1), "<s>");
      p.insert(p.end(), s.begin(), s.end());
      p.push_back("</s>");
      for (std::size_t i = static_cast<std::size_t>(n - 1); i < p.size(); ++i) {
        top_.push_back(std::vector<std::string>(p.begin() + static_cast<std::ptrdiff_t>(i + 1 - static_cast<std::size_t>(n)),
                                                p.begin() + static_cast<std::ptrdiff_t>(i + 1)));
      }
      words.insert(s.begin(), s.end());
    }
    vocab_ = words.size() + 2;  // plus </s> and <unk>
    known_ = words;
    known_.insert("</s>");
    // Distinct grams per order, each lower order the suffixes of the next.
    distinct_.resize(static_cast<std::size_t>(n) + 1);
    distinct_[static_cast<std::size_t>(n)] = std::set<std::vector<std::string>>(top_.begin(), top_.end());
    for (int k = n - 1; k >= 1; --k) {
      for (const auto& g : distinct_[static_cast<std::size_t>(k + 1)]) {
        distinct_[static_cast<std::size_t>(k)].insert(std::vector<std::string>(g.begin() + 1, g.end()));
      }
    }
  }

  double prob(std::vector<std::string> ctx, std::string w) const {
    if (!known_.count(w)) w = "<unk>";
    for (auto& c : ctx) {
      if (c != "<s>" && !known_.count(c)) c = "<unk>";
    }
    double p = 1.0 / static_cast<double>(vocab_);
    for (int k = 1; k <= n_; ++k) {
      const std::vector<std::string> h(ctx.end() - (k - 1), ctx.end());
      std::map<std::string, double> c;
      if (k == n_) {
        for (const auto& g : top_) {
          if (std::equal(h.begin(), h.end(), g.begin())) c[g.back()] += 1;
        }
      } else {
        for (const auto& g : distinct_[static_cast<std::size_t>(k + 1)]) {
          if (std::equal(h.begin(), h.end(), g.begin() + 1)) c[g.back()] += 1;
        }
      }
      double total = 0;
      for (const auto& [x, v] : c) total += v;
      if (total == 0) continue;
      const double cw = c.count(w) ? c.at(w) : 0.0;
      p = std::max(cw - d_, 0.0) / total + d_ * static_cast<double>(c.size()) / total * p;
    }
    return p;
  }

 private:
  int n_;
  double d_;
  std::size_t vocab_ = 0;
  std::set<std::string> known_;
  std::vector<std::vector<std::string>> top_;
  std::vector<std::set<std::vector<std::string>>> distinct_;
};

NGramModel train(const std::string& text, int order, double d) {
  std::istringstream in(text);
  return NGramModel::train(in, order, d);
}

std::vector<std::string> h(std::initializer_list<const char*> words) { return {words.begin(), words.end()}; }

TEST(NGram, HandComputedBigram) {
  // Continuation counts: a=1, b=1, c=1, </s>=2; V = {a, b, c, </s>, <unk>}.
  // P_uni(b) = (1-.5)/5 + .5*4/5*(1/5) = 0.18
  // P(b|a)   = (2-.5)/3 + .5*2/3*0.18   = 0.56
  const auto m = train("a b\na b\na c\n", 2, 0.5);
  EXPECT_EQ(m.vocab_size(), 5u);
  EXPECT_NEAR(m.prob(h({"a"}), "b"), 0.56, 1e-12);
  EXPECT_NEAR(m.prob(h({"a"}), "c"), (1 - 0.5) / 3 + 0.5 * 2 / 3.0 * 0.18, 1e-12);
  // Unseen context falls through to the unigram level.
  EXPECT_NEAR(m.prob(h({"c", "zzz"}), "b"), 0.18, 1e-12);
  // <unk>: no continuation count, only the uniform share.
  EXPECT_NEAR(m.prob(h({"a"}), "never"), 0.5 * 2 / 3.0 * (0.5 * 4 / 5.0 * 0.2), 1e-12);
}

TEST(NGram, MatchesBruteForceOracle) {
  const std::vector<std::string> lines{"the cat sat on the mat", "the dog sat", "a cat saw the dog",
                                       "the mat was sat on by the cat", "dogs and cats"};
  std::string text;
  std::vector<std::vector<std::string>> sents;
  for (const auto& l : lines) {
    text += l + "\n";
    sents.push_back(tokenize(l));
  }
  for (int order : {1, 2, 3, 4}) {
    for (double d : {0.3, 0.75, 1.0}) {
      const auto m = train(text, order, d);
      const KneserNeyOracle oracle(sents, order, d);
      auto vocab = m.vocabulary();
      vocab.push_back("unseen");
      const std::vector<std::vector<std::string>> histories{
          {}, {"the"}, {"the", "cat"}, {"sat", "on", "the"}, {"by", "the"}, {"zebra", "the"}, {"dog", "sat"}};
      for (const auto& hist : histories) {
        std::vector<std::string> ctx(static_cast<std::size_t>(order - 1), "<s>");
        ctx.insert(ctx.end(), hist.begin(), hist.end());
        ctx.erase(ctx.begin(), ctx.end() - (order - 1));
        for (const auto& w : vocab) {
          EXPECT_NEAR(m.prob(hist, w), oracle.prob(ctx, w), 1e-12) << "order " << order << " d " << d << " w " << w;
        }
      }
    }
  }
}

TEST(NGram, NormalizesOverVocabulary) {
  Rng rng(3);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g"};
  std::string text;
  for (int i = 0; i < 200; ++i) {
    const auto len = 1 + rng.uniform_below(8);
    for (std::uint64_t k = 0; k < len; ++k) text += words[rng.uniform_below(words.size())] + " ";
    text += "\n";
  }
  for (int order : {1, 2, 3, 5}) {
    const auto m = train(text, order, 0.7);
    const auto vocab = m.vocabulary();
    for (const auto& hist : std::vector<std::vector<std::string>>{{}, {"a"}, {"a", "b"}, {"g", "g", "g", "g"}, {"q", "r"}}) {
      double sum = 0;
      for (const auto& w : vocab) sum += m.prob(hist, w);
      EXPECT_NEAR(sum, 1.0, 1e-9) << "order " << order;
    }
  }
}

TEST(NGram, UnigramIgnoresContext) {
  const auto m = train("a b\na b\na c\n", 1, 0.5);
  for (const auto& w : m.vocabulary()) {
    EXPECT_EQ(m.prob(h({}), w), m.prob(h({"a"}), w));
    EXPECT_EQ(m.prob(h({"b", "c"}), w), m.prob(h({"a"}), w));
  }
}

TEST(NGram, SentenceLogprobsAreConditionalProducts) {
  const auto m = train("the cat sat\nthe dog sat\nthe cat ran\n", 3, 0.75);
  const auto words = tokenize("The cat sat.");
  ASSERT_EQ(words, h({"the", "cat", "sat", "."}));
  const auto lps = m.sentence_logprobs(words);
  ASSERT_EQ(lps.size(), words.size() + 1);
  double product = 1.0;
  std::vector<std::string> hist;
  for (const auto& w : words) {
    product *= m.prob(hist, w);
    hist.push_back(w);
  }
  product *= m.prob(hist, "</s>");
  double total = 0;
  for (double lp : lps) total += lp;
  EXPECT_NEAR(total, std::log(product), 1e-12);
}

TEST(NGram, PrefixMonotonicity) {
  const auto m = train("the cat sat\nthe dog sat\nthe cat ran\n", 3, 0.75);
  const auto lps = m.sentence_logprobs(tokenize("the cat sat on the unseen mat"));
  double running = 0;
  for (double lp : lps) {
    EXPECT_LE(lp, 0.0);
    EXPECT_LE(running + lp, running);
    running += lp;
  }
}

TEST(NGram, Tokenizer) {
  EXPECT_EQ(tokenize("Don't stop, X-ray!"), h({"don't", "stop", ",", "x-ray", "!"}));
  EXPECT_EQ(tokenize("  "), h({}));
  EXPECT_EQ(tokenize("'quoted'"), h({"'", "quoted", "'"}));
}

TEST(NGram, RejectsBadTrainingInput) {
  EXPECT_THROW(train("", 2, 0.5), std::invalid_argument);
  EXPECT_THROW(train("\n \n", 2, 0.5), std::invalid_argument);
  EXPECT_THROW(train("a", 0, 0.5), std::invalid_argument);
  EXPECT_THROW(train("a", 2, 0.0), std::invalid_argument);
  EXPECT_THROW(train("a", 2, 1.5), std::invalid_argument);
  EXPECT_THROW(NGramModel::train_file("/nonexistent.txt", 2, 0.5), std::runtime_error);
}

TEST(NGram, DeterministicTraining) {
  const std::string text = "the cat sat\nthe dog sat\nthe cat ran\n";
  const auto a = train(text, 3, 0.75);
  const auto b = train(text, 3, 0.75);
  for (const auto& w : a.vocabulary()) EXPECT_EQ(a.prob(h({"the"}), w), b.prob(h({"the"}), w));
}

}  // namespace
}  // namespace passivekit
