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

#ifndef PASSIVEKIT_SCORING_HPP_
#define PASSIVEKIT_SCORING_HPP_

// Sentence scores are summed natural-log token probabilities. A Scorer is
// either the built-in n-gram model or an external process speaking the
// line-delimited JSON protocol below over its stdin/stdout.
//
//   scorer -> {"scorer_id": "...", "log_base": "e"}          (handshake)
//   client -> {"id": "...", "text": "..."}
//   scorer -> {"id": "...", "tokens": [...], "logprobs": [...], "total": x}
//          or {"id": "...", "error": "..."}
//
// Responses come back in request order. A non-zero exit or an unparseable
// line is a scorer failure.

#include <cmath>
#include <istream>
#include <memory>
#include <numeric>
#include <sstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "passivekit/corpus.hpp"
#include "passivekit/ngram.hpp"
#include "passivekit/stimuli.hpp"
#include "passivekit/subprocess.hpp"

namespace passivekit {

class ScorerError : public std::runtime_error {
 public:
  ScorerError(std::string sentence_id, const std::string& what)
      : std::runtime_error(sentence_id.empty() ? what : "[" + sentence_id + "] " + what),
        sentence_id(std::move(sentence_id)) {}
  std::string sentence_id;
};

struct ScoreRecord {
  std::string sentence_id;
  std::string scorer_id;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
  double total = 0.0;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  virtual ScoreRecord score(const std::string& sentence_id, const std::string& text) = 0;
};

class NGramScorer : public Scorer {
 public:
  explicit NGramScorer(std::shared_ptr<const NGramModel> model) : model_(std::move(model)) {}

  std::string id() const override {
    std::ostringstream os;
    os << "ngram-o" << model_->order() << "-d" << model_->discount();
    return os.str();
  }

  ScoreRecord score(const std::string& sentence_id, const std::string& text) override {
    ScoreRecord r;
    r.sentence_id = sentence_id;
    r.scorer_id = id();
    r.tokens = tokenize(text);
    if (r.tokens.empty()) throw ScorerError(sentence_id, "sentence has no tokens");
    r.token_logprobs = model_->sentence_logprobs(r.tokens);
    r.tokens.emplace_back(kEos);
    r.total = std::accumulate(r.token_logprobs.begin(), r.token_logprobs.end(), 0.0);
    return r;
  }

  const NGramModel& model() const { return *model_; }

 private:
  std::shared_ptr<const NGramModel> model_;
};

class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(const std::string& command) : command_(command), child_(command) {
    auto line = child_.read_line();
    if (!line) fail_launch("no handshake (exit status " + std::to_string(child_.wait()) + ")");
    nlohmann::json hs;
    try {
      hs = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::exception&) {
      fail_launch("malformed handshake: " + *line);
    }
    if (hs.contains("error")) fail_launch("scorer reported: " + hs["error"].dump());
    if (!hs.contains("scorer_id") || !hs["scorer_id"].is_string()) fail_launch("handshake lacks scorer_id");
    scorer_id_ = hs["scorer_id"].get<std::string>();
    const std::string base = hs.value("log_base", "e");
    if (base == "e") {
      to_natural_ = 1.0;
    } else if (base == "2") {
      to_natural_ = std::log(2.0);
    } else if (base == "10") {
      to_natural_ = std::log(10.0);
    } else {
      fail_launch("unsupported log_base '" + base + "'");
    }
  }

  std::string id() const override { return scorer_id_; }

  ScoreRecord score(const std::string& sentence_id, const std::string& text) override {
    if (!alive_) throw ScorerError(sentence_id, "external scorer is no longer running");
    const nlohmann::json req = {{"id", sentence_id}, {"text", text}};
    if (!child_.write_line(req.dump())) die(sentence_id, "cannot write request");
    auto line = child_.read_line();
    if (!line) die(sentence_id, "scorer exited");
    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::exception&) {
      die(sentence_id, "malformed response line: " + *line);
    }
    if (!resp.is_object() || !resp.contains("id") || resp["id"] != sentence_id) {
      die(sentence_id, "response id does not match request");
    }
    if (resp.contains("error")) {
      throw ScorerError(sentence_id, "scorer error: " + resp["error"].dump());
    }
    try {
      ScoreRecord r;
      r.sentence_id = sentence_id;
      r.scorer_id = scorer_id_;
      r.tokens = resp.at("tokens").get<std::vector<std::string>>();
      r.token_logprobs = resp.at("logprobs").get<std::vector<double>>();
      const double reported = resp.at("total").get<double>() * to_natural_;
      for (double& lp : r.token_logprobs) lp *= to_natural_;
      if (r.tokens.size() != r.token_logprobs.size()) {
        throw ScorerError(sentence_id, "protocol violation: tokens and logprobs differ in length");
      }
      r.total = std::accumulate(r.token_logprobs.begin(), r.token_logprobs.end(), 0.0);
      if (std::abs(reported - r.total) > 1e-6 * std::max(1.0, std::abs(r.total))) {
        throw ScorerError(sentence_id, "protocol violation: total differs from sum of logprobs");
      }
      return r;
    } catch (const nlohmann::json::exception& e) {
      die(sentence_id, std::string("malformed response: ") + e.what());
    }
  }

  // Closes the channel and returns the exit status.
  int shutdown() {
    alive_ = false;
    return child_.wait();
  }

 private:
  [[noreturn]] void fail_launch(const std::string& why) {
    throw ScorerError("", "scorer launch failure (" + command_ + "): " + why);
  }

  [[noreturn]] void die(const std::string& sentence_id, const std::string& why) {
    alive_ = false;
    const int status = child_.wait();
    throw ScorerError(sentence_id, why + " (scorer exit status " + std::to_string(status) + ")");
  }

  std::string command_;
  ChildProcess child_;
  std::string scorer_id_;
  double to_natural_ = 1.0;
  bool alive_ = true;
};

// Validates the input and the returned record.
inline ScoreRecord score_sentence(Scorer& scorer, const std::string& sentence_id, const std::string& text) {
  if (text::trim(text).empty()) throw ScorerError(sentence_id, "cannot score an empty sentence");
  ScoreRecord r = scorer.score(sentence_id, text);
  if (r.tokens.size() != r.token_logprobs.size()) {
    throw ScorerError(sentence_id, "token and logprob counts differ");
  }
  if (r.tokens.empty()) throw ScorerError(sentence_id, "scorer returned no tokens");
  for (double lp : r.token_logprobs) {
    if (!std::isfinite(lp)) throw ScorerError(sentence_id, "non-finite token logprob");
  }
  return r;
}

enum class Preference { kFirst, kSecond, kTie };

inline Preference compare_scores(double first, double second) {
  if (first > second) return Preference::kFirst;
  if (second > first) return Preference::kSecond;
  return Preference::kTie;
}

inline std::string_view to_string(Preference p) {
  switch (p) {
    case Preference::kFirst: return "first";
    case Preference::kSecond: return "second";
    case Preference::kTie: return "tie";
  }
  return "tie";
}

struct PairScore {
  std::string pair_id;
  ScoreRecord active;
  ScoreRecord passive;
};

struct SuiteScores {
  std::string scorer_id;
  std::vector<PairScore> scored;
  std::vector<Diagnostic> failures;
};

inline SuiteScores score_suite(Scorer& scorer, const std::vector<SentencePair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("score_suite: empty suite");
  SuiteScores out;
  out.scorer_id = scorer.id();
  for (const auto& p : pairs) {
    try {
      PairScore ps;
      ps.pair_id = p.pair_id;
      ps.active = score_sentence(scorer, p.pair_id + ".active", p.active_text);
      ps.passive = score_sentence(scorer, p.pair_id + ".passive", p.passive_text);
      out.scored.push_back(std::move(ps));
    } catch (const ScorerError& e) {
      out.failures.push_back({0, p.pair_id, e.what()});
    }
  }
  return out;
}

struct GoodBadPair {
  std::string id;
  std::string good;
  std::string bad;
};

struct AccuracyResult {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t ties = 0;
  std::size_t failures = 0;
  double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

// Fraction of pairs with score(good) > score(bad); ties count as incorrect
// and are reported separately.
inline AccuracyResult minimal_pair_accuracy(Scorer& scorer, const std::vector<GoodBadPair>& suite) {
  AccuracyResult r;
  for (const auto& p : suite) {
    try {
      const double g = score_sentence(scorer, p.id + ".good", p.good).total;
      const double b = score_sentence(scorer, p.id + ".bad", p.bad).total;
      ++r.n;
      switch (compare_scores(g, b)) {
        case Preference::kFirst: ++r.correct; break;
        case Preference::kTie: ++r.ties; break;
        case Preference::kSecond: break;
      }
    } catch (const ScorerError&) {
      ++r.failures;
    }
  }
  return r;
}

// Serves `scorer` over the wire protocol until EOF on `in`.
inline void serve_protocol(Scorer& scorer, std::istream& in, std::ostream& out) {
  out << nlohmann::json{{"scorer_id", scorer.id()}, {"log_base", "e"}}.dump() << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    nlohmann::json resp;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      out << nlohmann::json{{"id", nullptr}, {"error", "malformed request"}}.dump() << '\n' << std::flush;
      continue;
    }
    if (!req.is_object() || !req.contains("id") || !req["id"].is_string() || !req.contains("text") ||
        !req["text"].is_string()) {
      out << nlohmann::json{{"id", req.is_object() && req.contains("id") ? req["id"] : nlohmann::json()},
                            {"error", "request needs string 'id' and 'text'"}}
                 .dump()
          << '\n'
          << std::flush;
      continue;
    }
    const std::string id = req["id"].get<std::string>();
    try {
      const ScoreRecord r = score_sentence(scorer, id, req["text"].get<std::string>());
      resp = {{"id", id}, {"tokens", r.tokens}, {"logprobs", r.token_logprobs}, {"total", r.total}};
    } catch (const std::exception& e) {
      resp = {{"id", id}, {"error", e.what()}};
    }
    out << resp.dump() << '\n' << std::flush;
  }
}

}  // namespace passivekit

#endif  // PASSIVEKIT_SCORING_HPP_
