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
#include <sstream>

#include "passivekit/analysis.hpp"

namespace passivekit {
namespace {

JudgmentRow filler(const std::string& who, int k, bool acceptable, int score) {
  return {who, "F" + std::to_string(k), score, "", "", "", true, acceptable, false};
}

JudgmentRow critical(const std::string& who, const std::string& pair, const std::string& cls, bool active, int score) {
  return {who, pair + (active ? ".active" : ".passive"), score, pair.substr(0, pair.find('-')), cls,
          active ? "active" : "passive", false, true, false};
}

// A participant rating `n` fillers, `unexpected` of them against expectation.
std::vector<JudgmentRow> participant(const std::string& who, int n, int unexpected) {
  std::vector<JudgmentRow> rows;
  for (int k = 0; k < n; ++k) {
    const bool acceptable = k % 3 == 0;
    const bool wrong = k < unexpected;
    const int score = acceptable == !wrong ? 80 : 20;
    rows.push_back(filler(who, k, acceptable, score));
  }
  rows.push_back(critical(who, "drop-1", "agent-patient", true, 90));
  return rows;
}

TEST(Judgments, CsvReaderRejectsBadScoresWithLineNumbers) {
  std::istringstream in(
      "participant_id,item_id,score,verb,class,voice,is_filler,expected_acceptable,attention_check\n"
      "p1,x-1.active,80,drop,agent-patient,active,0,1,0\n"
      "p1,x-1.passive,50,drop,agent-patient,passive,0,1,0\n"
      "p1,F1,101,,,,1,0,0\n"
      "p1,F2,7.5,,,,1,0,0\n"
      "p1,F3,0,,,,1,0,1\n"
      "p1,x-2.active,60,drop,agent-patient,sideways,0,1,0\n"
      "p1,too,few\n");
  std::vector<Diagnostic> rejected;
  const auto rows = read_judgments_csv(in, rejected);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].item_id, "F3");
  EXPECT_TRUE(rows[1].is_attention_check);
  ASSERT_EQ(rejected.size(), 5u);
  EXPECT_EQ(rejected[0].line, 3u);  // the score of 50
  EXPECT_NE(rejected[0].message.find("50"), std::string::npos);
  EXPECT_EQ(rejected[1].line, 4u);
  EXPECT_EQ(rejected[2].line, 5u);
  EXPECT_EQ(rejected[3].line, 7u);
  EXPECT_EQ(rejected[4].line, 8u);
}

TEST(Judgments, CsvRoundTripAndMissingColumn) {
  std::vector<JudgmentRow> rows{critical("p1", "drop-1", "agent-patient", true, 90), filler("p1", 1, false, 10)};
  std::stringstream ss;
  write_judgments_csv(rows, ss);
  std::vector<Diagnostic> rejected;
  const auto back = read_judgments_csv(ss, rejected);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].score, 90);
  EXPECT_EQ(back[1].expected_acceptable, false);
  std::istringstream no_score("participant_id,item_id\np,i\n");
  EXPECT_THROW(read_judgments_csv(no_score, rejected), std::runtime_error);
}

TEST(Exclusion, BoundaryIsMoreThanFifteen) {
  auto rows = participant("p16", 70, 16);
  const auto more = participant("p15", 70, 15);
  rows.insert(rows.end(), more.begin(), more.end());
  const auto res = exclude_participants(rows);
  EXPECT_EQ(res.excluded, (std::vector<std::string>{"p16"}));
  EXPECT_EQ(res.unexpected_counts.at("p16"), 16u);
  EXPECT_EQ(res.unexpected_counts.at("p15"), 15u);
  for (const auto& r : res.kept) EXPECT_EQ(r.participant_id, "p15");
}

TEST(Exclusion, CohortOfEightyFourWithTwentyFourViolators) {
  std::vector<JudgmentRow> rows;
  for (int i = 0; i < 84; ++i) {
    const int unexpected = i < 24 ? 16 + i % 20 : i % 16;  // violators 16..35, others 0..15
    const auto p = participant("p" + std::to_string(i), 70, unexpected);
    rows.insert(rows.end(), p.begin(), p.end());
  }
  const auto res = exclude_participants(rows);
  EXPECT_EQ(res.excluded.size(), 24u);
  EXPECT_TRUE(res.no_filler_ratings.empty());
  // Idempotent.
  const auto again = exclude_participants(res.kept);
  EXPECT_TRUE(again.excluded.empty());
  EXPECT_EQ(again.kept.size(), res.kept.size());
}

TEST(Exclusion, FailedAttentionChecksCountAsUnexpected) {
  auto rows = participant("p", 70, 15);
  JudgmentRow check = filler("p", 99, false, 95);
  check.is_attention_check = true;
  rows.push_back(check);
  EXPECT_EQ(exclude_participants(rows).excluded.size(), 1u);
}

TEST(Exclusion, ParticipantWithoutFillersIsFlagged) {
  std::vector<JudgmentRow> rows{critical("ghost", "drop-1", "agent-patient", true, 70)};
  const auto res = exclude_participants(rows);
  EXPECT_EQ(res.no_filler_ratings, (std::vector<std::string>{"ghost"}));
  EXPECT_TRUE(res.kept.empty());
}

// Ten active ratings of 90 and ten passive ratings averaging 90 - drop.
void add_pair(std::vector<JudgmentRow>& rows, const std::string& pair, const std::string& cls, double drop) {
  const int passive_sum = static_cast<int>(std::lround((90.0 - drop) * 10));
  for (int k = 0; k < 10; ++k) {
    rows.push_back(critical("a" + std::to_string(k), pair, cls, true, 90));
    const int base = passive_sum / 10 + (k < passive_sum % 10 ? 1 : 0);
    rows.push_back(critical("b" + std::to_string(k), pair, cls, false, base));
  }
}

TEST(PassiveDrop, ClassMeansFromHumanFixture) {
  std::vector<JudgmentRow> rows;
  for (int i = 0; i < 15; ++i) add_pair(rows, "last-" + std::to_string(i), "duration", 61.9);
  for (int i = 0; i < 20; ++i) add_pair(rows, "ooze-" + std::to_string(i), "ooze", i < 12 ? 8.4 : 8.5);
  for (int i = 0; i < 25; ++i) add_pair(rows, "hit-" + std::to_string(i), "agent-patient", i < 15 ? 8.9 : 8.8);
  for (const auto& r : rows) ASSERT_TRUE(valid_slider_score(r.score));
  const auto table = human_passive_drops(rows);
  EXPECT_TRUE(table.skipped.empty());
  EXPECT_EQ(table.records.size(), 60u);
  const auto by_class = summarize_drops(table.records, [](const PassiveDropRecord& r) { return r.class_name; });
  std::map<std::string, double> m;
  for (const auto& s : by_class) m[s.key] = s.mean_drop;
  EXPECT_NEAR(m["duration"], 61.9, 1e-9);
  EXPECT_NEAR(m["ooze"], 8.44, 1e-9);
  EXPECT_NEAR(m["agent-patient"], 8.86, 1e-9);
}

TEST(PassiveDrop, OverallMeans) {
  std::vector<JudgmentRow> rows;
  for (int k = 0; k < 10; ++k) {
    rows.push_back(critical("p" + std::to_string(k), "x-1", "c", true, k < 5 ? 88 : 89));
    rows.push_back(critical("q" + std::to_string(k), "x-1", "c", false, k < 6 ? 66 : 67));
  }
  const auto all = overall_passive_drop(rows);
  EXPECT_NEAR(all.active_mean, 88.5, 1e-12);
  EXPECT_NEAR(all.passive_mean, 66.4, 1e-12);
  EXPECT_NEAR(all.drop, 22.1, 1e-12);
}

TEST(PassiveDrop, ZeroAntisymmetryAndMissingVoice) {
  std::vector<VoicedObservation> obs{{"p", "v", "c", true, 70}, {"p", "v", "c", false, 70},
                                     {"q", "v", "c", true, 80}, {"q", "v", "c", false, 30},
                                     {"r", "v", "c", true, 80}};
  const auto t = passive_drop(obs, "human");
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_EQ(t.records[0].drop, 0.0);
  EXPECT_EQ(t.records[1].drop, 50.0);
  ASSERT_EQ(t.skipped.size(), 1u);
  EXPECT_EQ(t.skipped[0].sentence_id, "r");
  for (auto& o : obs) o.active = !o.active;
  const auto flipped = passive_drop(obs, "human");
  EXPECT_EQ(flipped.records[1].drop, -50.0);
}

TEST(PassiveDrop, ParticipantCis) {
  std::vector<JudgmentRow> rows;
  add_pair(rows, "hit-1", "agent-patient", 20.0);
  rows.push_back(critical("z", "hit-1", "agent-patient", true, 60));
  auto table = human_passive_drops(rows);
  attach_participant_cis(table, rows);
  const auto& rec = table.records.at(0);
  EXPECT_LE(rec.ci.low, rec.drop);
  EXPECT_GE(rec.ci.high, rec.drop);
  EXPECT_LT(rec.ci.low, rec.ci.high);
}

TEST(PassiveDrop, ModelDropsUseActiveMinusPassive) {
  SuiteScores run;
  run.scorer_id = "m";
  PairScore ps;
  ps.pair_id = "hit-1";
  ps.active.total = -20.0;
  ps.passive.total = -26.5;
  run.scored.push_back(ps);
  std::vector<SentencePair> pairs{{"hit-1", "hit", "agent-patient", "f", "A", "P", true},
                                  {"hit-2", "hit", "agent-patient", "f", "A", "P", true}};
  auto run2 = run;
  run2.scored[0].passive.total = -24.5;
  const auto t = model_passive_drops({run, run2}, pairs);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_DOUBLE_EQ(t.records[0].drop, 5.5);  // mean over runs
  EXPECT_EQ(t.records[0].source, "model");
  ASSERT_EQ(t.skipped.size(), 1u);
  EXPECT_EQ(t.skipped[0].sentence_id, "hit-2");
}

std::vector<JudgmentRow> cohort(int participants, double noise_sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<JudgmentRow> rows;
  for (int p = 0; p < participants; ++p) {
    for (int item = 0; item < 40; ++item) {
      const double truth = 15.0 + 2.0 * item;
      double v = truth;
      if (noise_sd > 0) {
        const double u1 = 1.0 - rng.uniform01(), u2 = rng.uniform01();
        v += noise_sd * std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2);
      }
      int s = static_cast<int>(std::lround(std::clamp(v, 0.0, 100.0)));
      if (s == 50) s = 51;
      rows.push_back({"p" + std::to_string(p), "it" + std::to_string(item), s, "", "", "active", false, true, false});
    }
  }
  return rows;
}

TEST(SplitHalf, NoiseFreeIsOne) {
  const auto res = split_half_reliability(cohort(12, 0.0, 1), 10, 3);
  EXPECT_DOUBLE_EQ(res.corrected, 1.0);
  EXPECT_EQ(res.split_rs.size(), 10u);
}

TEST(SplitHalf, TracksClassicalTestTheory) {
  // Item SD ~23.1; per-half mean error variance noise^2 / (n/2). Expected
  // half-reliability r = var_i / (var_i + noise^2 / 20), full = 2r/(1+r).
  const double noise = 45.0;
  double var_i = 0;
  for (int i = 0; i < 40; ++i) var_i += std::pow(2.0 * i - 39.0, 2);
  var_i /= 40;
  const double r = var_i / (var_i + noise * noise / 20);
  const auto res = split_half_reliability(cohort(40, noise, 9), 10, 4);
  EXPECT_NEAR(res.corrected, 2 * r / (1 + r), 0.04);
}

TEST(SplitHalf, DropsItemsSeenByOneHalf) {
  auto rows = cohort(6, 0.0, 1);
  rows.push_back({"p0", "lonely", 10, "", "", "active", false, true, false});
  const auto res = split_half_reliability(rows, 4, 1);
  EXPECT_EQ(res.diagnostics.size(), 4u);
  EXPECT_DOUBLE_EQ(res.corrected, 1.0);
  EXPECT_THROW(split_half_reliability(cohort(1, 0.0, 1), 4, 1), StatsError);
}

TEST(InterventionDelta, IdenticalScoresGiveZero) {
  std::vector<PassiveDropRecord> base{{"drop-1", "drop", "ap", 3.0}, {"drop-2", "drop", "ap", 5.0},
                                      {"last-1", "last", "dur", 9.0}};
  const auto t = intervention_delta(base, base, {"drop"});
  for (const auto& r : t.pairs) EXPECT_EQ(r.delta, 0.0);
  ASSERT_EQ(t.verbs.size(), 2u);
  EXPECT_TRUE(t.verbs[0].mutating);
  EXPECT_FALSE(t.verbs[1].mutating);
  EXPECT_EQ(t.verbs[0].baseline, 4.0);
}

TEST(InterventionDelta, PerVerbMeansAndMismatch) {
  std::vector<PassiveDropRecord> base{{"drop-1", "drop", "ap", 3.0}, {"drop-2", "drop", "ap", 5.0}};
  auto after = base;
  after[0].drop = 7.0;
  after[1].drop = 6.0;
  const auto t = intervention_delta(base, after, {"drop"});
  EXPECT_EQ(t.verbs[0].delta, 2.5);
  after.pop_back();
  EXPECT_THROW(intervention_delta(base, after, {"drop"}), StatsError);
  after.push_back({"other-9", "other", "x", 1.0});
  EXPECT_THROW(intervention_delta(base, after, {"drop"}), StatsError);
}

TEST(CorrelateDrops, MatchesOnPairId) {
  std::vector<PassiveDropRecord> a{{"x", "", "", 1}, {"y", "", "", 2}, {"z", "", "", 3}, {"w", "", "", 9}};
  std::vector<PassiveDropRecord> b{{"z", "", "", 30}, {"y", "", "", 20}, {"x", "", "", 10}};
  const auto r = correlate_drops(a, b);
  EXPECT_EQ(r.n, 3u);
  EXPECT_DOUBLE_EQ(r.r, 1.0);
}

TEST(Tables, DropCsvRoundTrip) {
  std::vector<PassiveDropRecord> recs{{"x-1", "x", "c", 1.25, 80, 78.75, 10, 10, "human"}};
  std::stringstream ss;
  write_drops_csv(recs, ss);
  const auto back = read_drops_csv(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].drop, 1.25);
  EXPECT_EQ(back[0].source, "human");
}

}  // namespace
}  // namespace passivekit
