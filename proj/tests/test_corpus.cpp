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

#include <sstream>

#include "passivekit/corpus.hpp"
#include "support/synthetic.hpp"

namespace passivekit {
namespace {

using testing::fixture;

TEST(CorpusReader, ReadsTwoSentenceFixture) {
  const auto sents = read_parsed_corpus(fixture("two_sentences.conllu"), ReadMode::kStreaming);
  ASSERT_EQ(sents.size(), 2u);
  EXPECT_EQ(sents[0].id, "doc1-01");
  EXPECT_EQ(sents[1].id, "doc1-02");
  EXPECT_EQ(sents[0].raw_text, "The cup was dropped by a boy.");
  ASSERT_EQ(sents[0].tokens.size(), 8u);
  EXPECT_EQ(sents[0].token(4).lemma, "drop");
  EXPECT_EQ(sents[0].token(3).deprel, "auxpass");
  EXPECT_EQ(sents[0].token(4).head, 0);
}

TEST(CorpusReader, EmptyInputYieldsNothing) {
  std::istringstream in("");
  CorpusReader reader(in);
  EXPECT_FALSE(reader.next());
  EXPECT_TRUE(reader.diagnostics().empty());
}

TEST(CorpusReader, MissingFileThrows) {
  EXPECT_THROW(CorpusReader("/nonexistent/file.conllu"), CorpusError);
  EXPECT_THROW(IndexedCorpus("/nonexistent/file.conllu"), CorpusError);
}

TEST(CorpusReader, SkipsMalformedSentenceWithLineNumber) {
  std::vector<Diagnostic> diags;
  const auto sents = read_parsed_corpus(fixture("malformed.conllu"), ReadMode::kStreaming, &diags);
  ASSERT_EQ(sents.size(), 2u);
  EXPECT_EQ(sents[0].id, "bad-01");
  EXPECT_EQ(sents[1].id, "bad-03");
  ASSERT_EQ(diags.size(), 1u);
  // The short token line is line 15 of the file.
  EXPECT_EQ(diags[0].line, 15u);
  EXPECT_EQ(diags[0].sentence_id, "bad-02");
}

ParsedSentence parse_one(const std::string& block) {
  std::istringstream in(block);
  CorpusReader reader(in);
  auto s = reader.next();
  if (!s) {
    std::ostringstream os;
    for (const auto& d : reader.diagnostics()) os << d << '\n';
    throw std::runtime_error(os.str());
  }
  return *s;
}

TEST(CorpusReader, RejectsStructuralViolations) {
  const std::string gap =
      "# sent_id = g\n1\tA\ta\tDET\t_\t_\t3\tdet\t_\t_\n3\tran\trun\tVERB\t_\t_\t0\tROOT\t_\t_\n\n";
  const std::string two_roots =
      "# sent_id = r\n1\tA\ta\tDET\t_\t_\t0\tdet\t_\t_\n2\tran\trun\tVERB\t_\t_\t0\tROOT\t_\t_\n\n";
  const std::string cycle =
      "# sent_id = c\n1\tA\ta\tDET\t_\t_\t2\tdet\t_\t_\n2\tB\tb\tNOUN\t_\t_\t1\tnsubj\t_\t_\n"
      "3\tran\trun\tVERB\t_\t_\t0\tROOT\t_\t_\n\n";
  const std::string self_head = "# sent_id = s\n1\tran\trun\tVERB\t_\t_\t1\tROOT\t_\t_\n\n";
  const std::string bad_head = "# sent_id = h\n1\tran\trun\tVERB\t_\t_\tx\tROOT\t_\t_\n\n";
  for (const auto& block : {gap, two_roots, cycle, self_head, bad_head}) {
    EXPECT_THROW(parse_one(block), std::runtime_error) << block;
  }
}

TEST(CorpusReader, SkipsMultiwordAndEmptyNodesAndFillsDefaults) {
  const auto s = parse_one(
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n"
      "2\tn't\tnot\tPART\t_\t_\t3\tneg\t_\t_\n3\tgo\tgo\tVERB\t_\t_\t0\tROOT\t_\t_\n"
      "3.1\tgo\tgo\tVERB\t_\t_\t_\t_\t3:conj\t_\n");
  EXPECT_EQ(s.id, "s1");
  EXPECT_EQ(s.tokens.size(), 3u);
  EXPECT_EQ(s.raw_text, "do n't go");
}

TEST(CorpusReader, RoundTripPreservesEveryField) {
  const std::string text =
      "# sent_id = rt-1\n# text = Dogs bark.\n# newdoc id = d7\n"
      "1\tDogs\tdog\tNOUN\tNNS\tNumber=Plur\t2\tnsubj\t2:nsubj\t_\n"
      "2\tbark\tbark\tVERB\tVBP\tMood=Ind\t0\troot\t0:root\tSpaceAfter=No\n"
      "3\t.\t.\tPUNCT\t.\t_\t2\tpunct\t2:punct\t_\n\n";
  const auto s = parse_one(text);
  EXPECT_EQ(to_conllu(s), text);
  EXPECT_EQ(parse_one(to_conllu(s)), s);
}

TEST(CorpusReader, WholeFileRoundTrip) {
  testing::ScratchDir dir;
  const auto sents = read_parsed_corpus(fixture("voice_gold.conllu"), ReadMode::kStreaming);
  write_conllu(sents, dir.file("out.conllu"));
  EXPECT_EQ(read_parsed_corpus(dir.file("out.conllu"), ReadMode::kStreaming), sents);
  EXPECT_EQ(testing::slurp(dir.file("out.conllu")), testing::slurp(fixture("voice_gold.conllu")));
}

TEST(IndexedCorpus, MatchesStreamingRead) {
  for (const char* name : {"voice_gold.conllu", "malformed.conllu", "swap_donors.conllu"}) {
    std::vector<Diagnostic> d1, d2;
    const auto a = read_parsed_corpus(fixture(name), ReadMode::kStreaming, &d1);
    const auto b = read_parsed_corpus(fixture(name), ReadMode::kIndexed, &d2);
    EXPECT_EQ(a, b) << name;
    ASSERT_EQ(d1.size(), d2.size());
    for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_EQ(d1[i].line, d2[i].line);
  }
}

TEST(IndexedCorpus, RandomAccess) {
  IndexedCorpus idx(fixture("voice_gold.conllu"));
  ASSERT_EQ(idx.size(), 39u);
  EXPECT_EQ(idx.at(38).id, "gold-39");
  EXPECT_EQ(idx.at(2).raw_text, "A boy dropped the cup.");
  EXPECT_EQ(idx.at(0).id, "gold-01");
  EXPECT_THROW(idx.at(39), std::out_of_range);
}

TEST(WritePlaintext, OneLinePerSentenceVerbatim) {
  const auto sents = read_parsed_corpus(fixture("swap_donors.conllu"), ReadMode::kStreaming);
  std::ostringstream os;
  EXPECT_EQ(write_plaintext(std::vector(sents.begin(), sents.begin() + 3), os), 3u);
  EXPECT_EQ(os.str(), sents[0].raw_text + "\n" + sents[1].raw_text + "\n" + sents[2].raw_text + "\n");
}

TEST(WritePlaintext, NewlinesBecomeSpacesWithWarning) {
  ParsedSentence s = testing::background("nl", "boy");
  s.raw_text = "first line\nsecond\r\nthird";
  std::ostringstream os;
  std::vector<Diagnostic> warnings;
  EXPECT_EQ(write_plaintext(std::vector<ParsedSentence>{s}, os, &warnings), 1u);
  EXPECT_EQ(os.str(), "first line second third\n");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].sentence_id, "nl");
}

TEST(WritePlaintext, EmptyCorpusGivesEmptyFile) {
  testing::ScratchDir dir;
  EXPECT_EQ(write_plaintext(std::vector<ParsedSentence>{}, dir.file("empty.txt")), 0u);
  EXPECT_EQ(testing::slurp(dir.file("empty.txt")), "");
}

TEST(LemmaIndex, CountsVerbalUsesOnly) {
  const auto sents = read_parsed_corpus(fixture("lemma_index.conllu"), ReadMode::kStreaming);
  const auto index = build_lemma_index(sents, {"drop", "last", "absent"});
  EXPECT_EQ(index.sentence_count, 3u);
  // Two verbal uses of drop; the noun in idx-02 is not indexed.
  EXPECT_EQ(index.of("drop"), (std::vector<OccurrenceRef>{{"idx-01", 3}, {"idx-03", 2}}));
  EXPECT_EQ(index.of("last"), (std::vector<OccurrenceRef>{{"idx-03", 6}}));
  EXPECT_TRUE(index.of("absent").empty());
  EXPECT_THROW(build_lemma_index(sents, {}), std::invalid_argument);
}

TEST(LemmaIndex, IndependentOfReadModeAndIdempotent) {
  const std::set<std::string> lemmas{"drop", "last", "push"};
  const auto a = build_lemma_index(FileCorpus(fixture("swap_donors.conllu")), lemmas);
  const auto b = build_lemma_index(IndexedCorpus(fixture("swap_donors.conllu")), lemmas);
  const auto c = build_lemma_index(FileCorpus(fixture("swap_donors.conllu")), lemmas);
  EXPECT_EQ(a.occurrences, b.occurrences);
  EXPECT_EQ(a.occurrences, c.occurrences);
  for (const auto& [lemma, refs] : a.occurrences) {
    for (const auto& r : refs) EXPECT_GT(r.token_index, 0) << lemma;
  }
}

}  // namespace
}  // namespace passivekit
