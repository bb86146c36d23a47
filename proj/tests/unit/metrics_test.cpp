#include <gtest/gtest.h>

#include <cmath>

#include "e2s/metrics.hpp"
#include "support.hpp"

using namespace e2s;
using e2s::test::words;

namespace {

const nlohmann::json& oracle() {
  static const auto j = test::read_json(test::frozen("metrics.json"));
  return j;
}

}  // namespace

TEST(Bleu, Identity) {
  const auto s = words("the ship arrives at the station .");
  EXPECT_NEAR(bleu4(s, {s}), 1.0, 1e-9);
}

TEST(Bleu, NoOverlapHitsTheFloor) {
  EXPECT_LT(bleu4(words("alpha beta gamma delta"), {words("one two three four")}), 1e-8);
}

TEST(Bleu, MatchesOracle) {
  for (const auto& c : oracle().at("sentence_bleu")) {
    const auto cand = c.at("candidate").get<TokenSeq>();
    const auto refs = c.at("references").get<std::vector<TokenSeq>>();
    EXPECT_NEAR(bleu4(cand, refs), c.at("bleu4").get<double>(), 1e-12) << c.at("name");
  }
  const auto& cb = oracle().at("corpus_bleu");
  EXPECT_NEAR(corpus_bleu(cb.at("candidates").get<std::vector<TokenSeq>>(),
                          cb.at("references").get<std::vector<std::vector<TokenSeq>>>()),
              cb.at("bleu4").get<double>(), 1e-12);
}

TEST(Bleu, UnigramPrecisionIgnoresOrderButBleu4DoesNot) {
  const auto ref = words("the crew escapes from the planet .");
  const auto shuffled = words("planet the . from escapes crew the");
  EXPECT_NEAR(bleu(shuffled, {ref}, 1), 1.0, 1e-12);
  EXPECT_LT(bleu4(shuffled, {ref}), 0.01);
}

TEST(Rouge, Cases) {
  const auto s = words("the ship arrives at the station .");
  EXPECT_DOUBLE_EQ(rouge4_f1(s, s), 100.0);
  EXPECT_DOUBLE_EQ(rouge4_f1(words("the ship arrives"), s), 0.0);
  for (const auto& c : oracle().at("rouge4"))
    EXPECT_NEAR(rouge4_f1(c.at("candidate").get<TokenSeq>(), c.at("reference").get<TokenSeq>()),
                c.at("rouge4").get<double>(), 1e-9)
        << c.at("name");
}

TEST(Perplexity, Examples) {
  EXPECT_DOUBLE_EQ(corpus_perplexity({words("a a b b")}), 2.0);
  EXPECT_DOUBLE_EQ(corpus_perplexity({words("a a a")}), 1.0);
  EXPECT_NEAR(corpus_perplexity({words("a a b c")}), std::pow(2.0, 1.5), 1e-12);
  for (const auto& c : oracle().at("perplexity"))
    EXPECT_NEAR(corpus_perplexity(c.at("sentences").get<std::vector<TokenSeq>>()),
                c.at("perplexity").get<double>(), 1e-12)
        << c.at("name");
  EXPECT_THROW(corpus_perplexity({}), Error);
}

TEST(Length, Average) {
  EXPECT_DOUBLE_EQ(avg_sentence_length({TokenSeq(9, "x"), TokenSeq(9, "y")}), 9.0);
  EXPECT_DOUBLE_EQ(avg_sentence_length({TokenSeq(5, "x")}), 5.0);
}

TEST(Report, IdenticalFilesGiveBleuOne) {
  const std::vector<TokenSeq> s = {words("she says ."), words("the crew escapes from the planet .")};
  const auto r = evaluate("Full Ensemble", s, s);
  EXPECT_NEAR(r.bleu4, 1.0, 1e-9);
  EXPECT_NEAR(r.rouge4_f1, 50.0, 1e-9);  // the three-token sentence has no 4-grams
  EXPECT_EQ(r.count, 2u);
  EXPECT_DOUBLE_EQ(r.perplexity, r.gold_perplexity);
  const auto table = format_metric_table({r});
  EXPECT_NE(table.find("Full Ensemble"), std::string::npos);
  EXPECT_NE(table.find("BLEU-4"), std::string::npos);
}
