#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "e2s/ngram_model.hpp"
#include "support.hpp"

using namespace e2s;
using e2s::test::ev;
using e2s::test::words;

namespace {

const nlohmann::json& oracle() {
  static const auto j = test::read_json(test::frozen("ngram.json"));
  return j;
}

std::vector<GeneralizedSentence> oracle_sentences() {
  std::vector<GeneralizedSentence> out;
  for (const auto& p : oracle().at("pairs")) out.push_back(p.at("sentence").get<GeneralizedSentence>());
  return out;
}

std::vector<std::string> oracle_extra() {
  std::vector<std::string> out;
  for (const auto& p : oracle().at("pairs"))
    for (const auto& t : p.at("event"))
      if (!t.is_null()) out.push_back(t.get<std::string>());
  return out;
}

NGramModel oracle_model(int order, double lambda) {
  NGramConfig cfg;
  cfg.order = order;
  cfg.copy_bias = lambda;
  return NGramModel::train(oracle_sentences(), cfg, oracle_extra());
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Vocabulary, ReservedIdsAndByteOrder) {
  Vocabulary v({"the", "<ORG>0", ".", "the"});
  EXPECT_EQ(v.token(0), "<s>");
  EXPECT_EQ(v.token(1), "<eos>");
  EXPECT_EQ(v.token(2), "<unk>");
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<s>", "<eos>", "<unk>", ".", "<ORG>0", "the"}));
  EXPECT_EQ(v.id("nope"), Vocabulary::kUnk);
  EXPECT_EQ(Vocabulary::from_json(v.to_json()).tokens(), v.tokens());
}

TEST(NGram, SingleSentenceBigram) {
  NGramConfig cfg;
  cfg.order = 2;
  cfg.copy_bias = 0.0;
  const auto m = NGramModel::train(std::vector<GeneralizedSentence>{words("a b")}, cfg);
  const auto& v = m.vocabulary();
  const std::vector<TokenId> prefix = {v.id("a")};
  const auto d = m.next_distribution(encode_event(v, std::vector<std::string>{}), prefix);
  EXPECT_EQ(std::max_element(d.begin(), d.end()) - d.begin(), v.id("b"));
}

TEST(NGram, EmptyCorpusThrows) {
  EXPECT_THROW(NGramModel::train(std::vector<TrainingPair>{}, NGramConfig{}), EmptyCorpus);
}

TEST(NGram, MatchesCountOracle) {
  const auto m = oracle_model(oracle().at("order").get<int>(), oracle().at("lambda").get<double>());
  const auto& v = m.vocabulary();
  ASSERT_EQ(v.tokens(), oracle().at("vocabulary").get<std::vector<std::string>>());
  for (const auto& q : oracle().at("queries")) {
    const auto e = encode_event(v, test::ev_json(q.at("event")));
    const auto prefix = v.encode(q.at("prefix").get<std::vector<std::string>>());
    const auto d = m.next_distribution(e, prefix);
    const auto want = q.at("distribution").get<std::vector<double>>();
    const auto plain = q.at("plain").get<std::vector<double>>();
    const auto got_plain = m.ngram_distribution(prefix);
    ASSERT_EQ(d.size(), want.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(d[i], want[i], 1e-12) << q.dump() << " id " << i;
      EXPECT_NEAR(got_plain[i], plain[i], 1e-12) << q.dump() << " id " << i;
    }
    EXPECT_EQ(v.token(static_cast<TokenId>(std::max_element(d.begin(), d.end()) - d.begin())),
              q.at("argmax").get<std::string>());
  }
}

TEST(NGram, NllMatchesOracle) {
  const auto m = oracle_model(2, 0.3);
  const auto& n = oracle().at("nll");
  const auto e = encode_event(m.vocabulary(), test::ev_json(n.at("event")));
  EXPECT_NEAR(m.sentence_nll(e, n.at("sentence").get<GeneralizedSentence>()),
              n.at("bits").get<double>(), 1e-12);
}

TEST(NGram, TrigramCountsMatchOracle) {
  const auto m = oracle_model(3, 0.3);
  const auto& v = m.vocabulary();
  for (const auto& [key, count] : oracle().at("trigram_counts").items()) {
    const auto bar = key.find(" | ");
    const auto ctx = v.encode(words(key.substr(0, bar)));
    EXPECT_EQ(m.count(ctx, v.id(key.substr(bar + 3))), count.get<std::size_t>()) << key;
  }
}

TEST(NGram, Normalization) {
  const auto& m = test::fixture_forward();
  const auto& v = m.vocabulary();
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto& pairs = test::fixture_pairs("test");
    const auto& p = pairs[rng.uniform_index(pairs.size())];
    const auto e = encode_event(v, p.event);
    std::vector<TokenId> prefix;
    const std::size_t len = rng.uniform_index(8);
    for (std::size_t i = 0; i < len; ++i)
      prefix.push_back(static_cast<TokenId>(1 + rng.uniform_index(v.size() - 1)));
    const auto d = m.next_distribution(e, prefix);
    EXPECT_NEAR(sum(d), 1.0, 1e-9);
    EXPECT_EQ(d[Vocabulary::kBegin], 0.0);
    for (std::size_t i = 1; i < d.size(); ++i) EXPECT_GT(d[i], 0.0);
  }
}

TEST(NGram, ZeroLambdaIgnoresEvent) {
  const auto m = oracle_model(2, 0.0);
  const auto& v = m.vocabulary();
  const std::vector<TokenId> prefix = {v.id("<PRP>")};
  const auto a = m.next_distribution(encode_event(v, ev({"<PRP>", "act-114-1-1", nullptr, "to", "event.n.01"})), prefix);
  const auto b = m.next_distribution(encode_event(v, ev({"<PERSON>0", "send-11.1", "message.n.01", "to", "<ORG>0"})), prefix);
  EXPECT_EQ(a, b);
}

TEST(NGram, CopyBiasVanishesOnceEventIsConsumed) {
  const auto m = oracle_model(2, 0.3);
  const auto& v = m.vocabulary();
  const auto e = encode_event(v, ev({"<PRP>", "act-114-1-1", nullptr, "to", "event.n.01"}));
  const auto prefix = v.encode(words("<PRP> act-114-1-1 to event.n.01"));
  const auto d = m.next_distribution(e, prefix);
  const auto plain = m.ngram_distribution(prefix);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], plain[i], 1e-15);
}

TEST(NGram, CopyBiasIsMonotone) {
  const auto biased = oracle_model(2, 0.3);
  const auto plain = biased.with_copy_bias(0.0);
  const auto& v = biased.vocabulary();
  const auto e = encode_event(v, ev({"<PERSON>0", "send-11.1", "message.n.01", "to", "<ORG>0"}));
  for (const auto& pre : {"", "<PERSON>0", "<PERSON>0 send-11.1 the", "the"}) {
    const auto prefix = v.encode(words(pre));
    const auto a = biased.next_distribution(e, prefix);
    const auto b = plain.next_distribution(e, prefix);
    for (TokenId t : unconsumed(e, prefix)) EXPECT_GE(a[t], b[t]) << pre << " " << v.token(t);
  }
}

TEST(NGram, BackwardEqualsForwardOnReversal) {
  NGramConfig fwd;
  fwd.copy_bias = 0.0;
  NGramConfig bwd = fwd;
  bwd.direction = Direction::Backward;
  const auto pairs = test::fixture_pairs("train");
  const auto f = NGramModel::train(pairs, fwd);
  const auto b = NGramModel::train(pairs, bwd);
  std::vector<TrainingPair> rev = pairs;
  for (auto& p : rev) std::reverse(p.sentence.begin(), p.sentence.end());
  const auto fr = NGramModel::train(rev, fwd);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& p = pairs[i];
    auto r = p.sentence;
    std::reverse(r.begin(), r.end());
    const auto e = encode_event(b.vocabulary(), p.event);
    EXPECT_NEAR(b.sentence_nll(e, p.sentence), fr.sentence_nll(e, r), 1e-12);
  }
  EXPECT_EQ(f.vocabulary().tokens(), b.vocabulary().tokens());
}

TEST(SequenceModel, NllOfDeterministicAndUniformModels) {
  const Vocabulary v({"a", "b", "c", "d", "e", "f"});
  ASSERT_EQ(v.size(), 9u);
  const test::FunctionModel sure(v, [&](const EncodedEvent&, std::span<const TokenId> prefix) {
    std::vector<double> d(v.size(), 0.0);
    d[prefix.empty() ? v.id("a") : Vocabulary::kEos] = 1.0;
    return d;
  });
  const auto e = encode_event(v, std::vector<std::string>{"a"});
  const std::vector<TokenId> sent = {v.id("a")};
  EXPECT_DOUBLE_EQ(sentence_nll(sure, e, sent), 0.0);

  // Eight outcomes: everything but <s>.
  const test::FunctionModel uniform(v, [&](const EncodedEvent&, std::span<const TokenId>) {
    std::vector<double> d(v.size(), 1.0 / 8.0);
    d[Vocabulary::kBegin] = 0.0;
    return d;
  });
  EXPECT_NEAR(sentence_nll(uniform, e, v.encode(words("a b c"))), 3.0, 1e-12);
}

TEST(SequenceModel, OovSurfaceSurvivesDecoding) {
  const Vocabulary v({"a", "b"});
  const auto e = encode_event(v, std::vector<std::string>{"a", "zeta.n.01"});
  EXPECT_TRUE(e.has_oov());
  EXPECT_EQ(e.ids[1], Vocabulary::kUnk);
  const std::vector<TokenId> ids = {v.id("a"), Vocabulary::kUnk, Vocabulary::kUnk};
  EXPECT_EQ(decode_ids(v, e, ids), (GeneralizedSentence{"a", "zeta.n.01", "<unk>"}));
}

TEST(NGram, SerializationRoundTrip) {
  const auto m = oracle_model(3, 0.3);
  const auto dir = test::scratch_dir("ngram_roundtrip");
  m.save(dir / "m.json");
  const auto l = NGramModel::load(dir / "m.json");
  const auto& v = m.vocabulary();
  const auto e = encode_event(v, ev({"<PRP>", "act-114-1-1", nullptr, "to", "event.n.01"}));
  const auto prefix = v.encode(words("<PRP> act-114-1-1"));
  EXPECT_EQ(m.next_distribution(e, prefix), l.next_distribution(e, prefix));
  EXPECT_EQ(l.config().order, 3);
}
