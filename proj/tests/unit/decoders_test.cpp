#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

#include "e2s/decoders.hpp"
#include "e2s/ngram_model.hpp"
#include "support.hpp"

using namespace e2s;
using e2s::test::ev;
using e2s::test::words;

namespace {

const nlohmann::json& ngram_oracle() {
  static const auto j = test::read_json(test::frozen("ngram.json"));
  return j;
}

NGramModel beam_fixture(double lambda) {
  NGramConfig cfg;
  cfg.order = 2;
  cfg.copy_bias = lambda;
  return NGramModel::train(
      ngram_oracle().at("beam").at("sentences").get<std::vector<GeneralizedSentence>>(), cfg);
}

// Chain model: a -> b -> c -> <eos>, probability 1 each.
test::FunctionModel chain_model(const Vocabulary& v) {
  return test::FunctionModel(v, [&v](const EncodedEvent&, std::span<const TokenId> prefix) {
    std::vector<double> d(v.size(), 0.0);
    const char* next[] = {"a", "b", "c"};
    if (prefix.size() < 3) d[v.id(next[prefix.size()])] = 1.0;
    else d[Vocabulary::kEos] = 1.0;
    return d;
  });
}

}  // namespace

TEST(Beam, MatchesExhaustiveOracle) {
  for (double lambda : {0.0, 0.3}) {
    const auto m = beam_fixture(lambda);
    ASSERT_EQ(m.vocabulary().tokens(),
              ngram_oracle().at("beam").at("vocabulary").get<std::vector<std::string>>());
    for (const auto& c : ngram_oracle().at("beam").at("cases")) {
      if (c.at("lambda").get<double>() != lambda) continue;
      const auto e = encode_event(m.vocabulary(), c.at("event").get<std::vector<std::string>>());
      const auto d = beam_decode(m, e, {5, c.at("max_length").get<int>()});
      EXPECT_EQ(d.sentence, c.at("best").get<GeneralizedSentence>()) << c.dump();
      EXPECT_NEAR(d.logprob, c.at("logprob").get<double>(), 1e-9) << c.dump();
    }
  }
}

TEST(Beam, WidthOneIsGreedy) {
  const auto m = beam_fixture(0.3);
  const auto& v = m.vocabulary();
  const auto e = encode_event(v, words("b a c"));
  std::vector<TokenId> greedy;
  for (;;) {
    const auto d = admissible(m.next_distribution(e, greedy), e, greedy, 6);
    const auto best = static_cast<TokenId>(std::max_element(d.begin(), d.end()) - d.begin());
    if (best == Vocabulary::kEos) break;
    greedy.push_back(best);
  }
  EXPECT_EQ(beam_decode(m, e, {1, 6}).ids, greedy);
}

TEST(Beam, ChainModelGivesTheUniqueSentence) {
  const Vocabulary v({"a", "b", "c"});
  const auto m = chain_model(v);
  const auto d = beam_decode(m, encode_event(v, words("a")), {5, 10});
  EXPECT_EQ(d.sentence, words("a b c"));
  EXPECT_NEAR(d.logprob, 0.0, 1e-12);
  EXPECT_NEAR(d.confidence, 1.0, 1e-12);
}

TEST(Beam, WiderBeamNeverWorse) {
  const auto& m = test::fixture_forward();
  const auto pairs = test::fixture_pairs("validation");
  for (std::size_t i = 0; i < 10; ++i) {
    const auto e = encode_event(m.vocabulary(), pairs[i].event);
    double prev = -INFINITY;
    for (int w = 1; w <= 5; ++w) {
      const auto d = beam_decode(m, e, {w, 12});
      EXPECT_GE(d.logprob, prev - 1e-12) << "width " << w;
      EXPECT_GE(d.confidence, 0.0);
      EXPECT_LE(d.confidence, 1.0);
      prev = d.logprob;
    }
  }
}

TEST(Playout, MatchesOracle) {
  const auto j = test::read_json(test::frozen("metrics.json"));
  for (const auto& c : j.at("playout")) {
    std::vector<Slot> slots;
    for (int s : c.at("slots")) slots.push_back(static_cast<Slot>(s));
    SlotWeights w{};
    const auto wv = c.at("weights").get<std::vector<double>>();
    std::copy(wv.begin(), wv.end(), w.begin());
    EXPECT_NEAR(playout_score(c.at("event").get<std::vector<std::string>>(), slots,
                              c.at("sequence").get<GeneralizedSentence>(), w),
                c.at("score").get<double>(), 1e-12)
        << c.at("name");
  }
}

TEST(Playout, Components) {
  const auto e = ev({"<PRP>", "act-114-1-1", nullptr, "to", "event.n.01"});
  // Exactly the event tokens: both halves are 1.
  EXPECT_NEAR(playout_score(e, e.tokens(), uniform_slot_weights()), 1.0, 1e-12);
  // No event token at all: coverage is 0 and BLEU sits at the floor.
  EXPECT_LT(playout_score(e, words("the ship ."), uniform_slot_weights()), 1e-8);
}

TEST(MCBeam, ScoreUpdateHoldsOnEveryStep) {
  const auto& m = test::fixture_forward();
  const auto pairs = test::fixture_pairs("validation");
  MCBeamConfig cfg;
  cfg.playouts = 3;
  cfg.alpha = 0.7;
  cfg.max_length = 12;
  for (std::size_t i = 0; i < 5; ++i) {
    cfg.seed = i;
    const auto r = mc_beam_decode(m, encode_event(m.vocabulary(), pairs[i].event), cfg);
    ASSERT_FALSE(r.trace.empty());
    for (const auto& t : r.trace) {
      double mean = 0.0;
      for (double p : t.playouts) mean += p;
      mean /= static_cast<double>(t.playouts.size());
      EXPECT_NEAR(t.score, cfg.alpha * t.parent_score + (1 - cfg.alpha) * mean, 1e-9);
      EXPECT_EQ(t.playouts.size(), t.finished ? 1u : 3u);
    }
    EXPECT_GE(r.best.confidence, 0.0);
    EXPECT_LE(r.best.confidence, 1.0);
  }
}

TEST(MCBeam, AlphaOneFreezesScores) {
  const auto& m = test::fixture_forward();
  MCBeamConfig cfg;
  cfg.alpha = 1.0;
  cfg.max_length = 10;
  const auto r = mc_beam_decode(m, encode_event(m.vocabulary(), test::fixture_pairs("test")[0].event), cfg);
  for (const auto& t : r.trace) EXPECT_EQ(t.score, 0.0);
}

TEST(MCBeam, UpdateArithmetic) {
  // s_{t-1} = 0.5, alpha = 0.7, mean playout 0.9.
  EXPECT_NEAR(0.7 * 0.5 + 0.3 * 0.9, 0.62, 1e-12);
  const Vocabulary v({"a", "b", "c"});
  const auto chain = chain_model(v);
  MCBeamConfig cfg;
  cfg.alpha = 0.7;
  cfg.beam_width = 1;
  const auto r = mc_beam_decode(chain, encode_event(v, words("a b c")), cfg);
  ASSERT_FALSE(r.trace.empty());
  // The chain's only playout is "a b c", a perfect score, so each step moves 30% of the way to 1.
  double s = 0.0;
  for (const auto& t : r.trace) {
    EXPECT_NEAR(t.parent_score, s, 1e-12);
    s = 0.7 * s + 0.3;
    EXPECT_NEAR(t.score, s, 1e-12);
  }
  EXPECT_EQ(r.best.sentence, words("a b c"));
}

TEST(MCBeam, SameSeedSameOutput) {
  const auto& m = test::fixture_forward();
  MCBeamConfig cfg;
  cfg.seed = 42;
  const auto e = encode_event(m.vocabulary(), test::fixture_pairs("test")[3].event);
  const auto a = mc_beam_decode(m, e, cfg);
  const auto b = mc_beam_decode(m, e, cfg);
  EXPECT_EQ(a.best.sentence, b.best.sentence);
  EXPECT_EQ(a.best.confidence, b.best.confidence);
  EXPECT_EQ(a.trace.size(), b.trace.size());
}

TEST(MCBeam, RejectsBadConfig) {
  MCBeamConfig cfg;
  cfg.playouts = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PlayoutWeights, ReplayMatchesOracle) {
  const auto j = test::read_json(test::frozen("weights.json"));
  std::vector<EventTuple> events;
  for (const auto& e : j.at("events")) events.push_back(test::ev_json(e));
  const auto log = j.at("log").get<std::vector<GeneralizedSentence>>();
  const auto seen = j.at("weights_seen").get<std::vector<std::vector<double>>>();
  std::size_t call = 0;
  const auto r = learn_playout_weights(
      events,
      [&](const EventTuple&, const SlotWeights& w) {
        for (std::size_t i = 0; i < kSlotCount; ++i) EXPECT_NEAR(w[i], seen.at(call)[i], 1e-12);
        return log.at(call++);
      },
      {j.at("delta").get<double>(), j.at("epochs").get<int>()});
  EXPECT_EQ(call, log.size());
  const auto want = j.at("weights").get<std::vector<double>>();
  for (std::size_t i = 0; i < kSlotCount; ++i) EXPECT_NEAR(r.weights[i], want[i], 1e-12);
}

TEST(PlayoutWeights, PerfectDecoderKeepsUniform) {
  const std::vector<EventTuple> events = {ev({"<PRP>", "act-114-1-1", nullptr, "to", "event.n.01"}),
                                          ev({"<PERSON>0", "send-11.1", "message.n.01", "to", "<ORG>0"})};
  const auto r = learn_playout_weights(events, [](const EventTuple& e, const SlotWeights&) { return e.tokens(); });
  for (double w : r.weights) EXPECT_DOUBLE_EQ(w, 0.2);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.epochs, 1);
}

TEST(PlayoutWeights, DroppedModifierGrowsMost) {
  const std::vector<EventTuple> events = {ev({"<PERSON>0", "send-11.1", "message.n.01", "to", "<ORG>0"})};
  const auto r = learn_playout_weights(
      events,
      [](const EventTuple& e, const SlotWeights&) {
        auto t = e.tokens();
        t.pop_back();
        return t;
      },
      {0.1, 1});
  for (std::size_t i = 0; i + 1 < kSlotCount; ++i) EXPECT_GT(r.weights[4], r.weights[i]);
}

TEST(Fsm, StateCounts) {
  const Vocabulary v({"a", "b", "c", "d", "e"});
  const auto five = build_constraint_fsm(encode_event(v, words("a b c d e")));
  EXPECT_EQ(five.state_count(), 32u);
  EXPECT_EQ(five.min_matched(), 3u);
  const auto one = build_constraint_fsm(encode_event(v, words("a")));
  EXPECT_EQ(one.state_count(), 2u);
  EXPECT_EQ(one.accepting_states(), std::vector<ConstraintFSM::State>{1});
  const auto three = build_constraint_fsm(encode_event(v, words("a b c")), 3);
  EXPECT_EQ(three.accepting_states(), std::vector<ConstraintFSM::State>{7});
}

TEST(Fsm, TransitionsOnlyAddTokens) {
  const Vocabulary v({"a", "b", "c"});
  const auto f = build_constraint_fsm(encode_event(v, words("a b c")));
  for (ConstraintFSM::State s = 0; s < f.state_count(); ++s)
    for (TokenId t = 0; t < static_cast<TokenId>(v.size()); ++t) {
      const auto n = f.advance(s, t);
      EXPECT_EQ(n & s, s);
      EXPECT_LE(std::popcount(n), std::popcount(s) + 1);
    }
  EXPECT_EQ(f.advance(f.advance(0, v.id("a")), v.id("a")), 1u);
}

TEST(Fsm, ForcedModelEmitsEveryToken) {
  const Vocabulary v({"a", "b", "c", "x"});
  // Prefers "x" and only ever spends a little mass on the constraints.
  const test::FunctionModel m(v, [&v](const EncodedEvent&, std::span<const TokenId> prefix) {
    std::vector<double> d(v.size(), 0.0);
    d[v.id("x")] = 0.7;
    d[v.id("a")] = d[v.id("b")] = d[v.id("c")] = 0.05;
    d[Vocabulary::kEos] = prefix.empty() ? 0.0 : 0.15;
    d[v.id("x")] += prefix.empty() ? 0.15 : 0.0;
    return d;
  });
  FsmConfig cfg;
  cfg.min_matched = 3;
  const auto r = fsm_decode(m, encode_event(v, words("a b c")), cfg);
  ASSERT_TRUE(r.has_value());
  for (const auto* t : {"a", "b", "c"})
    EXPECT_NE(std::find(r->sentence.begin(), r->sentence.end(), t), r->sentence.end()) << t;
}

TEST(Fsm, FailsWhenConstraintsAreUnreachable) {
  const Vocabulary v({"a", "b", "x", "y"});
  const test::FunctionModel m(v, [&v](const EncodedEvent&, std::span<const TokenId>) {
    std::vector<double> d(v.size(), 0.0);
    d[v.id("x")] = 0.5;
    d[v.id("y")] = 0.3;
    d[Vocabulary::kEos] = 0.2;
    return d;
  });
  FsmConfig cfg;
  cfg.horizon = 20;
  EXPECT_FALSE(fsm_decode(m, encode_event(v, words("a b")), cfg).has_value());
}

TEST(Fsm, OutputsMeetMinMatchedOnFixture) {
  const auto& m = test::fixture_forward();
  const auto pairs = test::fixture_pairs("validation");
  int produced = 0;
  for (const auto& p : pairs) {
    const auto e = encode_event(m.vocabulary(), p.event);
    const auto fsm = build_constraint_fsm(e);
    const auto r = fsm_decode(m, e, FsmConfig{});
    if (!r) continue;
    ++produced;
    std::set<std::string> hit;
    for (const auto& t : r->sentence)
      if (std::find(fsm.surfaces().begin(), fsm.surfaces().end(), t) != fsm.surfaces().end()) hit.insert(t);
    EXPECT_GE(hit.size(), fsm.min_matched()) << p.event.to_string();
  }
  EXPECT_GT(produced, 0);
}
