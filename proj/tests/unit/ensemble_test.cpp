#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "e2s/ensemble.hpp"
#include "support.hpp"

using namespace e2s;
using e2s::test::ev;
using e2s::test::ScriptedRealizer;
using e2s::test::words;

namespace {

MemberOutput out(const std::string& text, double conf) { return {words(text), conf}; }

struct Stubs {
  ScriptedRealizer retedit{out("retedit says .", 0.2)};
  ScriptedRealizer templates{out("templates says .", 0.8)};
  ScriptedRealizer mc{out("mc says .", 0.5)};
  ScriptedRealizer fsm{out("fsm says .", 0.0)};
  ScriptedRealizer beam{out("beam says .", 0.0)};
  MemberSet set() const {
    return {{Member::RetEdit, &retedit}, {Member::Templates, &templates}, {Member::MCBeam, &mc},
            {Member::Fsm, &fsm}, {Member::Beam, &beam}};
  }
};

EnsembleConfig thresholds(double r, double t, double m) {
  EnsembleConfig cfg;
  cfg.thresholds = {{Member::RetEdit, r}, {Member::Templates, t}, {Member::MCBeam, m}};
  return cfg;
}

const EventTuple kEvent = ev({"<PRP>", "say-37.7", nullptr, nullptr, nullptr});

}  // namespace

TEST(Cascade, FirstPassingMemberWins) {
  Stubs s;
  const auto r = cascade_realize(kEvent, s.set(), thresholds(0.5, 0.7, 0.6));
  EXPECT_EQ(r.member_used, Member::Templates);
  EXPECT_EQ(r.sentence, words("templates says ."));
  EXPECT_DOUBLE_EQ(r.confidence, 0.8);
  EXPECT_EQ(s.retedit.calls, 1);
  EXPECT_EQ(s.templates.calls, 1);
  EXPECT_EQ(s.mc.calls + s.fsm.calls + s.beam.calls, 0);
  ASSERT_EQ(r.invoked.size(), 2u);
  EXPECT_FALSE(r.invoked[0].accepted);
  EXPECT_TRUE(r.invoked[1].accepted);
}

TEST(Cascade, RetEditAtDistanceZeroStopsEarly) {
  Stubs s;
  s.retedit.set(kEvent, out("<PRP> say-37.7 .", 1.0));
  const auto r = cascade_realize(kEvent, s.set(), thresholds(0.9, 0.9, 0.9));
  EXPECT_EQ(r.member_used, Member::RetEdit);
  EXPECT_EQ(s.templates.calls + s.mc.calls + s.fsm.calls + s.beam.calls, 0);
}

TEST(Cascade, FullFallthroughReachesBeam) {
  Stubs s;
  s.fsm.set(kEvent, MemberOutput{});  // failure
  const auto r = cascade_realize(kEvent, s.set(), thresholds(1.01, 1.01, 1.01));
  EXPECT_EQ(r.member_used, Member::Beam);
  EXPECT_EQ(r.sentence, words("beam says ."));
  EXPECT_EQ(r.invoked.size(), 5u);
}

TEST(Cascade, FsmSuccessIsAccepted) {
  Stubs s;
  const auto r = cascade_realize(kEvent, s.set(), thresholds(1.01, 1.01, 1.01));
  EXPECT_EQ(r.member_used, Member::Fsm);
  EXPECT_EQ(s.beam.calls, 0);
}

TEST(Cascade, PartialEnsembles) {
  Stubs s;
  EnsembleConfig cfg;
  cfg.members = {Member::Templates, Member::Fsm, Member::Beam};
  cfg.thresholds = {{Member::Templates, 0.9}};
  cfg.validate();
  EXPECT_EQ(cfg.label(), "Templates+FSM");
  const auto r = cascade_realize(kEvent, s.set(), cfg);
  EXPECT_EQ(r.member_used, Member::Fsm);
  EXPECT_EQ(s.retedit.calls, 0);
  EnsembleConfig bad;
  bad.members = {Member::Templates, Member::RetEdit, Member::Beam};
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_EQ(EnsembleConfig{}.label(), "Full Ensemble");
}

TEST(Cascade, RaisingAThresholdNeverRaisesItsUse) {
  const auto pairs = test::fixture_pairs("validation");
  Stubs s;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double c = static_cast<double>(i % 10) / 10.0;
    s.retedit.set(pairs[i].event, out("r .", c));
    s.templates.set(pairs[i].event, out("t .", 1.0 - c));
  }
  double prev = 101.0;
  for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto cfg = thresholds(t, 0.5, 0.5);
    std::vector<RunLogEntry> log;
    for (const auto& p : pairs) log.push_back({p.event, cascade_realize(p.event, s.set(), cfg)});
    const double pct = utilization(log, cfg, "test").percent.at(Member::RetEdit);
    EXPECT_LE(pct, prev);
    prev = pct;
  }
}

TEST(Utilization, SumsToHundred) {
  const auto cfg = EnsembleConfig{};
  std::vector<RunLogEntry> log;
  const Member used[] = {Member::RetEdit, Member::RetEdit, Member::Templates, Member::Templates,
                         Member::MCBeam,  Member::MCBeam,  Member::Fsm,       Member::Fsm};
  for (Member m : used) {
    CascadeResult r;
    r.member_used = m;
    log.push_back({kEvent, r});
  }
  const auto rep = utilization(log, cfg, "test");
  double total = 0.0;
  for (const auto& [m, p] : rep.percent) total += p;
  EXPECT_NEAR(total, 100.0, 0.01);
  EXPECT_DOUBLE_EQ(rep.percent.at(Member::RetEdit), 25.0);
  EXPECT_DOUBLE_EQ(rep.percent.at(Member::Beam), 0.0);
  EXPECT_EQ(rep.events, 8u);

  std::stringstream jsonl;
  for (const auto& e : log) jsonl << e.to_json().dump() << '\n';
  const auto again = utilization_from_jsonl(jsonl, cfg, "pipeline");
  EXPECT_EQ(again.percent, rep.percent);
}

TEST(Utilization, TableShape) {
  UtilizationReport test_rep{"test", 100, {{Member::RetEdit, 94.91}, {Member::Templates, 0.22},
                                           {Member::MCBeam, 4.29}, {Member::Fsm, 0.15},
                                           {Member::Beam, 0.43}}};
  EnsembleConfig partial;
  partial.members = {Member::RetEdit, Member::MCBeam, Member::Beam};
  partial.thresholds = {{Member::RetEdit, 0.5}, {Member::MCBeam, 0.5}};
  const auto table = format_utilization_table({{EnsembleConfig{}, test_rep, std::nullopt},
                                               {partial, std::nullopt, std::nullopt}});
  std::istringstream in(table);
  std::string header, sub, rule, full, part;
  std::getline(in, header);
  std::getline(in, sub);
  std::getline(in, rule);
  std::getline(in, full);
  std::getline(in, part);
  for (const auto* col : {"RetEdit", "Templates", "Monte Carlo", "FSM", "Beam"})
    EXPECT_NE(header.find(col), std::string::npos) << col;
  EXPECT_NE(sub.find("Test"), std::string::npos);
  EXPECT_NE(sub.find("Pipeline"), std::string::npos);
  EXPECT_EQ(full.rfind("Full Ensemble", 0), 0u);
  EXPECT_NE(full.find("94.91"), std::string::npos);
  EXPECT_NE(full.find("0.43"), std::string::npos);
  EXPECT_EQ(part.rfind("RetEdit+MC", 0), 0u);
  EXPECT_EQ(header.size(), full.size());
}

TEST(Tune, SingleTupleGrid) {
  Stubs s;
  const std::vector<TrainingPair> val = {{kEvent, words("beam says .")}};
  ThresholdGrid grid;
  grid.tuples = {{0.4, 0.6, 0.8}};
  const auto r = tune_thresholds(val, s.set(), EnsembleConfig{}, grid);
  EXPECT_EQ(r.thresholds.at(Member::RetEdit), 0.4);
  EXPECT_EQ(r.thresholds.at(Member::Templates), 0.6);
  EXPECT_EQ(r.thresholds.at(Member::MCBeam), 0.8);
}

TEST(Tune, GoldMemberIsAdmitted) {
  const auto pairs = test::fixture_pairs("validation");
  ScriptedRealizer gold, beam(out("nothing useful here", 0.0));
  for (const auto& p : pairs) gold.set(p.event, {p.sentence, 0.4});
  EnsembleConfig cfg;
  cfg.members = {Member::RetEdit, Member::Beam};
  cfg.thresholds = {{Member::RetEdit, 0.5}};
  const auto r = tune_thresholds(pairs, {{Member::RetEdit, &gold}, {Member::Beam, &beam}}, cfg,
                                 ThresholdGrid::standard(1));
  EXPECT_LE(r.thresholds.at(Member::RetEdit), 0.4);
  EXPECT_NEAR(r.bleu4, 1.0, 1e-9);
  EXPECT_EQ(r.evaluated.size(), 9u);
}

TEST(Tune, MatchesExhaustiveOracle) {
  const auto j = test::read_json(test::frozen("tune.json"));
  std::map<Member, ScriptedRealizer> stubs;
  for (Member m : kMemberOrder) stubs.emplace(m, ScriptedRealizer{});
  std::vector<TrainingPair> val;
  for (const auto& p : j.at("pairs")) {
    const auto e = test::ev_json(p.at("event"));
    val.push_back({e, p.at("reference").get<GeneralizedSentence>()});
    for (const auto& [name, o] : p.at("outputs").items()) {
      MemberOutput mo;
      if (!o[0].is_null()) mo.sentence = o[0].get<GeneralizedSentence>();
      mo.confidence = o[1].get<double>();
      stubs.at(member_from_name(name)).set(e, mo);
    }
  }
  MemberSet set;
  for (auto& [m, s] : stubs) set[m] = &s;
  const auto grid = ThresholdGrid::product(3, j.at("values").get<std::vector<double>>());
  ASSERT_EQ(grid.tuples.size(), 27u);
  const auto r = tune_thresholds(val, set, EnsembleConfig{}, grid);
  ASSERT_EQ(r.evaluated.size(), j.at("evaluated").size());
  for (std::size_t i = 0; i < r.evaluated.size(); ++i) {
    EXPECT_EQ(r.evaluated[i].first, j.at("evaluated")[i].at("thresholds").get<std::vector<double>>());
    EXPECT_NEAR(r.evaluated[i].second, j.at("evaluated")[i].at("bleu4").get<double>(), 1e-12);
  }
  const auto best = j.at("best").get<std::vector<double>>();
  EXPECT_EQ(r.thresholds.at(Member::RetEdit), best[0]);
  EXPECT_EQ(r.thresholds.at(Member::Templates), best[1]);
  EXPECT_EQ(r.thresholds.at(Member::MCBeam), best[2]);
  EXPECT_NEAR(r.bleu4, j.at("best_bleu4").get<double>(), 1e-12);
  // Each member ran once per event, not once per tuple.
  for (auto& [m, s] : stubs) EXPECT_EQ(s.calls, static_cast<int>(val.size())) << member_name(m);
}

TEST(EnsembleConfig, JsonRoundTrip) {
  const auto cfg = thresholds(0.9, 0.2, 0.9);
  const auto back = EnsembleConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.members, cfg.members);
  EXPECT_EQ(back.thresholds, cfg.thresholds);
}
