#include <benchmark/benchmark.h>

#include <filesystem>

#include "e2s/decoders.hpp"
#include "e2s/eventify.hpp"
#include "e2s/lexicon.hpp"
#include "e2s/ngram_model.hpp"
#include "e2s/retedit.hpp"
#include "e2s/templater.hpp"

namespace fs = std::filesystem;
using namespace e2s;

namespace {

fs::path fixture(const char* name) { return fs::path(E2S_SOURCE_DIR) / "tests/fixtures" / name; }

struct Fixture {
  Lexicon lexicon = Lexicon::load(fixture("lexicon.json"));
  std::vector<Story> stories = read_interchange(fixture("corpus.jsonl"));
  EventifiedCorpus corpus = eventify_corpus(stories, lexicon, 1);
  std::vector<TrainingPair> train = to_pairs(corpus.records_for(corpus.split.train));
  std::vector<TrainingPair> test = to_pairs(corpus.records_for(corpus.split.test));
  NGramModel forward = NGramModel::train(train, NGramConfig{});
  NGramModel backward = NGramModel::train(train, [] {
    NGramConfig c;
    c.direction = Direction::Backward;
    return c;
  }());
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

EncodedEvent encoded(std::size_t i) {
  const auto& f = fx();
  return encode_event(f.forward.vocabulary(), f.test[i % f.test.size()].event);
}

void BM_NextDistribution(benchmark::State& state) {
  const auto e = encoded(0);
  const auto prefix = fx().test[0].sentence;
  std::vector<TokenId> ids;
  for (const auto& t : prefix) ids.push_back(fx().forward.vocabulary().id(t));
  std::size_t i = 0;
  for (auto _ : state) {
    const auto d = fx().forward.next_distribution(e, std::span(ids).first(i % (ids.size() + 1)));
    benchmark::DoNotOptimize(d.data());
    ++i;
  }
}
BENCHMARK(BM_NextDistribution);

void BM_Beam(benchmark::State& state) {
  BeamConfig cfg;
  cfg.width = static_cast<int>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(beam_decode(fx().forward, encoded(i++), cfg));
}
BENCHMARK(BM_Beam)->Arg(1)->Arg(5)->Arg(10);

void BM_MonteCarlo(benchmark::State& state) {
  MCBeamConfig cfg;
  cfg.playouts = static_cast<int>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mc_beam_decode(fx().forward, encoded(i++), cfg));
}
BENCHMARK(BM_MonteCarlo)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Fsm(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(fsm_decode(fx().forward, encoded(i++), FsmConfig{}));
}
BENCHMARK(BM_Fsm)->Unit(benchmark::kMillisecond);

void BM_Templater(benchmark::State& state) {
  const auto& f = fx();
  const Templater t(f.forward, f.backward, FrameRules::load(fs::path(E2S_SOURCE_DIR) / "core/data/frame_rules.json"),
                    WordClassTable::from_records(f.corpus.records_for(f.corpus.split.train)), &f.lexicon);
  TemplateConfig cfg;
  std::size_t i = 0;
  for (auto _ : state) {
    cfg.seed = i;
    benchmark::DoNotOptimize(t.realize(f.test[i++ % f.test.size()].event, cfg));
  }
}
BENCHMARK(BM_Templater);

void BM_Retrieve(benchmark::State& state) {
  const auto index = RetrievalIndex::build(fx().train);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(index.retrieve(fx().test[i++ % fx().test.size()].event));
}
BENCHMARK(BM_Retrieve);

void BM_EventifyCorpus(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(eventify_corpus(fx().stories, fx().lexicon, 1));
}
BENCHMARK(BM_EventifyCorpus)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
