#include "support.hpp"

#include <fstream>
#include <sstream>

#include "e2s/common.hpp"

namespace fs = std::filesystem;

namespace e2s::test {

fs::path source_dir() { return fs::path(E2S_SOURCE_DIR); }
fs::path fixture(const std::string& name) { return source_dir() / "tests/fixtures" / name; }
fs::path frozen(const std::string& name) { return source_dir() / "tests/oracles/frozen" / name; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IOError", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(read_file(path)); }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::path(E2S_BINARY_DIR) / "scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const Lexicon& fixture_lexicon() {
  static const Lexicon lex = [] {
    Lexicon l = Lexicon::load(fixture("lexicon.json"));
    GenderTable g = l.genders();
    g.merge(GenderTable::from_csv(fixture("gender.csv")));
    l.set_genders(std::move(g));
    return l;
  }();
  return lex;
}

const EventifiedCorpus& fixture_corpus() {
  static const EventifiedCorpus corpus =
      eventify_corpus(read_interchange(fixture("corpus.jsonl")), fixture_lexicon(), 1);
  return corpus;
}

std::vector<TrainingPair> fixture_pairs(const std::string& partition) {
  const auto& c = fixture_corpus();
  const auto& ids = partition == "train" ? c.split.train
                    : partition == "validation" ? c.split.validation
                                                : c.split.test;
  return to_pairs(c.records_for(ids));
}

const NGramModel& fixture_forward() {
  static const NGramModel m = NGramModel::train(fixture_pairs("train"), NGramConfig{});
  return m;
}

const NGramModel& fixture_backward() {
  static const NGramModel m = [] {
    NGramConfig cfg;
    cfg.direction = Direction::Backward;
    return NGramModel::train(fixture_pairs("train"), cfg);
  }();
  return m;
}

EventTuple ev(const std::array<const char*, 5>& slots) {
  std::array<std::optional<std::string>, kSlotCount> s;
  for (std::size_t i = 0; i < kSlotCount; ++i)
    if (slots[i] && *slots[i]) s[i] = slots[i];
  return EventTuple::from_surfaces(s);
}

EventTuple ev_json(const nlohmann::json& j) { return EventTuple::from_json(j); }

std::vector<std::string> words(const std::string& text) { return split_ws(text); }

}  // namespace e2s::test
