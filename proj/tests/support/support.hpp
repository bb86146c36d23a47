#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/ensemble.hpp"
#include "e2s/event.hpp"
#include "e2s/eventify.hpp"
#include "e2s/lexicon.hpp"
#include "e2s/ngram_model.hpp"
#include "e2s/sequence_model.hpp"

namespace e2s::test {

std::filesystem::path source_dir();
std::filesystem::path fixture(const std::string& name);
std::filesystem::path frozen(const std::string& name);
nlohmann::json read_json(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

/// Fresh scratch directory under the build tree, emptied on creation.
std::filesystem::path scratch_dir(const std::string& name);

/// The compiled fixture lexicon with the fixture gender table merged in.
const Lexicon& fixture_lexicon();

/// Eventified fixture corpus (seed 1, 8:1:1).
const EventifiedCorpus& fixture_corpus();
std::vector<TrainingPair> fixture_pairs(const std::string& partition);
const NGramModel& fixture_forward();
const NGramModel& fixture_backward();

/// [s, v, o, p, m] with nullopt for empty slots; "" also reads as empty.
EventTuple ev(const std::array<const char*, 5>& slots);
EventTuple ev_json(const nlohmann::json& j);
std::vector<std::string> words(const std::string& text);

/// A model defined by a function from (event, prefix) to a distribution.
class FunctionModel final : public SequenceModel {
 public:
  using Fn = std::function<std::vector<double>(const EncodedEvent&, std::span<const TokenId>)>;
  FunctionModel(Vocabulary vocab, Fn fn) : vocab_(std::move(vocab)), fn_(std::move(fn)) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::vector<double> next_distribution(const EncodedEvent& event,
                                        std::span<const TokenId> prefix) const override {
    return fn_(event, prefix);
  }

 private:
  Vocabulary vocab_;
  Fn fn_;
};

/// Realizer returning a fixed output per event (by to_string), counting calls.
class ScriptedRealizer final : public Realizer {
 public:
  explicit ScriptedRealizer(MemberOutput fallback = {}) : fallback_(std::move(fallback)) {}
  void set(const EventTuple& e, MemberOutput out) { script_[e.to_string()] = std::move(out); }
  MemberOutput realize(const EventTuple& event) const override {
    ++calls;
    auto it = script_.find(event.to_string());
    return it == script_.end() ? fallback_ : it->second;
  }
  mutable int calls = 0;

 private:
  MemberOutput fallback_;
  std::map<std::string, MemberOutput> script_;
};

}  // namespace e2s::test
