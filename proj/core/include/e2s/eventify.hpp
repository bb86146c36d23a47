#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/common.hpp"
#include "e2s/event.hpp"
#include "e2s/lexicon.hpp"
#include "e2s/story_memory.hpp"

namespace e2s {

struct ParsedToken {
  std::string surface;
  std::string lemma;
  std::string pos;  // Penn Treebank tag
};

/// Dependency edge; head == -1 marks a root.
struct DepEdge {
  int head = -1;
  int child = 0;
  std::string relation;
};

/// Half-open token span [start, end) with a label (NER category or phrase label).
struct Span {
  int start = 0;
  int end = 0;
  std::string label;
};

/// One parsed sentence of the interchange format.
struct ParsedSentence {
  std::vector<ParsedToken> tokens;
  std::vector<DepEdge> dep_edges;
  std::vector<Span> ner_spans;
  std::vector<Span> constituents;  // may be empty when the parser gave none

  /// Throws FormatError when an edge or span index falls outside the tokens.
  void validate() const;
  std::string text() const;
  /// Index of the edge whose child is `i`, if any.
  std::optional<DepEdge> head_edge(int i) const;
  std::vector<int> children(int head, std::string_view relation = {}) const;

  nlohmann::json to_json() const;
  static ParsedSentence from_json(const nlohmann::json& j);
};

struct Story {
  std::string id;
  std::string title;
  std::string source;
  std::vector<ParsedSentence> sentences;

  nlohmann::json to_json() const;
  static Story from_json(const nlohmann::json& j);
};

/// Reads interchange JSONL (one story per line). Errors name the line.
std::vector<Story> read_interchange(std::istream& in);
std::vector<Story> read_interchange(const std::filesystem::path& path);

class NoVerb : public Error {
 public:
  explicit NoVerb(const std::string& sentence)
      : Error("NoVerb", "no verb found in: " + sentence) {}
};

/// Splits a sentence on SBARs and clausal conjunctions (outermost first) and
/// orders the pieces by their first token. Without constituency spans, or
/// without a split point, the sentence comes back unchanged.
std::vector<ParsedSentence> split_sentence(const ParsedSentence& s);

struct EventifiedSentence {
  EventTuple event;
  GeneralizedSentence sentence;   // realization target, tokens as in the event
  std::vector<std::string> pos;   // one PTB tag per sentence token
};

/// Extracts the main verb's event and the generalized sentence. Entities are
/// numbered through `memory`. Throws NoVerb when the sentence has no verb.
EventifiedSentence eventify_sentence(const ParsedSentence& s, StoryMemory& memory,
                                     const Lexicon& lexicon);

/// An (event, generalized sentence) pair with its provenance.
struct EventRecord {
  EventTuple event;
  GeneralizedSentence sentence;
  std::vector<std::string> pos;
  std::string story_id;
  std::size_t index = 0;

  nlohmann::json to_json() const;
  static EventRecord from_json(const nlohmann::json& j);
};

struct SplitRatio {
  int train = 8;
  int validation = 1;
  int test = 1;
};

/// Story ids per partition.
struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct EventifiedCorpus {
  std::vector<std::vector<EventRecord>> stories;  // input story order
  CorpusSplit split;
  std::vector<std::string> warnings;  // skipped sentences

  std::vector<EventRecord> records_for(const std::vector<std::string>& story_ids) const;
};

/// Partitions story ids by a seeded shuffle; sizes follow the ratio, rounded.
CorpusSplit split_stories(const std::vector<std::string>& story_ids, std::uint64_t seed,
                          SplitRatio ratio = {});

/// Eventifies every story (fresh memory per story) and partitions by story.
EventifiedCorpus eventify_corpus(const std::vector<Story>& stories, const Lexicon& lexicon,
                                 std::uint64_t seed, SplitRatio ratio = {});

// --- events JSONL ----------------------------------------------------------

/// First line of every JSONL file the tools write: {"header": {...}}.
bool is_header_line(const nlohmann::json& j);

void write_events_jsonl(std::ostream& out, const std::vector<EventRecord>& records,
                        const nlohmann::json& header);
std::vector<EventRecord> read_events_jsonl(std::istream& in);
std::vector<EventRecord> read_events_jsonl(const std::filesystem::path& path);

/// Training pairs view used by the models.
struct TrainingPair {
  EventTuple event;
  GeneralizedSentence sentence;
};
std::vector<TrainingPair> to_pairs(const std::vector<EventRecord>& records);

}  // namespace e2s
