#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/eventify.hpp"
#include "e2s/frame.hpp"
#include "e2s/lexicon.hpp"
#include "e2s/sequence_model.hpp"

namespace e2s {

/// Coarse word classes used for phrase boundaries and adjacency rules.
enum class WordClass { Det, Noun, Pronoun, Verb, Prep, Adj, Adv, Punct, Boundary, Other };

std::string_view to_string(WordClass c);
WordClass word_class_from_ptb(std::string_view tag);

/// Token -> word class. Token shape decides first (synsets by their part of
/// speech, entity tags, <PRP>, verb class ids, punctuation, reserved markers);
/// other tokens use their most frequent tag in the training sentences, then a
/// short closed-class list.
class WordClassTable {
 public:
  WordClassTable() = default;
  static WordClassTable from_records(const std::vector<EventRecord>& records);

  WordClass classify(std::string_view token) const;
  void set(const std::string& token, WordClass c) { table_[token] = c; }

  nlohmann::json to_json() const;
  static WordClassTable from_json(const nlohmann::json& j);

 private:
  std::unordered_map<std::string, WordClass> table_;
};

/// Slot signature -> candidate frames, loaded from data. The signature lists
/// which of s, o, p, m are filled; candidates are tried in order against the
/// verb class's frames.
class FrameRules {
 public:
  static FrameRules from_json(const nlohmann::json& j);
  static FrameRules load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// "s+p+m" style key; "-" for a bare verb.
  static std::string signature(const EventTuple& event);

  const std::vector<FrameSpec>* candidates(const std::string& signature) const;
  const FrameSpec& fallback() const { return fallback_; }

 private:
  std::vector<std::pair<std::string, std::vector<FrameSpec>>> rules_;
  FrameSpec fallback_{std::vector<Phrase>{Phrase::NP, Phrase::V}};
};

using ClassBigram = std::pair<WordClass, WordClass>;

struct TemplateConfig {
  int top_k = 5;
  int max_phrase_length = 3;
  bool insert_determiner = false;  // force "the" before a common-noun anchor
  std::vector<ClassBigram> forbidden = {{WordClass::Det, WordClass::Det},
                                        {WordClass::Noun, WordClass::Noun}};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TemplateResult {
  GeneralizedSentence sentence;
  FrameSpec frame;
  double confidence = 0.0;
};

/// 1 - min(1, mean(losses) / log2(vocab_size)), losses in bits per token.
double template_confidence(const std::vector<double>& losses_bits, std::size_t vocab_size);

/// Frame-driven realizer. Event tokens are placed at their frame positions
/// (subject NP, verb, object NP, PP = preposition + NP) and the blank in front
/// of each noun phrase head is filled right-to-left with the backward model;
/// the blank after the verb is filled left-to-right with the forward model.
/// A phrase ends at its length cap or when the sampled word belongs to the
/// next phrase (verb, preposition, noun, pronoun, punctuation, boundary).
/// Both models must share one vocabulary; the backward one is driven with
/// right-to-left prefixes.
class Templater {
 public:
  Templater(const SequenceModel& forward, const SequenceModel& backward, FrameRules rules,
            WordClassTable classes, const Lexicon* lexicon = nullptr);

  FrameSpec predict_frame(const EventTuple& event) const;

  TemplateResult realize(const EventTuple& event, const TemplateConfig& cfg) const;
  TemplateResult realize(const EventTuple& event, const FrameSpec& frame,
                         const TemplateConfig& cfg) const;

  const WordClassTable& classes() const { return classes_; }

 private:
  const SequenceModel& forward_;
  const SequenceModel& backward_;
  FrameRules rules_;
  WordClassTable classes_;
  const Lexicon* lexicon_;
};

}  // namespace e2s
