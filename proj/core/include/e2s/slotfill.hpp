#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/common.hpp"
#include "e2s/event.hpp"
#include "e2s/lexicon.hpp"
#include "e2s/story_memory.hpp"

namespace e2s {

/// Candidate names per NER category, e.g. {"PERSON": ["Kira Nerys", ...]}.
class EntityPool {
 public:
  EntityPool() = default;
  explicit EntityPool(std::map<std::string, std::vector<std::string>> names);

  static EntityPool from_json(const nlohmann::json& j);
  static EntityPool load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Empty for an unknown category.
  const std::vector<std::string>& names(std::string_view category) const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> names_;
};

enum class PronounCase { Nominative, Objective };

/// Pronoun for the most recently mentioned binding: organizations are "they",
/// people follow the gender of their first name ("they" when unknown), any
/// other entity or thing is "it", and an empty memory gives "it".
std::string resolve_pronoun(const StoryMemory& memory, const GenderTable& genders,
                            PronounCase c = PronounCase::Nominative);

/// Uniform draw over the hyponyms one or two levels below `synset`; a leaf
/// returns itself.
std::string choose_hyponym(std::string_view synset, const Lexicon& lexicon, Rng& rng);

/// Surface form of a verb class in context: the base form after a modal, "to"
/// or do-support (skipping "not"), else the third person singular present.
std::string realize_verb(std::string_view class_id, const Lexicon& lexicon, bool base_form);

struct FillResult {
  std::vector<std::string> tokens;
  std::string text;
  std::vector<std::string> warnings;
};

/// Replaces entity tags, synsets, <PRP> and verb classes with surface words.
/// Entity tags keep their binding for the whole story; a new tag takes a pool
/// name of its category not yet used in the story, or its own text when the
/// pool runs dry. A synset reuses its own binding, or the most recent word whose
/// drawn sense descends from it; otherwise a hyponym's lemma is drawn. A verb
/// right after "they" takes the base form, and a bare "be" agrees with the word
/// before it.
FillResult fill_sentence(const GeneralizedSentence& sentence, StoryMemory& memory,
                         const EntityPool& pool, const Lexicon& lexicon, Rng& rng);

}  // namespace e2s
