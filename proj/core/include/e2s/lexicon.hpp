#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/common.hpp"
#include "e2s/frame.hpp"

namespace e2s {

class UnknownLemma : public Error {
 public:
  explicit UnknownLemma(const std::string& lemma)
      : Error("UnknownLemma", "lemma '" + lemma + "' is not in the lexicon") {}
};

class UnknownVerb : public Error {
 public:
  explicit UnknownVerb(const std::string& lemma)
      : Error("UnknownVerb", "no verb class contains '" + lemma + "'") {}
};

enum class Gender { Masculine, Feminine, Unknown };

std::string_view to_string(Gender g);

/// First-name -> gender lookup. Names are matched case-insensitively.
class GenderTable {
 public:
  /// Share of a name's occurrences that must carry one gender before the name
  /// is considered that gender.
  static constexpr double kDefaultThreshold = 0.8;

  GenderTable() = default;
  explicit GenderTable(std::unordered_map<std::string, Gender> table);

  /// Reads `name,gender,count` rows (gender M/F or masc/fem). A header row is
  /// allowed. Counts for the same name are pooled before thresholding.
  static GenderTable from_csv(const std::filesystem::path& path,
                              double threshold = kDefaultThreshold);
  static GenderTable from_csv_text(std::string_view text, double threshold = kDefaultThreshold);

  Gender lookup(std::string_view first_name) const;
  std::size_t size() const { return table_.size(); }
  void merge(const GenderTable& other);
  const std::unordered_map<std::string, Gender>& entries() const { return table_; }

 private:
  std::unordered_map<std::string, Gender> table_;
};

/// Immutable WordNet/VerbNet view loaded from a neutral JSON snapshot with keys
/// hypernyms, hyponyms, lemma_index, verb_classes, frames, gender_table (and an
/// optional class_members listing each class's member verbs, representative
/// first). Safe to share between threads once loaded.
class Lexicon {
 public:
  Lexicon() = default;

  static Lexicon load(const std::filesystem::path& path);
  static Lexicon from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool has_synset(std::string_view synset) const;
  std::optional<std::string> hypernym(std::string_view synset) const;
  const std::vector<std::string>& hyponyms(std::string_view synset) const;
  /// Number of hypernym hops from `descendant` up to `ancestor`, if any.
  std::optional<int> hypernym_distance(std::string_view descendant,
                                       std::string_view ancestor) const;

  /// First (most frequent) sense of a lemma for a WordNet part of speech
  /// ('n', 'v', 'a', 'r').
  std::optional<std::string> first_sense(std::string_view lemma, char pos) const;

  /// Classes containing the verb, sorted by class id.
  const std::vector<std::string>& verb_classes_of(std::string_view lemma) const;
  bool has_verb_class(std::string_view class_id) const;
  /// Frames listed for a verb class; empty when the class has none.
  const std::vector<FrameSpec>& frames(std::string_view class_id) const;
  /// Member verb used to realize a class on the surface.
  std::optional<std::string> representative_verb(std::string_view class_id) const;

  const GenderTable& genders() const { return genders_; }
  void set_genders(GenderTable table) { genders_ = std::move(table); }

 private:
  void validate_and_complete();

  std::unordered_map<std::string, std::string> hypernyms_;
  std::unordered_map<std::string, std::vector<std::string>> hyponyms_;
  std::unordered_map<std::string, std::unordered_map<std::string, std::string>> lemma_index_;
  std::unordered_map<std::string, std::vector<std::string>> verb_index_;
  std::unordered_map<std::string, std::vector<FrameSpec>> frames_;
  std::unordered_map<std::string, std::vector<std::string>> class_members_;
  std::unordered_map<std::string, bool> synsets_;
  GenderTable genders_;
};

/// Generalizes a noun to the synset two hypernym hops above the lemma's first
/// sense, or to the highest ancestor when the chain is shorter.
/// Throws UnknownLemma if the lemma has no sense for `pos`.
std::string generalize_noun(std::string_view lemma, char pos, const Lexicon& lexicon);

/// Candidate base forms of an inflected verb, most specific first.
std::vector<std::string> verb_stem_candidates(std::string_view word);

/// First (lexicographically smallest) verb class containing the stemmed lemma.
/// Throws UnknownVerb when no class contains it.
std::string classify_verb(std::string_view verb_lemma, const Lexicon& lexicon);

/// Simple-present third-person-singular form: "send" -> "sends", "try" -> "tries".
std::string conjugate_third_person(std::string_view verb);

}  // namespace e2s
