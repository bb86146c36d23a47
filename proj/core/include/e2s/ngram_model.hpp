#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/eventify.hpp"
#include "e2s/sequence_model.hpp"

namespace e2s {

enum class Direction { Forward, Backward };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct NGramConfig {
  int order = 3;            // n >= 2
  double copy_bias = 0.3;   // lambda in [0, 1)
  double discount = 0.75;   // absolute discount D in (0, 1)
  double floor = 1e-9;
  Direction direction = Direction::Forward;

  void validate() const;
};

/// Interpolated absolute-discounting n-gram model over generalized tokens with
/// a copy bias toward event tokens not yet emitted:
///
///   P(w) = (1 - lambda) * P_ng(w) + lambda * Q(w)
///   Q(w) = P_ng(w) / P_ng(U)  for w in U, the unconsumed event ids; 0 elsewhere
///
/// When U is empty the model is the plain n-gram. A backward model is trained
/// on reversed sentences and is driven with prefixes in right-to-left order.
class NGramModel final : public SequenceModel {
 public:
  /// Throws EmptyCorpus when no pair has a sentence.
  static NGramModel train(const std::vector<TrainingPair>& pairs, const NGramConfig& cfg);
  /// Trains on bare sentences; `extra_tokens` are added to the vocabulary.
  static NGramModel train(const std::vector<GeneralizedSentence>& sentences, const NGramConfig& cfg,
                          const std::vector<std::string>& extra_tokens = {});

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::vector<double> next_distribution(const EncodedEvent& event,
                                        std::span<const TokenId> prefix) const override;

  /// The smoothed n-gram distribution without the copy bias.
  std::vector<double> ngram_distribution(std::span<const TokenId> prefix) const;

  /// NLL (bits per token, <eos> included) of a sentence written left to right;
  /// a backward model scores it right to left.
  double sentence_nll(const EncodedEvent& event, const GeneralizedSentence& sentence) const;

  const NGramConfig& config() const { return cfg_; }
  Direction direction() const { return cfg_.direction; }
  /// Copy of the model with another lambda.
  NGramModel with_copy_bias(double lambda) const;

  /// Raw count of `next` after the context (most recent id last).
  std::size_t count(std::span<const TokenId> context, TokenId next) const;

  nlohmann::json to_json() const;
  static NGramModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);

 private:
  struct ContextStats {
    std::size_t total = 0;
    std::vector<std::pair<TokenId, std::size_t>> next;  // sorted by id
  };
  using Table = std::unordered_map<std::string, ContextStats>;

  NGramModel(Vocabulary vocab, NGramConfig cfg);
  static std::string key(std::span<const TokenId> context);
  void add_sentence(const std::vector<TokenId>& ids);

  Vocabulary vocab_;
  NGramConfig cfg_;
  std::vector<Table> tables_;  // tables_[k]: contexts of length k
};

}  // namespace e2s
