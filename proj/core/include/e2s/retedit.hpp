#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/eventify.hpp"

namespace e2s {

struct EmbeddingConfig {
  int svd_rank = 24;      // co-occurrence factor dimensions per token
  int random_dim = 16;    // seeded per-token dimensions that keep tokens apart
  double random_weight = 0.5;
  std::array<double, kSlotCount> slot_weights = {1.0, 1.5, 1.0, 0.5, 1.0};
  int power_iterations = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Retrieval {
  std::size_t id = 0;
  double distance = 1.0;  // in [0, 1]
};

/// Event embeddings over the training pairs. A token's vector joins its
/// row of a rank-reduced PPMI matrix (event tokens x sentence tokens,
/// factorized by randomized SVD) with a unit Gaussian vector seeded by the
/// token's hash. An event is the slot-weighted concatenation of its token
/// vectors; empty slots contribute zeros. Distance is (1 - cos) / 2.
class RetrievalIndex {
 public:
  /// Throws EmptyCorpus for no pairs.
  static RetrievalIndex build(std::vector<TrainingPair> pairs, const EmbeddingConfig& cfg = {});

  std::size_t size() const { return pairs_.size(); }
  const TrainingPair& pair(std::size_t id) const { return pairs_.at(id); }
  const std::vector<double>& embedding(std::size_t id) const { return embeddings_.at(id); }
  const EmbeddingConfig& config() const { return cfg_; }

  std::vector<double> embed(const EventTuple& event) const;
  double distance(const EventTuple& query, std::size_t id) const;
  static double distance(const std::vector<double>& a, const std::vector<double>& b);

  /// Nearest pair, lowest id on ties. An event present in the index is found
  /// by exact lookup at distance 0.
  Retrieval retrieve(const EventTuple& query) const;

  nlohmann::json to_json() const;
  static RetrievalIndex from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RetrievalIndex load(const std::filesystem::path& path);

 private:
  std::vector<double> token_vector(const std::string& token) const;
  void finish();

  EmbeddingConfig cfg_;
  std::vector<TrainingPair> pairs_;
  std::unordered_map<std::string, std::vector<double>> factors_;
  std::vector<std::vector<double>> embeddings_;
  std::unordered_map<std::string, std::size_t> exact_;  // serialized event -> lowest id
};

/// Rewrites a retrieved sentence toward an input event.
class EditorModel {
 public:
  virtual ~EditorModel() = default;
  virtual GeneralizedSentence edit(const EventTuple& input, const TrainingPair& retrieved) const = 0;
};

/// Replaces each retrieved-event slot token in the sentence with the input's
/// token for the same slot, all slots at once. Slots missing on either side are
/// left alone; the preposition is replaced at its first occurrence only.
class SlotSubstitutionEditor final : public EditorModel {
 public:
  GeneralizedSentence edit(const EventTuple& input, const TrainingPair& retrieved) const override;
};

struct RetEditResult {
  GeneralizedSentence sentence;
  Retrieval retrieval;
  double confidence = 0.0;
};

double retedit_confidence(double distance);

/// Retrieve, then return verbatim at distance 0 or edit otherwise.
RetEditResult retrieve_and_edit(const RetrievalIndex& index, const EditorModel& editor,
                                const EventTuple& event);

}  // namespace e2s
