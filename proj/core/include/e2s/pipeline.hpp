#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/decoders.hpp"
#include "e2s/ensemble.hpp"
#include "e2s/eventify.hpp"
#include "e2s/lexicon.hpp"
#include "e2s/metrics.hpp"
#include "e2s/ngram_model.hpp"
#include "e2s/retedit.hpp"
#include "e2s/slotfill.hpp"
#include "e2s/templater.hpp"

namespace e2s {

inline constexpr const char* kVersion = "0.1.0";

struct PipelinePaths {
  std::filesystem::path lexicon;
  std::filesystem::path corpus;       // interchange JSONL
  std::filesystem::path work_dir;     // events/, models/ and run outputs live here
  std::filesystem::path pool;
  std::filesystem::path gender;       // optional CSV name,gender,count
  std::filesystem::path frame_rules;
};

struct PipelineSeeds {
  std::uint64_t split = 1;
  std::uint64_t index = 2;
  std::uint64_t decode = 3;
  std::uint64_t templates = 4;
  std::uint64_t fill = 5;
};

struct PipelineConfig {
  PipelinePaths paths;
  PipelineSeeds seeds;
  SplitRatio split;
  NGramConfig ngram;
  BeamConfig beam;
  MCBeamConfig mc;
  FsmConfig fsm;
  TemplateConfig templates;
  EmbeddingConfig retedit;
  EnsembleConfig ensemble;
  std::vector<double> grid_values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  WeightLearningConfig weight_learning;

  void validate() const;
  /// Copies the seeds into the decoder, templater and index configs.
  void sync_seeds();

  /// Relative paths resolve against `base_dir`. Missing keys keep defaults.
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// fnv1a64 of the canonical JSON form without the work directory, as 16 hex
  /// digits.
  std::string hash() const;
  /// Header record written as the first line of every output file.
  nlohmann::json header(const std::string& command) const;

  std::filesystem::path events_path(const std::string& partition) const;
  std::filesystem::path forward_model_path() const;
  std::filesystem::path backward_model_path() const;
  std::filesystem::path word_classes_path() const;
  std::filesystem::path index_path() const;
  std::filesystem::path tuned_path() const;
};

// --- stages -----------------------------------------------------------------

struct EventifySummary {
  std::size_t stories = 0;
  std::size_t train = 0, validation = 0, test = 0;  // event counts
  std::vector<std::string> warnings;
};
/// Interchange corpus -> events/{train,validation,test}.jsonl.
EventifySummary eventify_stage(const PipelineConfig& cfg);

/// Forward and backward n-gram models plus the word-class table, from train.jsonl.
void train_stage(const PipelineConfig& cfg);
void build_index_stage(const PipelineConfig& cfg);

struct TunedEnsemble {
  EnsembleConfig ensemble;
  SlotWeights mc_weights = uniform_slot_weights();
  double bleu4 = 0.0;

  nlohmann::json to_json() const;
  static TunedEnsemble from_json(const nlohmann::json& j);
  static TunedEnsemble load(const std::filesystem::path& path);
};

/// Learns the playout weights, then grid-searches the thresholds on
/// validation.jsonl. Writes models/ensemble.json.
TunedEnsemble tune_stage(const PipelineConfig& cfg, const std::optional<ThresholdGrid>& grid = {});

// --- loaded models ------------------------------------------------------------

/// Everything realization needs, loaded from the work directory. Only the
/// artifacts of the configured members are required. The tuned ensemble is
/// used when present, else the config's ensemble.
class Engine {
 public:
  static std::unique_ptr<Engine> load(const PipelineConfig& cfg, bool use_tuned = true);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EnsembleConfig& ensemble() const { return ensemble_; }
  void set_ensemble(EnsembleConfig e);
  const SlotWeights& mc_weights() const { return mc_cfg_.weights; }
  /// Rebuilds the Monte Carlo member with new playout weights.
  void set_mc_weights(const SlotWeights& w);

  /// Realizers for every configured member.
  MemberSet members() const;
  const Realizer& member(Member m) const;

  const Lexicon& lexicon() const { return lexicon_; }
  const NGramModel& forward() const { return *forward_; }

 private:
  Engine() = default;

  EnsembleConfig ensemble_;
  Lexicon lexicon_;
  MCBeamConfig mc_cfg_;
  std::unique_ptr<NGramModel> forward_;
  std::unique_ptr<NGramModel> backward_;
  std::unique_ptr<RetrievalIndex> index_;
  std::unique_ptr<Templater> templater_;
  SlotSubstitutionEditor editor_;
  std::unique_ptr<RetEditRealizer> retedit_;
  std::unique_ptr<TemplateRealizer> templates_;
  std::unique_ptr<MCBeamRealizer> mc_;
  std::unique_ptr<FsmRealizer> fsm_;
  std::unique_ptr<BeamRealizer> beam_;
};

// --- run ----------------------------------------------------------------------

struct RealizedEvent {
  std::string story_id;
  std::size_t index = 0;
  EventTuple event;
  CascadeResult cascade;
  FillResult filled;
};

struct PipelineRun {
  EnsembleConfig ensemble;
  std::vector<RealizedEvent> events;
  UtilizationReport utilization;
};

struct StorySentence {
  std::string story_id;
  GeneralizedSentence sentence;
};

/// fill_sentence over sentences in order, one memory and one seeded rng per
/// story id.
std::vector<FillResult> fill_stories(const std::vector<StorySentence>& sentences,
                                     const EntityPool& pool, const Lexicon& lexicon,
                                     std::uint64_t seed);

/// cascade_realize then fill_sentence for each event; a fresh story memory per
/// story id. Pure given the config and the artifacts.
PipelineRun realize_and_fill(const Engine& engine, const PipelineConfig& cfg,
                             const std::vector<EventRecord>& events);

/// Reads `events_in`, runs realize_and_fill and writes `out_dir`/realized.jsonl
/// (generalized and filled sentences) and `out_dir`/run_log.jsonl.
PipelineRun run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& events_in,
                         const std::filesystem::path& out_dir);

void write_realized_jsonl(std::ostream& out, const PipelineRun& run, const nlohmann::json& header);
void write_run_log_jsonl(std::ostream& out, const PipelineRun& run, const nlohmann::json& header);

/// Sentences of a JSONL file: the "sentence" field of each record.
std::vector<TokenSeq> read_sentences_jsonl(const std::filesystem::path& path);

}  // namespace e2s
