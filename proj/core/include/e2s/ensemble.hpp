#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2s/decoders.hpp"
#include "e2s/retedit.hpp"
#include "e2s/sequence_model.hpp"
#include "e2s/templater.hpp"

namespace e2s {

enum class Member { RetEdit, Templates, MCBeam, Fsm, Beam };

inline constexpr std::array<Member, 5> kMemberOrder = {Member::RetEdit, Member::Templates,
                                                       Member::MCBeam, Member::Fsm, Member::Beam};

/// Config names: retedit, templates, mc, fsm, beam.
std::string_view member_name(Member m);
/// Column titles: RetEdit, Templates, Monte Carlo, FSM, Beam.
std::string_view member_title(Member m);
Member member_from_name(std::string_view name);
/// Whether the member is gated by a confidence threshold.
bool has_threshold(Member m);

/// What a member produced for one event; no sentence means failure.
struct MemberOutput {
  std::optional<GeneralizedSentence> sentence;
  double confidence = 0.0;
};

class Realizer {
 public:
  virtual ~Realizer() = default;
  /// Must be a pure function of the event (seeds derive from it).
  virtual MemberOutput realize(const EventTuple& event) const = 0;
};

/// Members in cascade order (a subsequence of kMemberOrder ending with beam)
/// and the thresholds of the gated members among them.
struct EnsembleConfig {
  std::vector<Member> members = {kMemberOrder.begin(), kMemberOrder.end()};
  std::map<Member, double> thresholds = {
      {Member::RetEdit, 0.5}, {Member::Templates, 0.5}, {Member::MCBeam, 0.5}};

  void validate() const;
  nlohmann::json to_json() const;
  static EnsembleConfig from_json(const nlohmann::json& j);
  /// "Full Ensemble", or the gated members joined by '+', e.g. "RetEdit+MC".
  std::string label() const;
};

struct Invocation {
  Member member;
  bool produced = false;
  double confidence = 0.0;
  bool accepted = false;
};

struct CascadeResult {
  GeneralizedSentence sentence;
  Member member_used = Member::Beam;
  double confidence = 0.0;
  std::vector<Invocation> invoked;  // in order; members after the accepted one never run
};

/// Whether `member` accepts an output under `cfg`: gated members need
/// confidence >= threshold, FSM needs success, beam accepts any output.
bool accepts(const EnsembleConfig& cfg, Member member, const MemberOutput& out);

using MemberSet = std::map<Member, const Realizer*>;

/// Queries members in order and returns the first accepted output. When none
/// accepts (only possible if the final member fails), the last output produced
/// is returned; with no output at all the sentence is empty.
CascadeResult cascade_realize(const EventTuple& event, const MemberSet& members,
                              const EnsembleConfig& cfg);

// --- run log and utilization ----------------------------------------------

struct RunLogEntry {
  EventTuple event;
  CascadeResult result;

  nlohmann::json to_json() const;
};

struct UtilizationReport {
  std::string source;  // "test" or "pipeline"
  std::size_t events = 0;
  std::map<Member, double> percent;  // every member of the ensemble, in [0, 100]
};

UtilizationReport utilization(const std::vector<RunLogEntry>& log, const EnsembleConfig& cfg,
                              const std::string& source);
/// Reads member_used from run-log JSON lines.
UtilizationReport utilization_from_jsonl(std::istream& in, const EnsembleConfig& cfg,
                                         const std::string& source);

struct UtilizationRow {
  EnsembleConfig ensemble;
  std::optional<UtilizationReport> test;
  std::optional<UtilizationReport> pipeline;
};

/// One line per ensemble; per member a Test and a Pipeline column, "-" where
/// the member is not part of the ensemble or the run is missing.
std::string format_utilization_table(const std::vector<UtilizationRow>& rows);

// --- threshold tuning ------------------------------------------------------

struct ThresholdGrid {
  std::vector<std::vector<double>> tuples;  // one value per gated member, cascade order

  /// Cartesian product of `values` for each of `gated` members.
  static ThresholdGrid product(std::size_t gated, const std::vector<double>& values);
  /// {0.1, 0.2, ..., 0.9} per gated member.
  static ThresholdGrid standard(std::size_t gated);
  /// Either {"tuples": [[...], ...]} or {"values": [...]}.
  static ThresholdGrid from_json(const nlohmann::json& j, std::size_t gated);
};

struct TuneResult {
  std::map<Member, double> thresholds;
  double bleu4 = 0.0;
  std::vector<std::pair<std::vector<double>, double>> evaluated;  // grid order
};

/// Gated members of the ensemble in cascade order.
std::vector<Member> gated_members(const EnsembleConfig& cfg);

/// Runs every member once per validation event, then replays the cascade for
/// each grid tuple and scores corpus BLEU-4 against the references. The best
/// tuple wins; ties go to the lexicographically greater tuple.
TuneResult tune_thresholds(const std::vector<TrainingPair>& validation, const MemberSet& members,
                           const EnsembleConfig& cfg, const ThresholdGrid& grid);

// --- member adapters -------------------------------------------------------

class RetEditRealizer final : public Realizer {
 public:
  RetEditRealizer(const RetrievalIndex& index, const EditorModel& editor)
      : index_(index), editor_(editor) {}
  MemberOutput realize(const EventTuple& event) const override;

 private:
  const RetrievalIndex& index_;
  const EditorModel& editor_;
};

class TemplateRealizer final : public Realizer {
 public:
  TemplateRealizer(const Templater& templater, TemplateConfig cfg)
      : templater_(templater), cfg_(std::move(cfg)) {}
  MemberOutput realize(const EventTuple& event) const override;

 private:
  const Templater& templater_;
  TemplateConfig cfg_;
};

class MCBeamRealizer final : public Realizer {
 public:
  MCBeamRealizer(const SequenceModel& model, MCBeamConfig cfg) : model_(model), cfg_(cfg) {}
  MemberOutput realize(const EventTuple& event) const override;

 private:
  const SequenceModel& model_;
  MCBeamConfig cfg_;
};

class FsmRealizer final : public Realizer {
 public:
  FsmRealizer(const SequenceModel& model, FsmConfig cfg) : model_(model), cfg_(cfg) {}
  MemberOutput realize(const EventTuple& event) const override;

 private:
  const SequenceModel& model_;
  FsmConfig cfg_;
};

class BeamRealizer final : public Realizer {
 public:
  BeamRealizer(const SequenceModel& model, BeamConfig cfg) : model_(model), cfg_(cfg) {}
  MemberOutput realize(const EventTuple& event) const override;

 private:
  const SequenceModel& model_;
  BeamConfig cfg_;
};

}  // namespace e2s
