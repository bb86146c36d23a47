#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "e2s/event.hpp"
#include "e2s/sequence_model.hpp"

namespace e2s {

/// A finished decode. `ids` excludes <eos>; `logprob` (natural log) includes it.
struct Decoded {
  std::vector<TokenId> ids;
  GeneralizedSentence sentence;
  double logprob = 0.0;
  double confidence = 0.0;  // in [0, 1]
};

/// Applies the decoding rules to a model distribution: <s> is never emitted,
/// <unk> only while an out-of-vocabulary event token is unconsumed, <eos> never
/// first, and only <eos> once the prefix reaches `max_length`.
std::vector<double> admissible(std::vector<double> dist, const EncodedEvent& event,
                               std::span<const TokenId> prefix, std::size_t max_length);

/// Lexicographic comparison of id sequences, used for every tie-break.
bool ids_less(std::span<const TokenId> a, std::span<const TokenId> b);

// --- beam search -------------------------------------------------------------

struct BeamConfig {
  int width = 5;
  int max_length = 25;
};

/// Standard beam search. Children of all live hypotheses compete for `width`
/// slots; those ending in <eos> leave the beam as finished. Search stops once
/// the best finished hypothesis outscores every live one. Confidence is the
/// per-token geometric mean probability.
Decoded beam_decode(const SequenceModel& model, const EncodedEvent& event, const BeamConfig& cfg);

// --- Monte Carlo beam search -------------------------------------------------

/// One weight per event slot (s, v, o, p, m).
using SlotWeights = std::array<double, kSlotCount>;
SlotWeights uniform_slot_weights();

/// Mean of two parts, both in [0, 1]:
///  (a) BLEU of the sequence against the event tokens, up to 4-grams (capped
///      at the shorter length);
///  (b) sum over present slots of w_i * [slot token occurs in the sequence],
///      with weights renormalized over the present slots.
double playout_score(const std::vector<std::string>& event_tokens, const std::vector<Slot>& slots,
                     const GeneralizedSentence& sequence, const SlotWeights& weights);
double playout_score(const EventTuple& event, const GeneralizedSentence& sequence,
                     const SlotWeights& weights);

struct MCBeamConfig {
  int beam_width = 5;
  int playouts = 3;
  double alpha = 0.5;
  int max_length = 25;
  SlotWeights weights = uniform_slot_weights();
  std::uint64_t seed = 0;

  void validate() const;
};

/// One node scored at one step: s = alpha * parent_score + (1 - alpha) * mean(playouts).
struct MCTraceEntry {
  int step = 0;
  std::vector<TokenId> tokens;
  double parent_score = 0.0;
  std::vector<double> playouts;
  double score = 0.0;
  bool finished = false;
};

struct MCDecoded {
  Decoded best;
  std::vector<MCTraceEntry> trace;
};

/// Monte Carlo beam search. Every live node proposes its top `beam_width`
/// tokens; each proposal runs `playouts` sampled continuations to <eos> and
/// is scored by the update above, starting from 0. The top `beam_width` live
/// nodes survive. Search ends with `beam_width` finished nodes or at
/// `max_length`; the confidence is the score of the best finished node.
/// Playout streams are seeded from (seed, step, node, proposal, playout).
MCDecoded mc_beam_decode(const SequenceModel& model, const EncodedEvent& event,
                         const MCBeamConfig& cfg);

struct WeightLearningConfig {
  double delta = 0.1;
  int max_epochs = 5;
};

struct WeightLearningResult {
  SlotWeights weights;
  int epochs = 0;
  bool converged = false;  // an epoch passed without any bump
};

/// Decodes each event with the current weights; every present slot whose token
/// is missing from the output gets +delta, then the weights are renormalized.
/// Starts from uniform weights.
using WeightedDecoder = std::function<GeneralizedSentence(const EventTuple&, const SlotWeights&)>;
WeightLearningResult learn_playout_weights(const std::vector<EventTuple>& events,
                                           const WeightedDecoder& decode,
                                           const WeightLearningConfig& cfg = {});

// --- FSM-constrained beam search ---------------------------------------------

/// Automaton over subsets of the distinct event tokens: state = bit mask of the
/// tokens emitted so far. Emitting an unmatched constraint token sets its bit;
/// anything else keeps the state. Each token counts once.
class ConstraintFSM {
 public:
  using State = std::uint32_t;
  static constexpr std::size_t kMaxConstraints = 16;

  ConstraintFSM(std::vector<TokenId> ids, std::vector<std::string> surfaces,
                std::size_t min_matched);

  /// max(1, ceil(0.6 n)): three of five.
  static std::size_t default_min_matched(std::size_t n);

  std::size_t size() const { return ids_.size(); }
  std::size_t state_count() const { return std::size_t{1} << ids_.size(); }
  std::size_t min_matched() const { return min_matched_; }
  const std::vector<TokenId>& ids() const { return ids_; }
  const std::vector<std::string>& surfaces() const { return surfaces_; }

  bool accepting(State s) const;
  std::vector<State> accepting_states() const;
  State advance(State s, TokenId token) const;
  bool is_constraint(TokenId token) const;

 private:
  std::vector<TokenId> ids_;
  std::vector<std::string> surfaces_;
  std::size_t min_matched_;
};

/// Constraints are the distinct event tokens, in slot order.
ConstraintFSM build_constraint_fsm(const EncodedEvent& event,
                                   std::optional<std::size_t> min_matched = std::nullopt);

struct FsmConfig {
  int beam_size = 5;       // non-constraint proposals per hypothesis
  int per_state = 5;       // hypotheses kept per state
  int horizon = 25;        // maximum tokens before <eos>
  std::optional<std::size_t> min_matched;

  void validate() const;
};

/// Beam search with one beam per FSM state. A hypothesis proposes every
/// constraint token plus its `beam_size` most likely other tokens; the
/// children land in the state their token leads to and each state keeps its
/// `per_state` best. Returns the best finished hypothesis in an accepting
/// state, or nullopt (failure) when none finishes within the horizon.
std::optional<Decoded> fsm_decode(const SequenceModel& model, const EncodedEvent& event,
                                  const FsmConfig& cfg);

}  // namespace e2s
