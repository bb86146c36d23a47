#pragma once

#include <span>
#include <string>
#include <vector>

#include "e2s/event.hpp"
#include "e2s/vocabulary.hpp"

namespace e2s {

/// An event as the models see it: one id per non-empty slot in (s, v, o, p, m)
/// order. Out-of-vocabulary tokens get kUnk but keep their surface so that an
/// emitted <unk> can be rendered back and matched as a constraint.
struct EncodedEvent {
  std::vector<TokenId> ids;
  std::vector<std::string> surfaces;
  std::vector<Slot> slots;

  bool has_oov() const;
};

EncodedEvent encode_event(const Vocabulary& vocab, const EventTuple& event);
/// Bare token list; slots are assigned in (s, v, o, p, m) order.
EncodedEvent encode_event(const Vocabulary& vocab, const std::vector<std::string>& tokens);

/// Event ids not yet emitted by `prefix` (multiset difference, event order).
std::vector<TokenId> unconsumed(const EncodedEvent& event, std::span<const TokenId> prefix);

/// Maps ids back to generalized tokens. Each <unk> takes the surface of the
/// next OOV event token not yet used; without one it stays "<unk>".
/// Begin and end markers are dropped.
GeneralizedSentence decode_ids(const Vocabulary& vocab, const EncodedEvent& event,
                               std::span<const TokenId> ids);

/// Contract for event-conditioned next-token scoring.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual const Vocabulary& vocabulary() const = 0;

  /// Probability of every vocabulary id as the next token after `prefix`
  /// (ids in generation order). Sums to 1; kBegin always has probability 0.
  virtual std::vector<double> next_distribution(const EncodedEvent& event,
                                                std::span<const TokenId> prefix) const = 0;
};

/// Mean of -log2 P over the tokens of `sentence` followed by <eos>, scored in
/// generation order.
double sentence_nll(const SequenceModel& model, const EncodedEvent& event,
                    std::span<const TokenId> sentence);

/// Reverses ids, for driving a model trained right-to-left.
std::vector<TokenId> reversed(std::span<const TokenId> ids);

}  // namespace e2s
