#include "e2s/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "e2s/common.hpp"

namespace e2s {

bool EncodedEvent::has_oov() const {
  return std::find(ids.begin(), ids.end(), Vocabulary::kUnk) != ids.end();
}

EncodedEvent encode_event(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
  if (tokens.size() > kSlotCount) throw FormatError("an event has at most five tokens");
  EncodedEvent out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.ids.push_back(vocab.id(tokens[i]));
    out.surfaces.push_back(tokens[i]);
    out.slots.push_back(kAllSlots[i]);
  }
  return out;
}

EncodedEvent encode_event(const Vocabulary& vocab, const EventTuple& event) {
  EncodedEvent out;
  for (Slot s : kAllSlots) {
    if (!event.has(s)) continue;
    out.ids.push_back(vocab.id(event.slot(s)->surface));
    out.surfaces.push_back(event.slot(s)->surface);
    out.slots.push_back(s);
  }
  return out;
}

std::vector<TokenId> unconsumed(const EncodedEvent& event, std::span<const TokenId> prefix) {
  std::vector<TokenId> left = event.ids;
  for (TokenId t : prefix) {
    auto it = std::find(left.begin(), left.end(), t);
    if (it != left.end()) left.erase(it);
  }
  return left;
}

GeneralizedSentence decode_ids(const Vocabulary& vocab, const EncodedEvent& event,
                               std::span<const TokenId> ids) {
  std::vector<std::string> oov;
  for (std::size_t i = 0; i < event.ids.size(); ++i)
    if (event.ids[i] == Vocabulary::kUnk) oov.push_back(event.surfaces[i]);
  std::size_t next_oov = 0;
  GeneralizedSentence out;
  for (TokenId id : ids) {
    if (id == Vocabulary::kBegin || id == Vocabulary::kEos) continue;
    if (id == Vocabulary::kUnk && next_oov < oov.size())
      out.push_back(oov[next_oov++]);
    else
      out.push_back(vocab.token(id));
  }
  return out;
}

double sentence_nll(const SequenceModel& model, const EncodedEvent& event,
                    std::span<const TokenId> sentence) {
  std::vector<TokenId> prefix;
  prefix.reserve(sentence.size());
  double bits = 0.0;
  auto score = [&](TokenId next) {
    const auto dist = model.next_distribution(event, prefix);
    const double p = dist.at(static_cast<std::size_t>(next));
    bits += p > 0.0 ? -std::log2(p) : std::numeric_limits<double>::infinity();
  };
  for (TokenId t : sentence) {
    score(t);
    prefix.push_back(t);
  }
  score(Vocabulary::kEos);
  return bits / static_cast<double>(sentence.size() + 1);
}

std::vector<TokenId> reversed(std::span<const TokenId> ids) {
  return std::vector<TokenId>(ids.rbegin(), ids.rend());
}

}  // namespace e2s
