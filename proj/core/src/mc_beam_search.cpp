#include "e2s/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "e2s/common.hpp"
#include "e2s/metrics.hpp"

namespace e2s {

SlotWeights uniform_slot_weights() {
  SlotWeights w;
  w.fill(1.0 / static_cast<double>(kSlotCount));
  return w;
}

double playout_score(const std::vector<std::string>& event_tokens, const std::vector<Slot>& slots,
                     const GeneralizedSentence& sequence, const SlotWeights& weights) {
  if (sequence.empty() || event_tokens.empty()) return 0.0;
  const int order = static_cast<int>(std::min<std::size_t>(
      {std::size_t{4}, sequence.size(), event_tokens.size()}));
  const double overlap = bleu(sequence, {event_tokens}, order);

  double present = 0.0, hit = 0.0;
  for (std::size_t i = 0; i < event_tokens.size(); ++i) {
    const double w = weights[static_cast<std::size_t>(slots[i])];
    present += w;
    if (std::find(sequence.begin(), sequence.end(), event_tokens[i]) != sequence.end()) hit += w;
  }
  const double coverage = present > 0.0 ? hit / present : 0.0;
  return 0.5 * overlap + 0.5 * coverage;
}

double playout_score(const EventTuple& event, const GeneralizedSentence& sequence,
                     const SlotWeights& weights) {
  std::vector<std::string> tokens;
  std::vector<Slot> slots;
  for (Slot s : kAllSlots)
    if (event.has(s)) {
      tokens.push_back(event.slot(s)->surface);
      slots.push_back(s);
    }
  return playout_score(tokens, slots, sequence, weights);
}

void MCBeamConfig::validate() const {
  if (beam_width < 1) throw ConfigError("MC beam width must be at least 1");
  if (playouts < 1) throw ConfigError("playouts per node must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (max_length < 1) throw ConfigError("max_length must be at least 1");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("playout weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("playout weights must sum to 1");
}

namespace {

struct Node {
  std::vector<TokenId> ids;
  double score = 0.0;
  double logprob = 0.0;
  bool finished = false;
};

bool better(const Node& a, const Node& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return ids_less(a.ids, b.ids);
}

/// Top-k admissible ids by probability, lower id first on ties.
std::vector<TokenId> top_tokens(const std::vector<double>& dist, std::size_t k) {
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] > 0.0) ids.push_back(static_cast<TokenId>(i));
  const std::size_t keep = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                    [&](TokenId a, TokenId b) {
                      if (dist[a] != dist[b]) return dist[a] > dist[b];
                      return a < b;
                    });
  ids.resize(keep);
  return ids;
}

}  // namespace

MCDecoded mc_beam_decode(const SequenceModel& model, const EncodedEvent& event,
                         const MCBeamConfig& cfg) {
  cfg.validate();
  const auto max_len = static_cast<std::size_t>(cfg.max_length);
  const auto width = static_cast<std::size_t>(cfg.beam_width);
  const auto& vocab = model.vocabulary();

  auto score_sequence = [&](std::span<const TokenId> ids) {
    return playout_score(event.surfaces, event.slots, decode_ids(vocab, event, ids), cfg.weights);
  };

  MCDecoded out;
  std::vector<Node> live{Node{}};
  std::vector<Node> finished;
  for (int step = 1; !live.empty() && finished.size() < width; ++step) {
    std::vector<Node> children;
    for (std::size_t n = 0; n < live.size(); ++n) {
      const Node& node = live[n];
      const auto dist =
          admissible(model.next_distribution(event, node.ids), event, node.ids, max_len);
      const auto proposals = top_tokens(dist, width);
      for (std::size_t c = 0; c < proposals.size(); ++c) {
        const TokenId tok = proposals[c];
        Node child{node.ids, 0.0, node.logprob + std::log(dist[static_cast<std::size_t>(tok)]),
                   tok == Vocabulary::kEos};
        if (!child.finished) child.ids.push_back(tok);

        MCTraceEntry entry;
        entry.step = step;
        entry.tokens = child.ids;
        entry.parent_score = node.score;
        entry.finished = child.finished;
        if (child.finished) {
          // A finished node is its own playout.
          entry.playouts.assign(1, score_sequence(child.ids));
        } else {
          for (int r = 0; r < cfg.playouts; ++r) {
            Rng rng(derive_seed(cfg.seed, step, n, c, r));
            std::vector<TokenId> seq = child.ids;
            while (true) {
              auto pd = admissible(model.next_distribution(event, seq), event, seq, max_len);
              if (std::all_of(pd.begin(), pd.end(), [](double p) { return p <= 0.0; })) break;
              const auto next = static_cast<TokenId>(rng.sample(pd));
              if (next == Vocabulary::kEos) break;
              seq.push_back(next);
            }
            entry.playouts.push_back(score_sequence(seq));
          }
        }
        const double avg = std::accumulate(entry.playouts.begin(), entry.playouts.end(), 0.0) /
                           static_cast<double>(entry.playouts.size());
        child.score = cfg.alpha * node.score + (1.0 - cfg.alpha) * avg;
        entry.score = child.score;
        out.trace.push_back(std::move(entry));
        children.push_back(std::move(child));
      }
    }
    live.clear();
    for (auto& c : children) (c.finished ? finished : live).push_back(std::move(c));
    std::sort(live.begin(), live.end(), better);
    if (live.size() > width) live.resize(width);
  }

  const std::vector<Node>& pool = finished.empty() ? live : finished;
  if (pool.empty()) return out;
  const Node& best = *std::min_element(pool.begin(), pool.end(), better);
  out.best.ids = best.ids;
  out.best.sentence = decode_ids(vocab, event, best.ids);
  out.best.logprob = best.logprob;
  out.best.confidence = finished.empty() ? 0.0 : std::clamp(best.score, 0.0, 1.0);
  return out;
}

WeightLearningResult learn_playout_weights(const std::vector<EventTuple>& events,
                                           const WeightedDecoder& decode,
                                           const WeightLearningConfig& cfg) {
  if (events.empty()) throw EmptyCorpus("no validation events to learn playout weights from");
  if (!(cfg.delta > 0.0)) throw ConfigError("weight bump delta must be positive");
  if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  WeightLearningResult result{uniform_slot_weights(), 0, false};
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    bool bumped = false;
    for (const auto& event : events) {
      const auto output = decode(event, result.weights);
      bool changed = false;
      for (Slot s : kAllSlots) {
        if (!event.has(s)) continue;
        if (std::find(output.begin(), output.end(), event.slot(s)->surface) != output.end())
          continue;
        result.weights[static_cast<std::size_t>(s)] += cfg.delta;
        changed = true;
      }
      if (changed) {
        const double sum = std::accumulate(result.weights.begin(), result.weights.end(), 0.0);
        for (double& w : result.weights) w /= sum;
        bumped = true;
      }
    }
    result.epochs = epoch + 1;
    if (!bumped) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace e2s
