#include "e2s/decoders.hpp"

#include <algorithm>
#include <cmath>

#include "e2s/common.hpp"

namespace e2s {

std::vector<double> admissible(std::vector<double> dist, const EncodedEvent& event,
                               std::span<const TokenId> prefix, std::size_t max_length) {
  dist[Vocabulary::kBegin] = 0.0;
  if (prefix.size() >= max_length) {
    const double eos = dist[Vocabulary::kEos];
    std::fill(dist.begin(), dist.end(), 0.0);
    dist[Vocabulary::kEos] = eos;
    return dist;
  }
  if (prefix.empty()) dist[Vocabulary::kEos] = 0.0;
  const auto left = unconsumed(event, prefix);
  if (std::find(left.begin(), left.end(), Vocabulary::kUnk) == left.end())
    dist[Vocabulary::kUnk] = 0.0;
  return dist;
}

bool ids_less(std::span<const TokenId> a, std::span<const TokenId> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

struct Hyp {
  std::vector<TokenId> ids;
  double logprob = 0.0;
  bool finished = false;
};

bool better(const Hyp& a, const Hyp& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return ids_less(a.ids, b.ids);
}

}  // namespace

Decoded beam_decode(const SequenceModel& model, const EncodedEvent& event, const BeamConfig& cfg) {
  if (cfg.width < 1) throw ConfigError("beam width must be at least 1");
  if (cfg.max_length < 1) throw ConfigError("max_length must be at least 1");
  const auto max_len = static_cast<std::size_t>(cfg.max_length);
  const auto width = static_cast<std::size_t>(cfg.width);

  std::vector<Hyp> beam{Hyp{}};
  std::optional<Hyp> best;
  while (!beam.empty()) {
    std::vector<Hyp> children;
    for (const auto& h : beam) {
      const auto dist = admissible(model.next_distribution(event, h.ids), event, h.ids, max_len);
      for (std::size_t id = 0; id < dist.size(); ++id) {
        if (dist[id] <= 0.0) continue;
        Hyp c{h.ids, h.logprob + std::log(dist[id]), id == Vocabulary::kEos};
        if (!c.finished) c.ids.push_back(static_cast<TokenId>(id));
        children.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(width, children.size());
    std::partial_sort(children.begin(), children.begin() + static_cast<std::ptrdiff_t>(keep),
                      children.end(), better);
    children.resize(keep);
    beam.clear();
    for (auto& c : children) {
      if (c.finished) {
        if (!best || better(c, *best)) best = c;
      } else {
        beam.push_back(std::move(c));
      }
    }
    // Scores only fall as hypotheses grow.
    if (best && (beam.empty() || best->logprob >= beam.front().logprob)) break;
  }

  Decoded out;
  if (!best) return out;  // the model gave <eos> no mass at the length cap
  out.ids = best->ids;
  out.sentence = decode_ids(model.vocabulary(), event, out.ids);
  out.logprob = best->logprob;
  out.confidence = std::exp(best->logprob / static_cast<double>(out.ids.size() + 1));
  return out;
}

}  // namespace e2s
