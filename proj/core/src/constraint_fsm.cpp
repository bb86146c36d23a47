#include "e2s/decoders.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "e2s/common.hpp"

namespace e2s {

ConstraintFSM::ConstraintFSM(std::vector<TokenId> ids, std::vector<std::string> surfaces,
                             std::size_t min_matched)
    : ids_(std::move(ids)), surfaces_(std::move(surfaces)), min_matched_(min_matched) {
  if (ids_.empty()) throw Error("InvalidArgument", "constraint FSM needs at least one token");
  if (ids_.size() > kMaxConstraints)
    throw Error("InvalidArgument", "too many constraint tokens for the FSM");
  if (surfaces_.size() != ids_.size())
    throw Error("InvalidArgument", "constraint ids and surfaces differ in length");
  if (min_matched_ < 1 || min_matched_ > ids_.size())
    throw ConfigError("min_matched must lie in [1, " + std::to_string(ids_.size()) + "]");
}

std::size_t ConstraintFSM::default_min_matched(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(n) - 1e-12)));
}

bool ConstraintFSM::accepting(State s) const {
  return static_cast<std::size_t>(std::popcount(s)) >= min_matched_;
}

std::vector<ConstraintFSM::State> ConstraintFSM::accepting_states() const {
  std::vector<State> out;
  for (State s = 0; s < state_count(); ++s)
    if (accepting(s)) out.push_back(s);
  return out;
}

ConstraintFSM::State ConstraintFSM::advance(State s, TokenId token) const {
  // Several OOV constraints share <unk>; each emission takes the first open one.
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == token && !(s & (State{1} << i))) return s | (State{1} << i);
  return s;
}

bool ConstraintFSM::is_constraint(TokenId token) const {
  return std::find(ids_.begin(), ids_.end(), token) != ids_.end();
}

ConstraintFSM build_constraint_fsm(const EncodedEvent& event,
                                   std::optional<std::size_t> min_matched) {
  std::vector<TokenId> ids;
  std::vector<std::string> surfaces;
  for (std::size_t i = 0; i < event.ids.size(); ++i) {
    if (std::find(surfaces.begin(), surfaces.end(), event.surfaces[i]) != surfaces.end()) continue;
    ids.push_back(event.ids[i]);
    surfaces.push_back(event.surfaces[i]);
  }
  const std::size_t m = min_matched.value_or(ConstraintFSM::default_min_matched(ids.size()));
  return ConstraintFSM(std::move(ids), std::move(surfaces), m);
}

void FsmConfig::validate() const {
  if (beam_size < 1) throw ConfigError("FSM beam size must be at least 1");
  if (per_state < 1) throw ConfigError("FSM per-state capacity must be at least 1");
  if (horizon < 1) throw ConfigError("FSM horizon must be at least 1");
}

namespace {

struct Hyp {
  std::vector<TokenId> ids;
  double logprob = 0.0;
};

bool better(const Hyp& a, const Hyp& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return ids_less(a.ids, b.ids);
}

}  // namespace

std::optional<Decoded> fsm_decode(const SequenceModel& model, const EncodedEvent& event,
                                  const FsmConfig& cfg) {
  cfg.validate();
  const ConstraintFSM fsm = build_constraint_fsm(event, cfg.min_matched);
  const auto horizon = static_cast<std::size_t>(cfg.horizon);
  const auto per_state = static_cast<std::size_t>(cfg.per_state);
  const auto proposals = static_cast<std::size_t>(cfg.beam_size);

  std::vector<std::vector<Hyp>> beams(fsm.state_count());
  beams[0].push_back(Hyp{});
  std::optional<Hyp> best;

  for (std::size_t step = 0; step <= horizon; ++step) {
    std::vector<std::vector<Hyp>> next(fsm.state_count());
    for (ConstraintFSM::State s = 0; s < beams.size(); ++s) {
      for (const auto& h : beams[s]) {
        const auto dist =
            admissible(model.next_distribution(event, h.ids), event, h.ids, horizon);
        std::vector<TokenId> others;
        for (std::size_t id = 0; id < dist.size(); ++id) {
          const auto tok = static_cast<TokenId>(id);
          if (dist[id] > 0.0 && !fsm.is_constraint(tok)) others.push_back(tok);
        }
        const std::size_t keep = std::min(proposals, others.size());
        std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(keep),
                          others.end(), [&](TokenId a, TokenId b) {
                            if (dist[a] != dist[b]) return dist[a] > dist[b];
                            return a < b;
                          });
        others.resize(keep);
        for (TokenId c : fsm.ids())
          if (dist[static_cast<std::size_t>(c)] > 0.0 &&
              std::find(others.begin(), others.end(), c) == others.end())
            others.push_back(c);

        for (TokenId tok : others) {
          Hyp child{h.ids, h.logprob + std::log(dist[static_cast<std::size_t>(tok)])};
          if (tok == Vocabulary::kEos) {
            if (fsm.accepting(s) && (!best || better(child, *best))) best = std::move(child);
            continue;
          }
          child.ids.push_back(tok);
          next[fsm.advance(s, tok)].push_back(std::move(child));
        }
      }
    }
    double best_live = -INFINITY;
    for (auto& beam : next) {
      std::sort(beam.begin(), beam.end(), better);
      if (beam.size() > per_state) beam.resize(per_state);
      if (!beam.empty()) best_live = std::max(best_live, beam.front().logprob);
    }
    beams = std::move(next);
    if (best && best->logprob >= best_live) break;
  }

  if (!best) return std::nullopt;
  Decoded out;
  out.ids = best->ids;
  out.sentence = decode_ids(model.vocabulary(), event, out.ids);
  out.logprob = best->logprob;
  out.confidence = std::exp(best->logprob / static_cast<double>(out.ids.size() + 1));
  return out;
}

}  // namespace e2s
