#include "e2s/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "e2s/common.hpp"
#include "e2s/metrics.hpp"

namespace e2s {

std::string_view member_name(Member m) {
  switch (m) {
    case Member::RetEdit: return "retedit";
    case Member::Templates: return "templates";
    case Member::MCBeam: return "mc";
    case Member::Fsm: return "fsm";
    case Member::Beam: return "beam";
  }
  return "?";
}

std::string_view member_title(Member m) {
  switch (m) {
    case Member::RetEdit: return "RetEdit";
    case Member::Templates: return "Templates";
    case Member::MCBeam: return "Monte Carlo";
    case Member::Fsm: return "FSM";
    case Member::Beam: return "Beam";
  }
  return "?";
}

Member member_from_name(std::string_view name) {
  for (Member m : kMemberOrder)
    if (member_name(m) == name) return m;
  throw ConfigError("unknown ensemble member '" + std::string(name) +
                    "' (expected retedit, templates, mc, fsm or beam)");
}

bool has_threshold(Member m) {
  return m == Member::RetEdit || m == Member::Templates || m == Member::MCBeam;
}

void EnsembleConfig::validate() const {
  if (members.empty() || members.back() != Member::Beam)
    throw ConfigError("the ensemble must end with the beam member");
  std::size_t pos = 0;
  for (Member m : members) {
    while (pos < kMemberOrder.size() && kMemberOrder[pos] != m) ++pos;
    if (pos == kMemberOrder.size())
      throw ConfigError("ensemble members must follow retedit, templates, mc, fsm, beam");
    ++pos;
  }
  for (Member m : members) {
    if (!has_threshold(m)) continue;
    auto it = thresholds.find(m);
    if (it == thresholds.end())
      throw ConfigError("missing threshold for '" + std::string(member_name(m)) + "'");
    if (!std::isfinite(it->second))
      throw ConfigError("threshold for '" + std::string(member_name(m)) + "' must be finite");
  }
  for (const auto& [m, t] : thresholds)
    if (!has_threshold(m))
      throw ConfigError("'" + std::string(member_name(m)) + "' takes no threshold");
}

nlohmann::json EnsembleConfig::to_json() const {
  nlohmann::json j;
  j["members"] = nlohmann::json::array();
  for (Member m : members) j["members"].push_back(std::string(member_name(m)));
  j["thresholds"] = nlohmann::json::object();
  for (const auto& [m, t] : thresholds) j["thresholds"][std::string(member_name(m))] = t;
  return j;
}

EnsembleConfig EnsembleConfig::from_json(const nlohmann::json& j) {
  EnsembleConfig cfg;
  try {
    if (j.contains("members")) {
      cfg.members.clear();
      for (const auto& m : j.at("members")) cfg.members.push_back(member_from_name(m.get<std::string>()));
    }
    if (j.contains("thresholds")) {
      cfg.thresholds.clear();
      for (const auto& [name, t] : j.at("thresholds").items())
        cfg.thresholds[member_from_name(name)] = t.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ensemble config: ") + e.what());
  }
  // Thresholds of members left out of a partial ensemble are ignored.
  for (auto it = cfg.thresholds.begin(); it != cfg.thresholds.end();)
    it = std::find(cfg.members.begin(), cfg.members.end(), it->first) == cfg.members.end()
             ? cfg.thresholds.erase(it)
             : std::next(it);
  cfg.validate();
  return cfg;
}

std::string EnsembleConfig::label() const {
  if (members.size() == kMemberOrder.size()) return "Full Ensemble";
  std::string out;
  for (Member m : members) {
    if (m == Member::Beam) continue;
    if (!out.empty()) out += '+';
    out += m == Member::MCBeam ? std::string("MC") : std::string(member_title(m));
  }
  return out.empty() ? "Beam" : out;
}

bool accepts(const EnsembleConfig& cfg, Member member, const MemberOutput& out) {
  if (!out.sentence) return false;
  if (member == Member::Beam || member == Member::Fsm) return true;
  return out.confidence >= cfg.thresholds.at(member);
}

CascadeResult cascade_realize(const EventTuple& event, const MemberSet& members,
                              const EnsembleConfig& cfg) {
  CascadeResult result;
  std::optional<std::pair<Member, MemberOutput>> last;
  for (Member m : cfg.members) {
    auto it = members.find(m);
    if (it == members.end() || !it->second)
      throw ConfigError("no realizer supplied for '" + std::string(member_name(m)) + "'");
    MemberOutput out = it->second->realize(event);
    Invocation inv{m, out.sentence.has_value(), out.confidence, accepts(cfg, m, out)};
    result.invoked.push_back(inv);
    if (inv.accepted) {
      result.sentence = std::move(*out.sentence);
      result.member_used = m;
      result.confidence = out.confidence;
      return result;
    }
    if (out.sentence) last.emplace(m, std::move(out));
  }
  if (last) {
    result.sentence = std::move(*last->second.sentence);
    result.member_used = last->first;
    result.confidence = last->second.confidence;
  }
  return result;
}

// ---------------------------------------------------------------------------

nlohmann::json RunLogEntry::to_json() const {
  nlohmann::json j;
  j["event"] = event.to_json();
  j["member_used"] = std::string(member_name(result.member_used));
  j["confidence"] = result.confidence;
  j["sentence"] = result.sentence;
  j["invoked"] = nlohmann::json::array();
  for (const auto& inv : result.invoked)
    j["invoked"].push_back({{"member", std::string(member_name(inv.member))},
                            {"produced", inv.produced},
                            {"confidence", inv.confidence},
                            {"accepted", inv.accepted}});
  return j;
}

namespace {

UtilizationReport make_report(const std::map<Member, std::size_t>& counts, std::size_t n,
                              const EnsembleConfig& cfg, const std::string& source) {
  if (n == 0) throw EmptyCorpus("utilization of an empty run log");
  UtilizationReport r{source, n, {}};
  for (Member m : cfg.members) {
    auto it = counts.find(m);
    const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    r.percent[m] = 100.0 * c / static_cast<double>(n);
  }
  for (const auto& [m, c] : counts)
    if (std::find(cfg.members.begin(), cfg.members.end(), m) == cfg.members.end())
      throw FormatError("run log uses '" + std::string(member_name(m)) +
                        "', which is not in the ensemble");
  return r;
}

}  // namespace

UtilizationReport utilization(const std::vector<RunLogEntry>& log, const EnsembleConfig& cfg,
                              const std::string& source) {
  std::map<Member, std::size_t> counts;
  for (const auto& e : log) ++counts[e.result.member_used];
  return make_report(counts, log.size(), cfg, source);
}

UtilizationReport utilization_from_jsonl(std::istream& in, const EnsembleConfig& cfg,
                                         const std::string& source) {
  std::map<Member, std::size_t> counts;
  std::size_t n = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (is_header_line(j)) continue;
      ++counts[member_from_name(j.at("member_used").get<std::string>())];
      ++n;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("run log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return make_report(counts, n, cfg, source);
}

std::string format_utilization_table(const std::vector<UtilizationRow>& rows) {
  std::ostringstream out;
  char cell[64];
  const auto put = [&](const char* fmt, const char* s) {
    std::snprintf(cell, sizeof cell, fmt, s);
    out << cell;
  };
  put("%-24s", "");
  for (Member m : kMemberOrder) put("| %-19s", std::string(member_title(m)).c_str());
  out << '\n';
  put("%-24s", "");
  for (std::size_t i = 0; i < kMemberOrder.size(); ++i) out << "| Test     Pipeline  ";
  out << '\n' << std::string(24 + 21 * kMemberOrder.size(), '-') << '\n';
  for (const auto& row : rows) {
    put("%-24s", row.ensemble.label().c_str());
    for (Member m : kMemberOrder) {
      out << "| ";
      for (const auto* rep : {&row.test, &row.pipeline}) {
        const bool in = std::find(row.ensemble.members.begin(), row.ensemble.members.end(), m) !=
                        row.ensemble.members.end();
        if (in && rep->has_value() && (*rep)->percent.count(m)) {
          std::snprintf(cell, sizeof cell, "%-9.2f", (*rep)->percent.at(m));
          out << cell;
        } else {
          out << "-        ";
        }
        out << (rep == &row.test ? " " : "");
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

ThresholdGrid ThresholdGrid::product(std::size_t gated, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("threshold grid needs at least one value");
  ThresholdGrid grid;
  std::vector<std::size_t> idx(gated, 0);
  while (true) {
    std::vector<double> t;
    for (std::size_t i : idx) t.push_back(values[i]);
    grid.tuples.push_back(std::move(t));
    std::size_t k = gated;
    while (k > 0 && ++idx[k - 1] == values.size()) idx[--k] = 0;
    if (k == 0) break;
  }
  return grid;
}

ThresholdGrid ThresholdGrid::standard(std::size_t gated) {
  std::vector<double> v;
  for (int i = 1; i <= 9; ++i) v.push_back(i / 10.0);
  return product(gated, v);
}

ThresholdGrid ThresholdGrid::from_json(const nlohmann::json& j, std::size_t gated) {
  try {
    if (j.contains("tuples")) {
      ThresholdGrid grid;
      grid.tuples = j.at("tuples").get<std::vector<std::vector<double>>>();
      if (grid.tuples.empty()) throw ConfigError("threshold grid lists no tuples");
      for (const auto& t : grid.tuples)
        if (t.size() != gated)
          throw ConfigError("threshold tuple has " + std::to_string(t.size()) + " values, expected " +
                            std::to_string(gated));
      return grid;
    }
    return product(gated, j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed threshold grid: ") + e.what());
  }
}

std::vector<Member> gated_members(const EnsembleConfig& cfg) {
  std::vector<Member> out;
  for (Member m : cfg.members)
    if (has_threshold(m)) out.push_back(m);
  return out;
}

TuneResult tune_thresholds(const std::vector<TrainingPair>& validation, const MemberSet& members,
                           const EnsembleConfig& cfg, const ThresholdGrid& grid) {
  cfg.validate();
  if (validation.empty()) throw EmptyCorpus("no validation pairs to tune thresholds on");
  if (grid.tuples.empty()) throw ConfigError("empty threshold grid");
  const auto gated = gated_members(cfg);

  // Every member's output per event, computed once.
  std::vector<std::map<Member, MemberOutput>> cache(validation.size());
  for (Member m : cfg.members) {
    auto it = members.find(m);
    if (it == members.end() || !it->second)
      throw ConfigError("no realizer supplied for '" + std::string(member_name(m)) + "'");
    for (std::size_t i = 0; i < validation.size(); ++i)
      cache[i][m] = it->second->realize(validation[i].event);
  }
  std::vector<std::vector<TokenSeq>> refs;
  for (const auto& p : validation) refs.push_back({p.sentence});

  TuneResult result;
  std::optional<std::vector<double>> best;
  for (const auto& tuple : grid.tuples) {
    if (tuple.size() != gated.size()) throw ConfigError("threshold tuple size mismatch");
    EnsembleConfig trial = cfg;
    for (std::size_t k = 0; k < gated.size(); ++k) trial.thresholds[gated[k]] = tuple[k];
    std::vector<TokenSeq> outputs;
    for (std::size_t i = 0; i < validation.size(); ++i) {
      TokenSeq chosen;
      std::optional<TokenSeq> last;
      bool done = false;
      for (Member m : trial.members) {
        const MemberOutput& out = cache[i].at(m);
        if (accepts(trial, m, out)) {
          chosen = *out.sentence;
          done = true;
          break;
        }
        if (out.sentence) last = *out.sentence;
      }
      if (!done && last) chosen = *last;
      outputs.push_back(std::move(chosen));
    }
    const double score = corpus_bleu(outputs, refs, 4);
    result.evaluated.emplace_back(tuple, score);
    if (!best || score > result.bleu4 || (score == result.bleu4 && *best < tuple)) {
      best = tuple;
      result.bleu4 = score;
    }
  }
  for (std::size_t k = 0; k < gated.size(); ++k) result.thresholds[gated[k]] = (*best)[k];
  return result;
}

// ---------------------------------------------------------------------------

MemberOutput RetEditRealizer::realize(const EventTuple& event) const {
  auto r = retrieve_and_edit(index_, editor_, event);
  return {std::move(r.sentence), r.confidence};
}

MemberOutput TemplateRealizer::realize(const EventTuple& event) const {
  auto r = templater_.realize(event, cfg_);
  return {std::move(r.sentence), r.confidence};
}

MemberOutput MCBeamRealizer::realize(const EventTuple& event) const {
  MCBeamConfig cfg = cfg_;
  cfg.seed = derive_seed(cfg_.seed, fnv1a64(event.to_string()));
  auto r = mc_beam_decode(model_, encode_event(model_.vocabulary(), event), cfg);
  if (r.best.ids.empty()) return {std::nullopt, 0.0};
  return {std::move(r.best.sentence), r.best.confidence};
}

MemberOutput FsmRealizer::realize(const EventTuple& event) const {
  auto r = fsm_decode(model_, encode_event(model_.vocabulary(), event), cfg_);
  if (!r) return {std::nullopt, 0.0};
  return {std::move(r->sentence), r->confidence};
}

MemberOutput BeamRealizer::realize(const EventTuple& event) const {
  auto r = beam_decode(model_, encode_event(model_.vocabulary(), event), cfg_);
  return {std::move(r.sentence), r.confidence};
}

}  // namespace e2s
