#include "e2s/ngram_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace e2s {

std::string_view to_string(Direction d) {
  return d == Direction::Forward ? "forward" : "backward";
}

Direction direction_from_string(std::string_view s) {
  if (s == "forward") return Direction::Forward;
  if (s == "backward") return Direction::Backward;
  throw ConfigError("direction must be 'forward' or 'backward', got '" + std::string(s) + "'");
}

void NGramConfig::validate() const {
  if (order < 2) throw ConfigError("n-gram order must be at least 2");
  if (!(copy_bias >= 0.0 && copy_bias < 1.0)) throw ConfigError("copy bias must lie in [0, 1)");
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("discount must lie in (0, 1)");
  if (!(floor > 0.0 && floor < 1e-3)) throw ConfigError("probability floor must lie in (0, 1e-3)");
}

NGramModel::NGramModel(Vocabulary vocab, NGramConfig cfg)
    : vocab_(std::move(vocab)), cfg_(cfg), tables_(static_cast<std::size_t>(cfg.order)) {}

std::string NGramModel::key(std::span<const TokenId> context) {
  std::string k(context.size() * sizeof(TokenId), '\0');
  for (std::size_t i = 0; i < context.size(); ++i) {
    const auto v = static_cast<std::uint32_t>(context[i]);
    for (std::size_t b = 0; b < 4; ++b) k[i * 4 + b] = static_cast<char>((v >> (8 * b)) & 0xff);
  }
  return k;
}

void NGramModel::add_sentence(const std::vector<TokenId>& ids) {
  const std::size_t pad = static_cast<std::size_t>(cfg_.order - 1);
  std::vector<TokenId> seq(pad, Vocabulary::kBegin);
  seq.insert(seq.end(), ids.begin(), ids.end());
  seq.push_back(Vocabulary::kEos);
  for (std::size_t i = pad; i < seq.size(); ++i) {
    for (std::size_t k = 0; k <= pad; ++k) {
      auto& stats = tables_[k][key(std::span<const TokenId>(seq).subspan(i - k, k))];
      ++stats.total;
      auto it = std::lower_bound(stats.next.begin(), stats.next.end(), seq[i],
                                 [](const auto& e, TokenId t) { return e.first < t; });
      if (it != stats.next.end() && it->first == seq[i]) ++it->second;
      else stats.next.insert(it, {seq[i], 1});
    }
  }
}

NGramModel NGramModel::train(const std::vector<GeneralizedSentence>& sentences,
                             const NGramConfig& cfg, const std::vector<std::string>& extra_tokens) {
  cfg.validate();
  std::vector<std::string> tokens = extra_tokens;
  std::size_t usable = 0;
  for (const auto& s : sentences) {
    if (!s.empty()) ++usable;
    tokens.insert(tokens.end(), s.begin(), s.end());
  }
  if (usable == 0) throw EmptyCorpus("no training sentences for the n-gram model");
  NGramModel model(Vocabulary(std::move(tokens)), cfg);
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    auto ids = model.vocab_.encode(s);
    if (cfg.direction == Direction::Backward) std::reverse(ids.begin(), ids.end());
    model.add_sentence(ids);
  }
  return model;
}

NGramModel NGramModel::train(const std::vector<TrainingPair>& pairs, const NGramConfig& cfg) {
  std::vector<GeneralizedSentence> sentences;
  std::vector<std::string> extra;
  for (const auto& p : pairs) {
    sentences.push_back(p.sentence);
    for (auto& t : p.event.tokens()) extra.push_back(std::move(t));
  }
  return train(sentences, cfg, extra);
}

std::vector<double> NGramModel::ngram_distribution(std::span<const TokenId> prefix) const {
  const std::size_t v = vocab_.size();
  std::vector<double> p(v, 1.0 / static_cast<double>(v - 1));
  p[Vocabulary::kBegin] = 0.0;

  const std::size_t pad = static_cast<std::size_t>(cfg_.order - 1);
  std::vector<TokenId> history(pad, Vocabulary::kBegin);
  history.insert(history.end(), prefix.begin(), prefix.end());
  const std::span<const TokenId> h(history);

  for (std::size_t k = 0; k <= pad; ++k) {
    const auto it = tables_[k].find(key(h.subspan(h.size() - k, k)));
    if (it == tables_[k].end()) break;  // longer contexts are unseen too
    const auto& stats = it->second;
    const double total = static_cast<double>(stats.total);
    const double gamma = cfg_.discount * static_cast<double>(stats.next.size()) / total;
    for (double& x : p) x *= gamma;
    for (const auto& [id, c] : stats.next)
      p[static_cast<std::size_t>(id)] += (static_cast<double>(c) - cfg_.discount) / total;
  }

  double sum = 0.0;
  for (std::size_t i = 1; i < v; ++i) {
    p[i] = std::max(p[i], cfg_.floor);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::vector<double> NGramModel::next_distribution(const EncodedEvent& event,
                                                  std::span<const TokenId> prefix) const {
  auto p = ngram_distribution(prefix);
  if (cfg_.copy_bias <= 0.0) return p;
  auto left = unconsumed(event, prefix);
  std::sort(left.begin(), left.end());
  left.erase(std::unique(left.begin(), left.end()), left.end());
  if (left.empty()) return p;
  double mass = 0.0;
  for (TokenId t : left) mass += p[static_cast<std::size_t>(t)];
  const double lambda = cfg_.copy_bias;
  for (double& x : p) x *= (1.0 - lambda);
  for (TokenId t : left) p[static_cast<std::size_t>(t)] += lambda * p[static_cast<std::size_t>(t)] /
                                                           ((1.0 - lambda) * mass);
  return p;
}

double NGramModel::sentence_nll(const EncodedEvent& event,
                                const GeneralizedSentence& sentence) const {
  auto ids = vocab_.encode(sentence);
  if (cfg_.direction == Direction::Backward) std::reverse(ids.begin(), ids.end());
  return e2s::sentence_nll(*this, event, ids);
}

NGramModel NGramModel::with_copy_bias(double lambda) const {
  NGramModel copy = *this;
  copy.cfg_.copy_bias = lambda;
  copy.cfg_.validate();
  return copy;
}

std::size_t NGramModel::count(std::span<const TokenId> context, TokenId next) const {
  if (context.size() >= tables_.size()) return 0;
  const auto it = tables_[context.size()].find(key(context));
  if (it == tables_[context.size()].end()) return 0;
  for (const auto& [id, c] : it->second.next)
    if (id == next) return c;
  return 0;
}

nlohmann::json NGramModel::to_json() const {
  nlohmann::json j;
  j["format"] = "e2s-ngram";
  j["version"] = 1;
  j["order"] = cfg_.order;
  j["copy_bias"] = cfg_.copy_bias;
  j["discount"] = cfg_.discount;
  j["floor"] = cfg_.floor;
  j["direction"] = std::string(to_string(cfg_.direction));
  j["vocabulary"] = vocab_.to_json();
  // Sorted so that the same model always serializes to the same bytes.
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& table : tables_) {
    std::map<std::vector<TokenId>, const ContextStats*> sorted;
    for (const auto& [k, stats] : table) {
      std::vector<TokenId> ctx(k.size() / 4);
      for (std::size_t i = 0; i < ctx.size(); ++i) {
        std::uint32_t v = 0;
        for (std::size_t b = 0; b < 4; ++b)
          v |= static_cast<std::uint32_t>(static_cast<unsigned char>(k[i * 4 + b])) << (8 * b);
        ctx[i] = static_cast<TokenId>(v);
      }
      sorted.emplace(std::move(ctx), &stats);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [ctx, stats] : sorted) {
      nlohmann::json next = nlohmann::json::array();
      for (const auto& [id, c] : stats->next) next.push_back({id, c});
      rows.push_back({ctx, next});
    }
    tables.push_back(std::move(rows));
  }
  j["tables"] = std::move(tables);
  return j;
}

NGramModel NGramModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "e2s-ngram") throw FormatError("not an e2s n-gram model");
    if (j.at("version").get<int>() != 1)
      throw FormatError("unsupported n-gram model version " + j.at("version").dump());
    NGramConfig cfg;
    cfg.order = j.at("order").get<int>();
    cfg.copy_bias = j.at("copy_bias").get<double>();
    cfg.discount = j.at("discount").get<double>();
    cfg.floor = j.at("floor").get<double>();
    cfg.direction = direction_from_string(j.at("direction").get<std::string>());
    cfg.validate();
    NGramModel model(Vocabulary::from_json(j.at("vocabulary")), cfg);
    const auto& tables = j.at("tables");
    if (tables.size() != static_cast<std::size_t>(cfg.order))
      throw FormatError("n-gram model has " + std::to_string(tables.size()) + " tables, expected " +
                        std::to_string(cfg.order));
    const auto v = static_cast<TokenId>(model.vocab_.size());
    for (std::size_t k = 0; k < tables.size(); ++k) {
      for (const auto& row : tables[k]) {
        const auto ctx = row.at(0).get<std::vector<TokenId>>();
        if (ctx.size() != k) throw FormatError("context length mismatch in n-gram table");
        ContextStats stats;
        for (const auto& e : row.at(1)) {
          const auto id = e.at(0).get<TokenId>();
          const auto c = e.at(1).get<std::size_t>();
          if (id < 0 || id >= v || c == 0) throw FormatError("bad n-gram count entry");
          stats.next.emplace_back(id, c);
          stats.total += c;
        }
        std::sort(stats.next.begin(), stats.next.end());
        model.tables_[k].emplace(key(ctx), std::move(stats));
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed n-gram model: ") + e.what());
  }
}

void NGramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("IOError", "cannot write '" + path.string() + "'");
  out << to_json().dump() << '\n';
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "e2s train");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace e2s
