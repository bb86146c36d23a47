#include "e2s/retedit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "e2s/common.hpp"

namespace e2s {

void EmbeddingConfig::validate() const {
  if (svd_rank < 0 || random_dim < 0 || svd_rank + random_dim == 0)
    throw ConfigError("embedding needs a positive dimension");
  if (!(random_weight >= 0.0)) throw ConfigError("random_weight must be non-negative");
  for (double w : slot_weights)
    if (!(w >= 0.0)) throw ConfigError("slot weights must be non-negative");
  if (power_iterations < 0) throw ConfigError("power_iterations must be non-negative");
}

namespace {

/// Standard normal draw from the portable uniform source (Box-Muller).
double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n <= 0.0) return;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

/// Rank-k factors of `a` by randomized range finding with power iterations.
Eigen::MatrixXd randomized_factors(const Eigen::MatrixXd& a, int rank, int power_iterations,
                                   std::uint64_t seed) {
  const Eigen::Index k = std::min<Eigen::Index>({rank, a.rows(), a.cols()});
  if (k == 0) return Eigen::MatrixXd::Zero(a.rows(), rank);
  const Eigen::Index l = std::min<Eigen::Index>(k + 5, std::min(a.rows(), a.cols()));
  Rng rng(seed);
  Eigen::MatrixXd omega(a.cols(), l);
  for (Eigen::Index j = 0; j < l; ++j)
    for (Eigen::Index i = 0; i < a.cols(); ++i) omega(i, j) = gaussian(rng);

  const auto orthonormal = [](const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols()));
  };
  Eigen::MatrixXd q = orthonormal(a * omega);
  for (int it = 0; it < power_iterations; ++it) q = orthonormal(a * orthonormal(a.transpose() * q));

  const Eigen::MatrixXd b = q.transpose() * a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
  Eigen::MatrixXd u = q * svd.matrixU().leftCols(k);
  Eigen::VectorXd s = svd.singularValues().head(k).cwiseSqrt();
  // Fix each column's sign so the largest-magnitude entry is positive.
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index idx;
    u.col(j).cwiseAbs().maxCoeff(&idx);
    if (u(idx, j) < 0) u.col(j) *= -1.0;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), rank);
  out.leftCols(k) = u * s.asDiagonal();
  return out;
}

std::string event_key(const EventTuple& e) { return e.to_json().dump(); }

}  // namespace

RetrievalIndex RetrievalIndex::build(std::vector<TrainingPair> pairs, const EmbeddingConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw EmptyCorpus("cannot build a retrieval index from no pairs");
  RetrievalIndex index;
  index.cfg_ = cfg;
  index.pairs_ = std::move(pairs);

  if (cfg.svd_rank > 0) {
    std::map<std::string, Eigen::Index> rows, cols;
    for (const auto& p : index.pairs_) {
      for (const auto& t : p.event.tokens()) rows.emplace(t, 0);
      for (const auto& t : p.sentence) cols.emplace(t, 0);
    }
    Eigen::Index r = 0, c = 0;
    for (auto& [t, i] : rows) i = r++;
    for (auto& [t, i] : cols) i = c++;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(r, std::max<Eigen::Index>(c, 1));
    for (const auto& p : index.pairs_)
      for (const auto& et : p.event.tokens())
        for (const auto& st : p.sentence) counts(rows[et], cols[st]) += 1.0;
    const double total = counts.sum();
    Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(counts.rows(), counts.cols());
    if (total > 0.0) {
      const Eigen::VectorXd row_sum = counts.rowwise().sum();
      const Eigen::RowVectorXd col_sum = counts.colwise().sum();
      for (Eigen::Index i = 0; i < counts.rows(); ++i)
        for (Eigen::Index j = 0; j < counts.cols(); ++j)
          if (counts(i, j) > 0.0)
            ppmi(i, j) = std::max(0.0, std::log(counts(i, j) * total / (row_sum(i) * col_sum(j))));
    }
    const Eigen::MatrixXd f =
        randomized_factors(ppmi, cfg.svd_rank, cfg.power_iterations, derive_seed(cfg.seed, 1));
    for (const auto& [t, i] : rows) {
      std::vector<double> v(f.cols());
      for (Eigen::Index j = 0; j < f.cols(); ++j) v[static_cast<std::size_t>(j)] = f(i, j);
      normalize(v);
      index.factors_.emplace(t, std::move(v));
    }
  }
  index.finish();
  return index;
}

void RetrievalIndex::finish() {
  embeddings_.clear();
  exact_.clear();
  for (std::size_t id = 0; id < pairs_.size(); ++id) {
    embeddings_.push_back(embed(pairs_[id].event));
    exact_.emplace(event_key(pairs_[id].event), id);  // keeps the first id
  }
}

std::vector<double> RetrievalIndex::token_vector(const std::string& token) const {
  std::vector<double> v(static_cast<std::size_t>(cfg_.svd_rank + cfg_.random_dim), 0.0);
  if (auto it = factors_.find(token); it != factors_.end())
    std::copy(it->second.begin(), it->second.end(), v.begin());
  if (cfg_.random_dim > 0) {
    Rng rng(derive_seed(cfg_.seed, fnv1a64(token)));
    std::vector<double> r(static_cast<std::size_t>(cfg_.random_dim));
    for (double& x : r) x = gaussian(rng);
    normalize(r);
    for (std::size_t i = 0; i < r.size(); ++i)
      v[static_cast<std::size_t>(cfg_.svd_rank) + i] = cfg_.random_weight * r[i];
  }
  return v;
}

std::vector<double> RetrievalIndex::embed(const EventTuple& event) const {
  const std::size_t block = static_cast<std::size_t>(cfg_.svd_rank + cfg_.random_dim);
  std::vector<double> out(block * kSlotCount, 0.0);
  for (Slot s : kAllSlots) {
    if (!event.has(s)) continue;
    const auto v = token_vector(event.slot(s)->surface);
    const auto k = static_cast<std::size_t>(s);
    for (std::size_t i = 0; i < block; ++i) out[k * block + i] = cfg_.slot_weights[k] * v[i];
  }
  return out;
}

double RetrievalIndex::distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double cos = (na > 0.0 && nb > 0.0) ? dot / std::sqrt(na * nb) : 0.0;
  return std::clamp((1.0 - cos) / 2.0, 0.0, 1.0);
}

double RetrievalIndex::distance(const EventTuple& query, std::size_t id) const {
  if (event_key(query) == event_key(pairs_.at(id).event)) return 0.0;
  return distance(embed(query), embeddings_.at(id));
}

Retrieval RetrievalIndex::retrieve(const EventTuple& query) const {
  if (auto it = exact_.find(event_key(query)); it != exact_.end()) return {it->second, 0.0};
  const auto q = embed(query);
  Retrieval best{0, 2.0};
  for (std::size_t id = 0; id < embeddings_.size(); ++id) {
    const double d = distance(q, embeddings_[id]);
    if (d < best.distance) best = {id, d};
  }
  return best;
}

nlohmann::json RetrievalIndex::to_json() const {
  nlohmann::json j;
  j["format"] = "e2s-retrieval-index";
  j["version"] = 1;
  j["config"] = {{"svd_rank", cfg_.svd_rank},
                 {"random_dim", cfg_.random_dim},
                 {"random_weight", cfg_.random_weight},
                 {"slot_weights", cfg_.slot_weights},
                 {"power_iterations", cfg_.power_iterations},
                 {"seed", cfg_.seed}};
  std::map<std::string, std::vector<double>> sorted(factors_.begin(), factors_.end());
  j["factors"] = sorted;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : pairs_)
    j["pairs"].push_back({{"event", p.event.to_json()}, {"sentence", p.sentence}});
  return j;
}

RetrievalIndex RetrievalIndex::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "e2s-retrieval-index") throw FormatError("not an e2s retrieval index");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported retrieval index version");
    RetrievalIndex index;
    const auto& c = j.at("config");
    index.cfg_.svd_rank = c.at("svd_rank").get<int>();
    index.cfg_.random_dim = c.at("random_dim").get<int>();
    index.cfg_.random_weight = c.at("random_weight").get<double>();
    index.cfg_.slot_weights = c.at("slot_weights").get<std::array<double, kSlotCount>>();
    index.cfg_.power_iterations = c.at("power_iterations").get<int>();
    index.cfg_.seed = c.at("seed").get<std::uint64_t>();
    index.cfg_.validate();
    for (const auto& [t, v] : j.at("factors").items()) {
      auto vec = v.get<std::vector<double>>();
      if (vec.size() != static_cast<std::size_t>(index.cfg_.svd_rank))
        throw FormatError("factor vector of '" + t + "' has the wrong dimension");
      index.factors_.emplace(t, std::move(vec));
    }
    for (const auto& p : j.at("pairs"))
      index.pairs_.push_back(TrainingPair{EventTuple::from_json(p.at("event")),
                                          p.at("sentence").get<GeneralizedSentence>()});
    if (index.pairs_.empty()) throw EmptyCorpus("retrieval index holds no pairs");
    index.finish();
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed retrieval index: ") + e.what());
  }
}

void RetrievalIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("IOError", "cannot write '" + path.string() + "'");
  out << to_json().dump() << '\n';
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "e2s build-index");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

GeneralizedSentence SlotSubstitutionEditor::edit(const EventTuple& input,
                                                 const TrainingPair& retrieved) const {
  std::vector<std::pair<std::string, std::string>> mapping;  // first slot wins
  std::optional<std::pair<std::string, std::string>> prep;
  for (Slot s : kAllSlots) {
    if (!input.has(s) || !retrieved.event.has(s)) continue;
    const auto& from = retrieved.event.slot(s)->surface;
    const auto& to = input.slot(s)->surface;
    if (s == Slot::Preposition) {
      prep.emplace(from, to);
      continue;
    }
    if (std::none_of(mapping.begin(), mapping.end(), [&](const auto& m) { return m.first == from; }))
      mapping.emplace_back(from, to);
  }
  GeneralizedSentence out = retrieved.sentence;
  std::vector<bool> done(out.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (const auto& [from, to] : mapping)
      if (out[i] == from) {
        out[i] = to;
        done[i] = true;
        break;
      }
  if (prep)
    for (std::size_t i = 0; i < out.size(); ++i)
      if (!done[i] && retrieved.sentence[i] == prep->first) {
        out[i] = prep->second;
        break;
      }
  return out;
}

double retedit_confidence(double distance) { return 1.0 - std::clamp(distance, 0.0, 1.0); }

RetEditResult retrieve_and_edit(const RetrievalIndex& index, const EditorModel& editor,
                                const EventTuple& event) {
  const Retrieval r = index.retrieve(event);
  const TrainingPair& pair = index.pair(r.id);
  GeneralizedSentence sentence = r.distance == 0.0 ? pair.sentence : editor.edit(event, pair);
  return RetEditResult{std::move(sentence), r, retedit_confidence(r.distance)};
}

}  // namespace e2s
