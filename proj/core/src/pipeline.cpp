#include "e2s/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "e2s/common.hpp"

namespace e2s {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

fs::path resolve(const json& j, const char* key, const fs::path& base, const fs::path& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  fs::path p = j.at(key).get<std::string>();
  if (p.empty()) return p;
  return p.is_relative() && !base.empty() ? (base / p).lexically_normal() : p;
}

WordClass word_class_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(WordClass::Other); ++i)
    if (to_string(static_cast<WordClass>(i)) == name) return static_cast<WordClass>(i);
  throw ConfigError("unknown word class '" + name + "'");
}

json read_json_file(const fs::path& path, const std::string& producer) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), producer);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IOError", "cannot write " + path.string());
  return out;
}

void write_json_file(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
}

void require(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("config is missing paths.") + what);
}

}  // namespace

// --- config -------------------------------------------------------------------

void PipelineConfig::validate() const {
  if (split.train < 0 || split.validation < 0 || split.test < 0 ||
      split.train + split.validation + split.test == 0)
    throw ConfigError("split ratio must be non-negative and not all zero");
  ngram.validate();
  if (beam.width < 1 || beam.max_length < 1) throw ConfigError("beam width and max_length must be >= 1");
  mc.validate();
  fsm.validate();
  templates.validate();
  retedit.validate();
  ensemble.validate();
  if (grid_values.empty()) throw ConfigError("grid_values must not be empty");
  if (weight_learning.delta <= 0 || weight_learning.max_epochs < 0)
    throw ConfigError("weight_learning needs delta > 0 and max_epochs >= 0");
}

void PipelineConfig::sync_seeds() {
  mc.seed = seeds.decode;
  templates.seed = seeds.templates;
  retedit.seed = seeds.index;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
  PipelineConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.lexicon = resolve(p, "lexicon", base, {});
      c.paths.corpus = resolve(p, "corpus", base, {});
      c.paths.work_dir = resolve(p, "work_dir", base, {});
      c.paths.pool = resolve(p, "pool", base, {});
      c.paths.gender = resolve(p, "gender", base, {});
      c.paths.frame_rules = resolve(p, "frame_rules", base, {});
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      read_opt(s, "split", c.seeds.split);
      read_opt(s, "index", c.seeds.index);
      read_opt(s, "decode", c.seeds.decode);
      read_opt(s, "templates", c.seeds.templates);
      read_opt(s, "fill", c.seeds.fill);
    }
    if (j.contains("split")) {
      const auto r = j.at("split").get<std::vector<int>>();
      if (r.size() != 3) throw ConfigError("split must be [train, validation, test]");
      c.split = {r[0], r[1], r[2]};
    }
    if (j.contains("ngram")) {
      const auto& n = j.at("ngram");
      read_opt(n, "order", c.ngram.order);
      read_opt(n, "copy_bias", c.ngram.copy_bias);
      read_opt(n, "discount", c.ngram.discount);
      read_opt(n, "floor", c.ngram.floor);
    }
    if (j.contains("beam")) {
      read_opt(j.at("beam"), "width", c.beam.width);
      read_opt(j.at("beam"), "max_length", c.beam.max_length);
    }
    if (j.contains("mc")) {
      const auto& m = j.at("mc");
      read_opt(m, "beam_width", c.mc.beam_width);
      read_opt(m, "playouts", c.mc.playouts);
      read_opt(m, "alpha", c.mc.alpha);
      read_opt(m, "max_length", c.mc.max_length);
      read_opt(m, "weights", c.mc.weights);
    }
    if (j.contains("fsm")) {
      const auto& f = j.at("fsm");
      read_opt(f, "beam_size", c.fsm.beam_size);
      read_opt(f, "per_state", c.fsm.per_state);
      read_opt(f, "horizon", c.fsm.horizon);
      if (f.contains("min_matched") && !f.at("min_matched").is_null())
        c.fsm.min_matched = f.at("min_matched").get<std::size_t>();
    }
    if (j.contains("templates")) {
      const auto& t = j.at("templates");
      read_opt(t, "top_k", c.templates.top_k);
      read_opt(t, "max_phrase_length", c.templates.max_phrase_length);
      read_opt(t, "insert_determiner", c.templates.insert_determiner);
      if (t.contains("forbidden")) {
        c.templates.forbidden.clear();
        for (const auto& pair : t.at("forbidden")) {
          const auto names = pair.get<std::vector<std::string>>();
          if (names.size() != 2) throw ConfigError("forbidden bigrams are [class, class] pairs");
          c.templates.forbidden.emplace_back(word_class_from_name(names[0]),
                                             word_class_from_name(names[1]));
        }
      }
    }
    if (j.contains("retedit")) {
      const auto& r = j.at("retedit");
      read_opt(r, "svd_rank", c.retedit.svd_rank);
      read_opt(r, "random_dim", c.retedit.random_dim);
      read_opt(r, "random_weight", c.retedit.random_weight);
      read_opt(r, "slot_weights", c.retedit.slot_weights);
      read_opt(r, "power_iterations", c.retedit.power_iterations);
    }
    if (j.contains("ensemble")) c.ensemble = EnsembleConfig::from_json(j.at("ensemble"));
    read_opt(j, "grid_values", c.grid_values);
    if (j.contains("weight_learning")) {
      read_opt(j.at("weight_learning"), "delta", c.weight_learning.delta);
      read_opt(j.at("weight_learning"), "max_epochs", c.weight_learning.max_epochs);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
  c.sync_seeds();
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json PipelineConfig::to_json() const {
  json forbidden = json::array();
  for (const auto& [a, b] : templates.forbidden)
    forbidden.push_back({std::string(to_string(a)), std::string(to_string(b))});
  return {
      {"paths",
       {{"lexicon", paths.lexicon.string()},
        {"corpus", paths.corpus.string()},
        {"work_dir", paths.work_dir.string()},
        {"pool", paths.pool.string()},
        {"gender", paths.gender.string()},
        {"frame_rules", paths.frame_rules.string()}}},
      {"seeds",
       {{"split", seeds.split},
        {"index", seeds.index},
        {"decode", seeds.decode},
        {"templates", seeds.templates},
        {"fill", seeds.fill}}},
      {"split", {split.train, split.validation, split.test}},
      {"ngram",
       {{"order", ngram.order},
        {"copy_bias", ngram.copy_bias},
        {"discount", ngram.discount},
        {"floor", ngram.floor}}},
      {"beam", {{"width", beam.width}, {"max_length", beam.max_length}}},
      {"mc",
       {{"beam_width", mc.beam_width},
        {"playouts", mc.playouts},
        {"alpha", mc.alpha},
        {"max_length", mc.max_length},
        {"weights", mc.weights}}},
      {"fsm",
       {{"beam_size", fsm.beam_size},
        {"per_state", fsm.per_state},
        {"horizon", fsm.horizon},
        {"min_matched", fsm.min_matched ? json(*fsm.min_matched) : json(nullptr)}}},
      {"templates",
       {{"top_k", templates.top_k},
        {"max_phrase_length", templates.max_phrase_length},
        {"insert_determiner", templates.insert_determiner},
        {"forbidden", forbidden}}},
      {"retedit",
       {{"svd_rank", retedit.svd_rank},
        {"random_dim", retedit.random_dim},
        {"random_weight", retedit.random_weight},
        {"slot_weights", retedit.slot_weights},
        {"power_iterations", retedit.power_iterations}}},
      {"ensemble", ensemble.to_json()},
      {"grid_values", grid_values},
      {"weight_learning",
       {{"delta", weight_learning.delta}, {"max_epochs", weight_learning.max_epochs}}}};
}

std::string PipelineConfig::hash() const {
  char buf[17];
  json j = to_json();
  j["paths"].erase("work_dir");
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

json PipelineConfig::header(const std::string& command) const {
  return {{"tool", "e2s"},
          {"version", kVersion},
          {"command", command},
          {"config_hash", hash()},
          {"seeds",
           {{"split", seeds.split},
            {"index", seeds.index},
            {"decode", seeds.decode},
            {"templates", seeds.templates},
            {"fill", seeds.fill}}}};
}

fs::path PipelineConfig::events_path(const std::string& partition) const {
  return paths.work_dir / "events" / (partition + ".jsonl");
}
fs::path PipelineConfig::forward_model_path() const { return paths.work_dir / "models" / "forward.json"; }
fs::path PipelineConfig::backward_model_path() const { return paths.work_dir / "models" / "backward.json"; }
fs::path PipelineConfig::word_classes_path() const { return paths.work_dir / "models" / "word_classes.json"; }
fs::path PipelineConfig::index_path() const { return paths.work_dir / "models" / "index.json"; }
fs::path PipelineConfig::tuned_path() const { return paths.work_dir / "models" / "ensemble.json"; }

// --- stages -------------------------------------------------------------------

EventifySummary eventify_stage(const PipelineConfig& cfg) {
  require(cfg.paths.corpus, "corpus");
  require(cfg.paths.lexicon, "lexicon");
  require(cfg.paths.work_dir, "work_dir");
  const Lexicon lexicon = Lexicon::load(cfg.paths.lexicon);
  const auto stories = read_interchange(cfg.paths.corpus);
  const auto corpus = eventify_corpus(stories, lexicon, cfg.seeds.split, cfg.split);

  EventifySummary summary;
  summary.stories = stories.size();
  summary.warnings = corpus.warnings;
  const json header = cfg.header("eventify");
  const auto write = [&](const std::string& name, const std::vector<std::string>& ids) {
    const auto records = corpus.records_for(ids);
    auto out = open_out(cfg.events_path(name));
    write_events_jsonl(out, records, header);
    return records.size();
  };
  summary.train = write("train", corpus.split.train);
  summary.validation = write("validation", corpus.split.validation);
  summary.test = write("test", corpus.split.test);
  return summary;
}

void train_stage(const PipelineConfig& cfg) {
  require(cfg.paths.work_dir, "work_dir");
  const auto records = read_events_jsonl(cfg.events_path("train"));
  const auto pairs = to_pairs(records);
  if (pairs.empty()) throw EmptyCorpus("train.jsonl holds no (event, sentence) pairs");

  NGramConfig fwd = cfg.ngram;
  fwd.direction = Direction::Forward;
  NGramConfig bwd = cfg.ngram;
  bwd.direction = Direction::Backward;
  fs::create_directories(cfg.forward_model_path().parent_path());
  NGramModel::train(pairs, fwd).save(cfg.forward_model_path());
  NGramModel::train(pairs, bwd).save(cfg.backward_model_path());
  write_json_file(cfg.word_classes_path(), WordClassTable::from_records(records).to_json());
}

void build_index_stage(const PipelineConfig& cfg) {
  require(cfg.paths.work_dir, "work_dir");
  const auto pairs = to_pairs(read_events_jsonl(cfg.events_path("train")));
  if (pairs.empty()) throw EmptyCorpus("train.jsonl holds no (event, sentence) pairs");
  fs::create_directories(cfg.index_path().parent_path());
  RetrievalIndex::build(pairs, cfg.retedit).save(cfg.index_path());
}

json TunedEnsemble::to_json() const {
  return {{"format", "e2s-tuned-ensemble"},
          {"version", 1},
          {"ensemble", ensemble.to_json()},
          {"mc_weights", mc_weights},
          {"bleu4", bleu4}};
}

TunedEnsemble TunedEnsemble::from_json(const json& j) {
  try {
    if (j.value("format", "") != "e2s-tuned-ensemble" || j.value("version", 0) != 1)
      throw FormatError("not an e2s-tuned-ensemble v1 document");
    TunedEnsemble t;
    t.ensemble = EnsembleConfig::from_json(j.at("ensemble"));
    t.mc_weights = j.at("mc_weights").get<SlotWeights>();
    t.bleu4 = j.at("bleu4").get<double>();
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("tuned ensemble: ") + e.what());
  }
}

TunedEnsemble TunedEnsemble::load(const fs::path& path) {
  json j = read_json_file(path, "e2s tune");
  if (j.contains("header")) j.erase("header");
  return from_json(j);
}

TunedEnsemble tune_stage(const PipelineConfig& cfg, const std::optional<ThresholdGrid>& grid) {
  auto engine = Engine::load(cfg, false);
  const auto pairs = to_pairs(read_events_jsonl(cfg.events_path("validation")));
  if (pairs.empty()) throw EmptyCorpus("validation.jsonl holds no (event, sentence) pairs");

  const auto& members = engine->ensemble().members;
  if (std::find(members.begin(), members.end(), Member::MCBeam) != members.end()) {
    std::vector<EventTuple> events;
    for (const auto& p : pairs) events.push_back(p.event);
    const NGramModel& model = engine->forward();
    MCBeamConfig mc = cfg.mc;
    const auto decode = [&](const EventTuple& e, const SlotWeights& w) {
      MCBeamConfig c = mc;
      c.weights = w;
      c.seed = derive_seed(mc.seed, fnv1a64(e.to_string()));
      return mc_beam_decode(model, encode_event(model.vocabulary(), e), c).best.sentence;
    };
    engine->set_mc_weights(learn_playout_weights(events, decode, cfg.weight_learning).weights);
  }

  const auto gated = gated_members(engine->ensemble());
  const ThresholdGrid g = grid ? *grid : ThresholdGrid::product(gated.size(), cfg.grid_values);
  const TuneResult r = tune_thresholds(pairs, engine->members(), engine->ensemble(), g);

  TunedEnsemble tuned;
  tuned.ensemble = engine->ensemble();
  tuned.ensemble.thresholds = r.thresholds;
  tuned.mc_weights = engine->mc_weights();
  tuned.bleu4 = r.bleu4;
  json doc = tuned.to_json();
  doc["header"] = cfg.header("tune");
  write_json_file(cfg.tuned_path(), doc);
  return tuned;
}

// --- engine -------------------------------------------------------------------

std::unique_ptr<Engine> Engine::load(const PipelineConfig& cfg, bool use_tuned) {
  std::unique_ptr<Engine> e(new Engine());
  e->ensemble_ = cfg.ensemble;
  e->mc_cfg_ = cfg.mc;
  if (use_tuned && fs::exists(cfg.tuned_path())) {
    const auto tuned = TunedEnsemble::load(cfg.tuned_path());
    e->ensemble_ = tuned.ensemble;
    e->mc_cfg_.weights = tuned.mc_weights;
  }
  const auto uses = [&](Member m) {
    return std::find(e->ensemble_.members.begin(), e->ensemble_.members.end(), m) !=
           e->ensemble_.members.end();
  };

  require(cfg.paths.lexicon, "lexicon");
  e->lexicon_ = Lexicon::load(cfg.paths.lexicon);
  if (!cfg.paths.gender.empty()) {
    GenderTable genders = e->lexicon_.genders();
    genders.merge(GenderTable::from_csv(cfg.paths.gender));
    e->lexicon_.set_genders(std::move(genders));
  }

  e->forward_ = std::make_unique<NGramModel>(NGramModel::load(cfg.forward_model_path()));
  if (uses(Member::Templates)) {
    require(cfg.paths.frame_rules, "frame_rules");
    e->backward_ = std::make_unique<NGramModel>(NGramModel::load(cfg.backward_model_path()));
    auto classes = WordClassTable::from_json(read_json_file(cfg.word_classes_path(), "e2s train"));
    e->templater_ = std::make_unique<Templater>(*e->forward_, *e->backward_,
                                                FrameRules::load(cfg.paths.frame_rules),
                                                std::move(classes), &e->lexicon_);
    e->templates_ = std::make_unique<TemplateRealizer>(*e->templater_, cfg.templates);
  }
  if (uses(Member::RetEdit)) {
    e->index_ = std::make_unique<RetrievalIndex>(RetrievalIndex::load(cfg.index_path()));
    e->retedit_ = std::make_unique<RetEditRealizer>(*e->index_, e->editor_);
  }
  e->mc_ = std::make_unique<MCBeamRealizer>(*e->forward_, e->mc_cfg_);
  e->fsm_ = std::make_unique<FsmRealizer>(*e->forward_, cfg.fsm);
  e->beam_ = std::make_unique<BeamRealizer>(*e->forward_, cfg.beam);
  return e;
}

void Engine::set_ensemble(EnsembleConfig cfg) {
  cfg.validate();
  for (Member m : cfg.members)
    if ((m == Member::RetEdit && !retedit_) || (m == Member::Templates && !templates_))
      throw ConfigError("artifacts for '" + std::string(member_name(m)) + "' were not loaded");
  ensemble_ = std::move(cfg);
}

void Engine::set_mc_weights(const SlotWeights& w) {
  mc_cfg_.weights = w;
  mc_cfg_.validate();
  mc_ = std::make_unique<MCBeamRealizer>(*forward_, mc_cfg_);
}

const Realizer& Engine::member(Member m) const {
  const Realizer* r = nullptr;
  switch (m) {
    case Member::RetEdit: r = retedit_.get(); break;
    case Member::Templates: r = templates_.get(); break;
    case Member::MCBeam: r = mc_.get(); break;
    case Member::Fsm: r = fsm_.get(); break;
    case Member::Beam: r = beam_.get(); break;
  }
  if (!r) throw ConfigError("artifacts for '" + std::string(member_name(m)) + "' were not loaded");
  return *r;
}

MemberSet Engine::members() const {
  MemberSet out;
  for (Member m : ensemble_.members) out[m] = &member(m);
  return out;
}

// --- run ----------------------------------------------------------------------

std::vector<FillResult> fill_stories(const std::vector<StorySentence>& sentences,
                                     const EntityPool& pool, const Lexicon& lexicon,
                                     std::uint64_t seed) {
  struct StoryState {
    StoryMemory memory;
    Rng rng;
  };
  std::map<std::string, StoryState> stories;
  std::vector<FillResult> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto it = stories.find(s.story_id);
    if (it == stories.end())
      it = stories.emplace(s.story_id, StoryState{{}, Rng(derive_seed(seed, fnv1a64(s.story_id)))})
               .first;
    out.push_back(fill_sentence(s.sentence, it->second.memory, pool, lexicon, it->second.rng));
  }
  return out;
}

PipelineRun realize_and_fill(const Engine& engine, const PipelineConfig& cfg,
                             const std::vector<EventRecord>& events) {
  if (events.empty()) throw EmptyCorpus("no events to realize");
  require(cfg.paths.pool, "pool");
  const EntityPool pool = EntityPool::load(cfg.paths.pool);
  const MemberSet members = engine.members();

  PipelineRun run;
  run.ensemble = engine.ensemble();
  std::vector<RunLogEntry> log;
  std::vector<StorySentence> generalized;
  for (const auto& rec : events) {
    RealizedEvent r{rec.story_id, rec.index, rec.event,
                    cascade_realize(rec.event, members, engine.ensemble()), {}};
    log.push_back({r.event, r.cascade});
    generalized.push_back({r.story_id, r.cascade.sentence});
    run.events.push_back(std::move(r));
  }
  auto filled = fill_stories(generalized, pool, engine.lexicon(), cfg.seeds.fill);
  for (std::size_t i = 0; i < filled.size(); ++i) run.events[i].filled = std::move(filled[i]);
  run.utilization = utilization(log, engine.ensemble(), "pipeline");
  return run;
}

void write_realized_jsonl(std::ostream& out, const PipelineRun& run, const json& header) {
  out << json{{"header", header}}.dump() << '\n';
  for (const auto& r : run.events) {
    json j{{"story_id", r.story_id},
           {"index", r.index},
           {"event", r.event.to_json()},
           {"member_used", std::string(member_name(r.cascade.member_used))},
           {"confidence", r.cascade.confidence},
           {"sentence", r.cascade.sentence},
           {"filled", r.filled.text}};
    if (!r.filled.warnings.empty()) j["warnings"] = r.filled.warnings;
    out << j.dump() << '\n';
  }
}

void write_run_log_jsonl(std::ostream& out, const PipelineRun& run, const json& header) {
  out << json{{"header", header}}.dump() << '\n';
  for (const auto& r : run.events) out << RunLogEntry{r.event, r.cascade}.to_json().dump() << '\n';
}

PipelineRun run_pipeline(const PipelineConfig& cfg, const fs::path& events_in,
                         const fs::path& out_dir) {
  const auto engine = Engine::load(cfg);
  const auto events = read_events_jsonl(events_in);
  PipelineRun run = realize_and_fill(*engine, cfg, events);
  const json header = cfg.header("run");
  {
    auto out = open_out(out_dir / "realized.jsonl");
    write_realized_jsonl(out, run, header);
  }
  auto out = open_out(out_dir / "run_log.jsonl");
  write_run_log_jsonl(out, run, header);
  return run;
}

std::vector<TokenSeq> read_sentences_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "e2s realize or e2s eventify");
  std::vector<TokenSeq> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      if (is_header_line(j)) continue;
      out.push_back(j.at("sentence").get<TokenSeq>());
    } catch (const json::exception& e) {
      throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace e2s
