// e2s: event-to-sentence pipeline driver.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "e2s/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUserError = 1, kInternalError = 2 };

class UsageError : public e2s::Error {
 public:
  explicit UsageError(const std::string& m) : e2s::Error("UsageError", m) {}
};

void report_error(const std::string& kind, const std::string& message, const json& extra = {}) {
  json rec{{"error", {{"kind", kind}, {"message", message}}}};
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) rec["error"][k] = v;
  std::cerr << rec.dump() << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw e2s::Error("IOError", "cannot write " + path.string());
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw e2s::FormatError(path.string() + ": " + e.what());
  }
}

// Options shared by several subcommands, applied on top of --config.
struct Overrides {
  std::string config;
  std::string lexicon, corpus, work_dir, pool, gender, frame_rules;
  std::optional<std::uint64_t> split_seed, index_seed, decode_seed, template_seed, fill_seed;
  std::optional<int> order, width, playouts, horizon, top_k, max_length;
  std::optional<double> copy_bias, alpha;
  std::string ensemble_config;

  e2s::PipelineConfig resolve() const {
    e2s::PipelineConfig cfg =
        config.empty() ? e2s::PipelineConfig{} : e2s::PipelineConfig::load(config);
    const auto set_path = [](fs::path& p, const std::string& v) {
      if (!v.empty()) p = v;
    };
    set_path(cfg.paths.lexicon, lexicon);
    set_path(cfg.paths.corpus, corpus);
    set_path(cfg.paths.work_dir, work_dir);
    set_path(cfg.paths.pool, pool);
    set_path(cfg.paths.gender, gender);
    set_path(cfg.paths.frame_rules, frame_rules);
    if (split_seed) cfg.seeds.split = *split_seed;
    if (index_seed) cfg.seeds.index = *index_seed;
    if (decode_seed) cfg.seeds.decode = *decode_seed;
    if (template_seed) cfg.seeds.templates = *template_seed;
    if (fill_seed) cfg.seeds.fill = *fill_seed;
    if (order) cfg.ngram.order = *order;
    if (copy_bias) cfg.ngram.copy_bias = *copy_bias;
    if (width) {
      cfg.beam.width = *width;
      cfg.mc.beam_width = *width;
      cfg.fsm.beam_size = *width;
      cfg.fsm.per_state = *width;
    }
    if (playouts) cfg.mc.playouts = *playouts;
    if (alpha) cfg.mc.alpha = *alpha;
    if (horizon) cfg.fsm.horizon = *horizon;
    if (max_length) {
      cfg.beam.max_length = *max_length;
      cfg.mc.max_length = *max_length;
    }
    if (top_k) cfg.templates.top_k = *top_k;
    if (!ensemble_config.empty()) {
      json j = read_json(ensemble_config);
      cfg.ensemble = e2s::EnsembleConfig::from_json(j.contains("ensemble") ? j.at("ensemble") : j);
    }
    cfg.sync_seeds();
    cfg.validate();
    return cfg;
  }
};

void add_config(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "pipeline config JSON");
  app->add_option("--lexicon", o.lexicon, "lexicon snapshot JSON");
  app->add_option("--work-dir", o.work_dir, "directory for events, models and outputs");
}

// --- realize ------------------------------------------------------------------

json realized_record(const e2s::EventRecord& rec, const std::optional<e2s::GeneralizedSentence>& s,
                     double confidence, const std::string& member) {
  json j{{"story_id", rec.story_id},
         {"index", rec.index},
         {"event", rec.event.to_json()},
         {"member_used", member},
         {"confidence", confidence},
         {"sentence", s ? *s : e2s::GeneralizedSentence{}}};
  if (!s) j["failure"] = true;
  return j;
}

int cmd_realize(const Overrides& o, const std::string& decoder, const std::string& events_in,
                const std::string& out_path, const std::string& trace_path,
                const std::string& run_log_path) {
  e2s::PipelineConfig cfg = o.resolve();
  const fs::path in = events_in.empty() ? cfg.events_path("test") : fs::path(events_in);
  const auto events = e2s::read_events_jsonl(in);

  std::optional<e2s::Member> single;
  if (decoder != "ensemble") {
    const std::string name = decoder == "template" ? "templates" : decoder;
    single = e2s::member_from_name(name);
    e2s::EnsembleConfig solo;
    solo.members = {*single};
    if (*single != e2s::Member::Beam) solo.members.push_back(e2s::Member::Beam);
    solo.thresholds.clear();
    if (e2s::has_threshold(*single)) solo.thresholds[*single] = 0.0;
    cfg.ensemble = solo;
  }
  const bool tuned = !single && o.ensemble_config.empty();
  auto engine = e2s::Engine::load(cfg, tuned);
  if (single && *single == e2s::Member::MCBeam && fs::exists(cfg.tuned_path()))
    engine->set_mc_weights(e2s::TunedEnsemble::load(cfg.tuned_path()).mc_weights);

  const json header = cfg.header("realize");
  std::ofstream trace;
  if (!trace_path.empty()) {
    if (!single || *single != e2s::Member::MCBeam)
      throw UsageError("--trace is only available with --decoder mc");
    trace = open_out(trace_path);
    trace << json{{"header", header}}.dump() << '\n';
  }
  auto out = open_out(out_path);
  out << json{{"header", header}}.dump() << '\n';

  std::vector<e2s::RunLogEntry> log;
  const auto members = engine->members();
  for (const auto& rec : events) {
    if (!single) {
      auto r = e2s::cascade_realize(rec.event, members, engine->ensemble());
      out << realized_record(rec, r.sentence, r.confidence, std::string(e2s::member_name(r.member_used)))
                 .dump()
          << '\n';
      log.push_back({rec.event, std::move(r)});
    } else if (trace.is_open()) {
      e2s::MCBeamConfig mc = cfg.mc;
      mc.weights = engine->mc_weights();
      mc.seed = e2s::derive_seed(mc.seed, e2s::fnv1a64(rec.event.to_string()));
      const auto& model = engine->forward();
      const auto r = e2s::mc_beam_decode(model, e2s::encode_event(model.vocabulary(), rec.event), mc);
      json steps = json::array();
      for (const auto& t : r.trace) {
        json words = json::array();
        for (auto id : t.tokens) words.push_back(model.vocabulary().token(id));
        steps.push_back({{"step", t.step},
                         {"tokens", t.tokens},
                         {"words", words},
                         {"parent_score", t.parent_score},
                         {"playouts", t.playouts},
                         {"score", t.score},
                         {"finished", t.finished}});
      }
      trace << json{{"event", rec.event.to_json()}, {"alpha", mc.alpha}, {"steps", steps}}.dump()
            << '\n';
      std::optional<e2s::GeneralizedSentence> s;
      if (!r.best.ids.empty()) s = r.best.sentence;
      out << realized_record(rec, s, r.best.confidence, "mc").dump() << '\n';
    } else {
      const auto r = engine->member(*single).realize(rec.event);
      out << realized_record(rec, r.sentence, r.confidence, std::string(e2s::member_name(*single)))
                 .dump()
          << '\n';
    }
  }
  if (!run_log_path.empty()) {
    if (single) throw UsageError("--run-log needs the ensemble decoder");
    auto rl = open_out(run_log_path);
    rl << json{{"header", header}}.dump() << '\n';
    for (const auto& e : log) rl << e.to_json().dump() << '\n';
  }
  std::cout << "realized " << events.size() << " events -> " << out_path << '\n';
  return kOk;
}

// --- fill ---------------------------------------------------------------------

int cmd_fill(const Overrides& o, const std::string& in_path, const std::string& out_path) {
  const e2s::PipelineConfig cfg = o.resolve();
  if (cfg.paths.pool.empty()) throw UsageError("fill needs --pool or paths.pool");
  if (cfg.paths.lexicon.empty()) throw UsageError("fill needs --lexicon or paths.lexicon");
  e2s::Lexicon lexicon = e2s::Lexicon::load(cfg.paths.lexicon);
  if (!cfg.paths.gender.empty()) {
    e2s::GenderTable g = lexicon.genders();
    g.merge(e2s::GenderTable::from_csv(cfg.paths.gender));
    lexicon.set_genders(std::move(g));
  }
  const auto pool = e2s::EntityPool::load(cfg.paths.pool);

  std::ifstream in(in_path);
  if (!in) throw e2s::MissingArtifact(in_path, "e2s realize");
  std::vector<json> records;
  std::vector<e2s::StorySentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      if (e2s::is_header_line(j)) continue;
      sentences.push_back({j.value("story_id", std::string()),
                           j.at("sentence").get<e2s::GeneralizedSentence>()});
      records.push_back(std::move(j));
    } catch (const json::exception& e) {
      throw e2s::FormatError(in_path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto filled = e2s::fill_stories(sentences, pool, lexicon, cfg.seeds.fill);
  auto out = open_out(out_path);
  out << json{{"header", cfg.header("fill")}}.dump() << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i]["filled"] = filled[i].text;
    for (const auto& w : filled[i].warnings) std::cerr << "warning: " << w << '\n';
    out << records[i].dump() << '\n';
  }
  std::cout << "filled " << records.size() << " sentences -> " << out_path << '\n';
  return kOk;
}

// --- evaluate -------------------------------------------------------------------

int cmd_evaluate(const std::vector<std::string>& preds, const std::string& gold_path,
                 const std::vector<std::string>& names, bool csv) {
  const auto gold = e2s::read_sentences_jsonl(gold_path);
  std::vector<e2s::MetricReport> rows;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto pred = e2s::read_sentences_jsonl(preds[i]);
    if (pred.size() != gold.size())
      throw UsageError(preds[i] + " has " + std::to_string(pred.size()) + " sentences, gold has " +
                       std::to_string(gold.size()));
    const std::string name = i < names.size() ? names[i] : fs::path(preds[i]).stem().string();
    rows.push_back(e2s::evaluate(name, pred, gold));
  }
  std::cout << (csv ? e2s::format_metric_csv(rows) : e2s::format_metric_table(rows));
  return kOk;
}

// --- report-utilization -----------------------------------------------------------

int cmd_report(const std::string& rows_file, const std::string& ensemble_config,
               const std::string& test_log, const std::string& pipeline_log) {
  std::vector<e2s::UtilizationRow> rows;
  const auto load_report = [](const std::string& path, const e2s::EnsembleConfig& ens,
                              const std::string& source) -> std::optional<e2s::UtilizationReport> {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path);
    if (!in) throw e2s::MissingArtifact(path, "e2s realize --run-log or e2s run");
    return e2s::utilization_from_jsonl(in, ens, source);
  };
  if (!rows_file.empty()) {
    const json j = read_json(rows_file);
    const fs::path base = fs::path(rows_file).parent_path();
    const auto rel = [&](const json& r, const char* key) -> std::string {
      if (!r.contains(key)) return {};
      fs::path p = r.at(key).get<std::string>();
      return (p.is_relative() ? base / p : p).string();
    };
    try {
      for (const auto& r : j.at("rows")) {
        const auto ens = e2s::EnsembleConfig::from_json(r.at("ensemble"));
        rows.push_back({ens, load_report(rel(r, "test"), ens, "test"),
                        load_report(rel(r, "pipeline"), ens, "pipeline")});
      }
    } catch (const json::exception& e) {
      throw e2s::FormatError(rows_file + ": " + e.what());
    }
  } else {
    e2s::EnsembleConfig ens;
    if (!ensemble_config.empty()) {
      const json j = read_json(ensemble_config);
      ens = e2s::EnsembleConfig::from_json(j.contains("ensemble") ? j.at("ensemble") : j);
    }
    if (test_log.empty() && pipeline_log.empty())
      throw UsageError("give --rows, or --test and/or --pipeline run logs");
    rows.push_back({ens, load_report(test_log, ens, "test"), load_report(pipeline_log, ens, "pipeline")});
  }
  std::cout << e2s::format_utilization_table(rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"e2s: realize abstract events as sentences"};
  app.require_subcommand(1);
  app.set_version_flag("--version", e2s::kVersion);
  Overrides o;

  auto* eventify = app.add_subcommand("eventify", "interchange JSONL -> event JSONL split 8:1:1");
  add_config(eventify, o);
  eventify->add_option("--in", o.corpus, "interchange JSONL from the preprocess adapter");
  eventify->add_option("--seed", o.split_seed, "split seed");

  auto* train = app.add_subcommand("train", "train forward and backward n-gram models");
  add_config(train, o);
  train->add_option("--order", o.order, "n-gram order");
  train->add_option("--copy-bias", o.copy_bias, "weight of the event copy distribution");

  auto* index = app.add_subcommand("build-index", "build the retrieve-and-edit index");
  add_config(index, o);
  index->add_option("--seed", o.index_seed, "index seed");

  auto* tune = app.add_subcommand("tune", "learn playout weights and grid-search thresholds");
  add_config(tune, o);
  std::string grid_file;
  tune->add_option("--grid-file", grid_file, R"(JSON {"values": [...]} or {"tuples": [[...]]})");
  tune->add_option("--ensemble-config", o.ensemble_config, "ensemble members to tune");
  tune->add_option("--seed", o.decode_seed, "decoder seed");

  auto* realize = app.add_subcommand("realize", "realize events as generalized sentences");
  add_config(realize, o);
  std::string decoder = "ensemble", events_in, out_path, trace_path, run_log_path;
  realize->add_option("--decoder", decoder, "ensemble, retedit, template, mc, fsm or beam")
      ->check(CLI::IsMember({"ensemble", "retedit", "template", "templates", "mc", "fsm", "beam"}));
  realize->add_option("--events", events_in, "event JSONL (default: events/test.jsonl)");
  realize->add_option("--out", out_path, "output JSONL")->required();
  realize->add_option("--ensemble-config", o.ensemble_config, "ensemble JSON (overrides the tuned one)");
  realize->add_option("--width", o.width, "beam width");
  realize->add_option("--alpha", o.alpha, "Monte Carlo score smoothing");
  realize->add_option("--playouts", o.playouts, "playouts per node");
  realize->add_option("--horizon", o.horizon, "FSM horizon");
  realize->add_option("--max-length", o.max_length, "beam and Monte Carlo length cap");
  realize->add_option("--top-k", o.top_k, "template sampling breadth");
  realize->add_option("--seed", o.decode_seed, "decoder seed");
  realize->add_option("--template-seed", o.template_seed, "template seed");
  realize->add_option("--trace", trace_path, "per-step Monte Carlo trace JSONL");
  realize->add_option("--run-log", run_log_path, "cascade run log JSONL");
  realize->add_option("--frame-rules", o.frame_rules, "frame rules JSON");

  auto* fill = app.add_subcommand("fill", "slot-fill generalized sentences");
  add_config(fill, o);
  std::string fill_in, fill_out;
  fill->add_option("--in", fill_in, "JSONL with story_id and sentence")->required();
  fill->add_option("--out", fill_out, "output JSONL")->required();
  fill->add_option("--pool", o.pool, "entity pool JSON");
  fill->add_option("--gender", o.gender, "gender CSV name,gender,count");
  fill->add_option("--seed", o.fill_seed, "fill seed");

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold sentences");
  std::vector<std::string> preds, names;
  std::string gold;
  bool csv = false;
  evaluate->add_option("--pred", preds, "prediction JSONL (repeatable)")->required();
  evaluate->add_option("--gold", gold, "gold JSONL")->required();
  evaluate->add_option("--name", names, "row name per --pred");
  evaluate->add_flag("--csv", csv, "CSV instead of a text table");

  auto* report = app.add_subcommand("report-utilization", "member utilization table");
  std::string rows_file, test_log, pipeline_log, report_ensemble;
  report->add_option("--rows", rows_file, R"(JSON {"rows": [{"ensemble", "test", "pipeline"}]})");
  report->add_option("--ensemble-config", report_ensemble, "ensemble JSON for a single row");
  report->add_option("--test", test_log, "run log of a test-set realization");
  report->add_option("--pipeline", pipeline_log, "run log of a pipeline run");

  auto* run = app.add_subcommand("run", "realize, fill and log a file of events");
  add_config(run, o);
  std::string run_events, run_out;
  run->add_option("--events", run_events, "event JSONL (default: test partition)");
  run->add_option("--out-dir", run_out, "output directory")->required();
  run->add_option("--pool", o.pool, "entity pool JSON");
  run->add_option("--seed", o.fill_seed, "fill seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    return kUserError;
  }

  try {
    if (eventify->parsed()) {
      const auto cfg = o.resolve();
      const auto s = e2s::eventify_stage(cfg);
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "stories " << s.stories << ", events train " << s.train << " validation "
                << s.validation << " test " << s.test << '\n';
    } else if (train->parsed()) {
      const auto cfg = o.resolve();
      e2s::train_stage(cfg);
      std::cout << "models -> " << cfg.forward_model_path().parent_path().string() << '\n';
    } else if (index->parsed()) {
      const auto cfg = o.resolve();
      e2s::build_index_stage(cfg);
      std::cout << "index -> " << cfg.index_path().string() << '\n';
    } else if (tune->parsed()) {
      const auto cfg = o.resolve();
      std::optional<e2s::ThresholdGrid> grid;
      if (!grid_file.empty())
        grid = e2s::ThresholdGrid::from_json(read_json(grid_file),
                                             e2s::gated_members(cfg.ensemble).size());
      const auto t = e2s::tune_stage(cfg, grid);
      std::cout << t.to_json().dump(1) << '\n';
    } else if (realize->parsed()) {
      return cmd_realize(o, decoder, events_in, out_path, trace_path, run_log_path);
    } else if (fill->parsed()) {
      return cmd_fill(o, fill_in, fill_out);
    } else if (evaluate->parsed()) {
      return cmd_evaluate(preds, gold, names, csv);
    } else if (report->parsed()) {
      return cmd_report(rows_file, report_ensemble, test_log, pipeline_log);
    } else if (run->parsed()) {
      const auto cfg = o.resolve();
      const auto r = e2s::run_pipeline(
          cfg, run_events.empty() ? cfg.events_path("test") : fs::path(run_events), run_out);
      std::size_t empty = 0;
      for (const auto& e : r.events) empty += e.filled.text.empty();
      std::cout << "realized " << r.events.size() << " events (" << empty << " empty) -> " << run_out
                << '\n'
                << e2s::format_utilization_table({{r.ensemble, {}, r.utilization}});
    }
  } catch (const e2s::MissingArtifact& e) {
    report_error(e.kind(), e.what(), {{"path", e.path()}, {"producer", e.producer()}});
    return kUserError;
  } catch (const e2s::Error& e) {
    report_error(e.kind(), e.what());
    return kUserError;
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return kInternalError;
  }
  return kOk;
}
