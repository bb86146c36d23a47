#include "e2s/templater.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "e2s/common.hpp"

namespace e2s {

// ---------------------------------------------------------------------------
// Word classes

std::string_view to_string(WordClass c) {
  switch (c) {
    case WordClass::Det: return "Det";
    case WordClass::Noun: return "Noun";
    case WordClass::Pronoun: return "Pronoun";
    case WordClass::Verb: return "Verb";
    case WordClass::Prep: return "Prep";
    case WordClass::Adj: return "Adj";
    case WordClass::Adv: return "Adv";
    case WordClass::Punct: return "Punct";
    case WordClass::Boundary: return "Boundary";
    case WordClass::Other: return "Other";
  }
  return "Other";
}

namespace {

WordClass word_class_from_name(std::string_view s) {
  for (auto c : {WordClass::Det, WordClass::Noun, WordClass::Pronoun, WordClass::Verb,
                 WordClass::Prep, WordClass::Adj, WordClass::Adv, WordClass::Punct,
                 WordClass::Boundary, WordClass::Other})
    if (to_string(c) == s) return c;
  throw FormatError("unknown word class '" + std::string(s) + "'");
}

const std::set<std::string, std::less<>>& determiners() {
  static const std::set<std::string, std::less<>> s = {
      "a", "an", "another", "any", "each", "every", "no", "some", "that", "the", "these", "this",
      "those"};
  return s;
}

const std::set<std::string, std::less<>>& prepositions() {
  static const std::set<std::string, std::less<>> s = {
      "about", "above", "across", "after", "against", "along", "among", "around", "at",
      "before", "behind", "below", "beneath", "beside", "between", "beyond", "by", "down",
      "during", "for", "from", "in", "inside", "into", "near", "of", "off", "on", "onto",
      "out", "outside", "over", "past", "through", "to", "toward", "towards", "under",
      "until", "up", "upon", "with", "within", "without"};
  return s;
}

const std::set<std::string, std::less<>>& pronouns() {
  static const std::set<std::string, std::less<>> s = {
      "he", "her", "hers", "herself", "him", "himself", "i", "it", "itself", "me", "she",
      "them", "themselves", "they", "us", "we", "you"};
  return s;
}

}  // namespace

WordClass word_class_from_ptb(std::string_view tag) {
  const auto starts = [&](std::string_view p) { return tag.substr(0, p.size()) == p; };
  if (tag == "DT" || tag == "PDT" || tag == "WDT" || tag == "PRP$" || tag == "WP$")
    return WordClass::Det;
  if (starts("NN")) return WordClass::Noun;
  if (tag == "PRP" || tag == "WP") return WordClass::Pronoun;
  if (starts("VB") || tag == "MD") return WordClass::Verb;
  if (tag == "IN" || tag == "TO") return WordClass::Prep;
  if (starts("JJ") || tag == "CD") return WordClass::Adj;
  if (starts("RB") || tag == "RP" || tag == "WRB") return WordClass::Adv;
  if (tag == "." || tag == "," || tag == ":" || tag == "``" || tag == "''" || tag == "-LRB-" ||
      tag == "-RRB-" || tag == "HYPH" || tag == "NFP")
    return WordClass::Punct;
  return WordClass::Other;
}

WordClassTable WordClassTable::from_records(const std::vector<EventRecord>& records) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& r : records)
    for (std::size_t i = 0; i < r.pos.size() && i < r.sentence.size(); ++i)
      ++counts[r.sentence[i]][r.pos[i]];
  WordClassTable table;
  for (const auto& [token, tags] : counts) {
    // Most frequent tag; std::map order breaks ties toward the smaller tag.
    auto best = tags.begin();
    for (auto it = tags.begin(); it != tags.end(); ++it)
      if (it->second > best->second) best = it;
    table.table_[token] = word_class_from_ptb(best->first);
  }
  return table;
}

WordClass WordClassTable::classify(std::string_view token) const {
  if (token == "<s>" || token == "<eos>") return WordClass::Boundary;
  if (token == kPronounToken) return WordClass::Pronoun;
  if (is_entity_tag(token)) return WordClass::Noun;
  if (is_synset_id(token)) {
    switch (synset_pos(token)) {
      case 'n': return WordClass::Noun;
      case 'v': return WordClass::Verb;
      case 'r': return WordClass::Adv;
      default: return WordClass::Adj;
    }
  }
  if (is_verb_class_id(token)) return WordClass::Verb;
  if (is_punctuation(token)) return WordClass::Punct;
  if (auto it = table_.find(std::string(token)); it != table_.end()) return it->second;
  const std::string lower = to_lower(token);
  if (determiners().count(lower)) return WordClass::Det;
  if (prepositions().count(lower)) return WordClass::Prep;
  if (pronouns().count(lower)) return WordClass::Pronoun;
  return WordClass::Other;
}

nlohmann::json WordClassTable::to_json() const {
  std::map<std::string, std::string> sorted;
  for (const auto& [t, c] : table_) sorted[t] = std::string(to_string(c));
  return sorted;
}

WordClassTable WordClassTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("word class table must be a JSON object");
  WordClassTable table;
  for (const auto& [t, c] : j.items()) table.table_[t] = word_class_from_name(c.get<std::string>());
  return table;
}

// ---------------------------------------------------------------------------
// Frame rules

namespace {

struct FrameShape {
  bool np_before_verb = false;
  bool np_after_verb = false;
  bool pp = false;
};

FrameShape shape_of(const FrameSpec& f) {
  FrameShape shape;
  bool verb = false;
  for (Phrase p : f.symbols()) {
    if (p == Phrase::V) verb = true;
    else if (p == Phrase::NP) (verb ? shape.np_after_verb : shape.np_before_verb) = true;
    else shape.pp = true;
  }
  return shape;
}

bool fits(const FrameSpec& f, std::string_view signature) {
  const FrameShape shape = shape_of(f);
  const auto has = [&](char slot) {
    return signature != "-" && signature.find(slot) != std::string_view::npos;
  };
  if (has('s') && !shape.np_before_verb) return false;
  if (has('o') && !shape.np_after_verb) return false;
  if ((has('p') || has('m')) && !shape.pp) return false;
  return true;
}

}  // namespace

std::string FrameRules::signature(const EventTuple& event) {
  std::string sig;
  for (Slot s : {Slot::Subject, Slot::Object, Slot::Preposition, Slot::Modifier}) {
    if (!event.has(s)) continue;
    if (!sig.empty()) sig += '+';
    sig += slot_name(s);
  }
  return sig.empty() ? "-" : sig;
}

FrameRules FrameRules::from_json(const nlohmann::json& j) {
  FrameRules rules;
  try {
    if (j.at("format") != "e2s-frame-rules") throw FormatError("not an e2s frame rule file");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported frame rule version");
    if (j.contains("fallback")) rules.fallback_ = FrameSpec::from_json(j.at("fallback"));
    std::set<std::string> seen;
    for (const auto& r : j.at("rules")) {
      const auto sig = r.at("slots").get<std::string>();
      if (!seen.insert(sig).second) throw FormatError("duplicate frame rule for '" + sig + "'");
      std::vector<FrameSpec> frames;
      for (const auto& f : r.at("frames")) {
        frames.push_back(FrameSpec::from_json(f));
        if (!fits(frames.back(), sig))
          throw FormatError("frame " + frames.back().to_string() + " has no place for the slots '" +
                            sig + "'");
      }
      if (frames.empty()) throw FormatError("frame rule '" + sig + "' lists no frames");
      rules.rules_.emplace_back(sig, std::move(frames));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed frame rules: ") + e.what());
  }
  return rules;
}

FrameRules FrameRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "the frame rule file shipped in core/data");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

nlohmann::json FrameRules::to_json() const {
  nlohmann::json j{{"format", "e2s-frame-rules"}, {"version", 1}, {"fallback", fallback_.to_json()}};
  j["rules"] = nlohmann::json::array();
  for (const auto& [sig, frames] : rules_) {
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& f : frames) fs.push_back(f.to_json());
    j["rules"].push_back({{"slots", sig}, {"frames", fs}});
  }
  return j;
}

const std::vector<FrameSpec>* FrameRules::candidates(const std::string& signature) const {
  for (const auto& [sig, frames] : rules_)
    if (sig == signature) return &frames;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Templater

void TemplateConfig::validate() const {
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  if (max_phrase_length < 0) throw ConfigError("max_phrase_length must be non-negative");
}

double template_confidence(const std::vector<double>& losses_bits, std::size_t vocab_size) {
  if (losses_bits.empty()) throw Error("InvalidArgument", "template confidence needs a loss");
  if (vocab_size < 2) throw Error("InvalidArgument", "template confidence needs |V| >= 2");
  double sum = 0.0;
  for (double l : losses_bits) sum += l;
  const double mean = sum / static_cast<double>(losses_bits.size());
  return 1.0 - std::min(1.0, mean / std::log2(static_cast<double>(vocab_size)));
}

Templater::Templater(const SequenceModel& forward, const SequenceModel& backward, FrameRules rules,
                     WordClassTable classes, const Lexicon* lexicon)
    : forward_(forward), backward_(backward), rules_(std::move(rules)),
      classes_(std::move(classes)), lexicon_(lexicon) {
  if (forward_.vocabulary().tokens() != backward_.vocabulary().tokens())
    throw ConfigError("forward and backward template models must share a vocabulary");
}

FrameSpec Templater::predict_frame(const EventTuple& event) const {
  const auto* cands = rules_.candidates(FrameRules::signature(event));
  if (!cands) return rules_.fallback();
  if (lexicon_) {
    const auto& allowed = lexicon_->frames(event.verb().surface);
    for (const auto& f : *cands)
      if (std::find(allowed.begin(), allowed.end(), f) != allowed.end()) return f;
  }
  return cands->front();
}

TemplateResult Templater::realize(const EventTuple& event, const TemplateConfig& cfg) const {
  return realize(event, predict_frame(event), cfg);
}

namespace {

struct Item {
  std::string token;
  WordClass cls;
  bool fill_before = false;  // noun phrase blank in front of the token
  bool fill_after = false;   // verb phrase blank behind the token
  bool common_noun = false;
};

/// Makes room for every filled slot: an NP before V for s, an NP after V for o
/// and a PP for p/m.
FrameSpec complete_frame(const FrameSpec& frame, const EventTuple& event) {
  std::vector<Phrase> sym = frame.symbols();
  const auto verb_at = [&] {
    return static_cast<std::size_t>(std::find(sym.begin(), sym.end(), Phrase::V) - sym.begin());
  };
  const FrameShape shape = shape_of(frame);
  if (event.has(Slot::Subject) && !shape.np_before_verb) sym.insert(sym.begin(), Phrase::NP);
  if (event.has(Slot::Object) && !shape.np_after_verb)
    sym.insert(sym.begin() + static_cast<std::ptrdiff_t>(verb_at() + 1), Phrase::NP);
  if ((event.has(Slot::Preposition) || event.has(Slot::Modifier)) && !shape.pp)
    sym.push_back(Phrase::PP);
  return FrameSpec(std::move(sym));
}

}  // namespace

TemplateResult Templater::realize(const EventTuple& event, const FrameSpec& requested,
                                  const TemplateConfig& cfg) const {
  cfg.validate();
  const FrameSpec frame = complete_frame(requested, event);
  const Vocabulary& vocab = forward_.vocabulary();
  const EncodedEvent no_event;  // blanks are never biased toward event tokens
  Rng rng(derive_seed(cfg.seed, fnv1a64(event.to_string())));

  const auto forbidden = [&](WordClass a, WordClass b) {
    return std::find(cfg.forbidden.begin(), cfg.forbidden.end(), ClassBigram{a, b}) !=
           cfg.forbidden.end();
  };
  const auto cls = [&](std::string_view t) { return classes_.classify(t); };

  // Samples among the top_k admissible ids; nullopt when nothing is admissible.
  const auto sample_top_k = [&](const std::vector<double>& dist, const auto& admit) {
    std::vector<TokenId> ids;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const auto id = static_cast<TokenId>(i);
      if (dist[i] > 0.0 && id != Vocabulary::kBegin && id != Vocabulary::kUnk && admit(id))
        ids.push_back(id);
    }
    if (ids.empty()) return std::optional<TokenId>{};
    const std::size_t keep = std::min(static_cast<std::size_t>(cfg.top_k), ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                      [&](TokenId a, TokenId b) {
                        if (dist[a] != dist[b]) return dist[a] > dist[b];
                        return a < b;
                      });
    ids.resize(keep);
    std::vector<double> w;
    for (TokenId id : ids) w.push_back(dist[static_cast<std::size_t>(id)]);
    return std::optional<TokenId>{ids[rng.sample(w)]};
  };

  const auto left_ids = [&](const std::vector<Item>& items) {
    std::vector<TokenId> ids;
    for (const auto& it : items) ids.push_back(vocab.id(it.token));
    return ids;
  };
  const auto draw_of_class = [&](const std::vector<Item>& left, WordClass want,
                                 const std::string& fallback) {
    const auto dist = forward_.next_distribution(no_event, left_ids(left));
    const auto id = sample_top_k(dist, [&](TokenId t) { return cls(vocab.token(t)) == want; });
    return id ? vocab.token(*id) : fallback;
  };
  const auto slot_item = [&](Slot s) {
    const std::string& t = event.slot(s)->surface;
    Item it{t, cls(t)};
    if (s == Slot::Verb) it.cls = WordClass::Verb;
    if (s == Slot::Preposition) it.cls = WordClass::Prep;
    it.common_noun = is_synset_id(t) && synset_pos(t) == 'n';
    return it;
  };

  // 1. Skeleton: anchors in frame order.
  std::vector<Item> items;
  bool verb_seen = false, object_used = false;
  for (Phrase p : frame.symbols()) {
    if (p == Phrase::V) {
      Item v = slot_item(Slot::Verb);
      v.fill_after = true;
      items.push_back(std::move(v));
      verb_seen = true;
    } else if (p == Phrase::NP) {
      Item head;
      if (!verb_seen && event.has(Slot::Subject)) {
        head = slot_item(Slot::Subject);
      } else if (verb_seen && !object_used && event.has(Slot::Object)) {
        head = slot_item(Slot::Object);
        object_used = true;
      } else {
        const std::string n = draw_of_class(items, WordClass::Noun, "entity.n.01");
        head = Item{n, WordClass::Noun, false, false, is_synset_id(n)};
      }
      head.fill_before = true;
      items.push_back(std::move(head));
    } else {  // PP
      const bool has_m = event.has(Slot::Modifier);
      Item m = has_m ? slot_item(Slot::Modifier) : Item{};
      const bool nominal = !has_m || m.cls == WordClass::Noun || m.cls == WordClass::Pronoun;
      if (event.has(Slot::Preposition)) items.push_back(slot_item(Slot::Preposition));
      else if (nominal) items.push_back(Item{draw_of_class(items, WordClass::Prep, "of"),
                                             WordClass::Prep});
      if (!has_m) {
        const std::string n = draw_of_class(items, WordClass::Noun, "entity.n.01");
        m = Item{n, WordClass::Noun, false, false, is_synset_id(n)};
      }
      m.fill_before = nominal;
      items.push_back(std::move(m));
    }
  }
  items.push_back(Item{".", WordClass::Punct});

  // 2. Blanks, left to right.
  const std::set<WordClass> np_stop = {WordClass::Verb, WordClass::Prep, WordClass::Punct,
                                       WordClass::Boundary, WordClass::Pronoun, WordClass::Noun};
  std::set<WordClass> vp_stop = np_stop;
  vp_stop.insert({WordClass::Det, WordClass::Adj});
  const auto max_len = static_cast<std::size_t>(cfg.max_phrase_length);

  std::vector<std::string> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& item = items[i];
    if (item.fill_before) {
      std::vector<TokenId> prefix;  // right context, read right to left
      for (std::size_t k = items.size(); k-- > i;) prefix.push_back(vocab.id(items[k].token));
      std::vector<std::string> blank;
      WordClass right = item.cls;
      while (blank.size() < max_len) {
        const auto dist = backward_.next_distribution(no_event, prefix);
        const auto id = sample_top_k(dist, [&](TokenId t) {
          return !forbidden(cls(vocab.token(t)), right);
        });
        if (!id) break;
        const std::string& tok = vocab.token(*id);
        const WordClass c = cls(tok);
        if (np_stop.count(c)) break;
        blank.insert(blank.begin(), tok);
        prefix.push_back(*id);
        right = c;
      }
      const WordClass left = out.empty() ? WordClass::Boundary : cls(out.back());
      while (!blank.empty() && forbidden(left, cls(blank.front()))) blank.erase(blank.begin());
      if (cfg.insert_determiner && item.common_noun &&
          std::none_of(blank.begin(), blank.end(),
                       [&](const std::string& t) { return cls(t) == WordClass::Det; }) &&
          !forbidden(left, WordClass::Det) &&
          !forbidden(WordClass::Det, blank.empty() ? item.cls : cls(blank.front())))
        blank.insert(blank.begin(), "the");
      out.insert(out.end(), blank.begin(), blank.end());
    }
    out.push_back(item.token);
    if (item.fill_after) {
      std::vector<TokenId> prefix = vocab.encode(out);
      WordClass left = item.cls;
      std::size_t added = 0;
      while (added < max_len) {
        const auto dist = forward_.next_distribution(no_event, prefix);
        const auto id = sample_top_k(dist, [&](TokenId t) {
          return !forbidden(left, cls(vocab.token(t)));
        });
        if (!id) break;
        const std::string& tok = vocab.token(*id);
        const WordClass c = cls(tok);
        if (vp_stop.count(c)) break;
        out.push_back(tok);
        prefix.push_back(*id);
        left = c;
        ++added;
      }
      // The next phrase must not clash with what was just added.
      if (i + 1 < items.size())
        while (added > 0 && forbidden(cls(out.back()), items[i + 1].cls)) {
          out.pop_back();
          --added;
        }
    }
  }

  // 3. Confidence from the forward model's loss over the whole sentence.
  std::vector<double> losses;
  std::vector<TokenId> prefix;
  const auto ids = vocab.encode(out);
  for (std::size_t k = 0; k <= ids.size(); ++k) {
    const TokenId next = k < ids.size() ? ids[k] : Vocabulary::kEos;
    const auto dist = forward_.next_distribution(no_event, prefix);
    losses.push_back(-std::log2(std::max(dist[static_cast<std::size_t>(next)], 1e-300)));
    if (k < ids.size()) prefix.push_back(next);
  }
  return TemplateResult{std::move(out), frame, template_confidence(losses, vocab.size())};
}

}  // namespace e2s
