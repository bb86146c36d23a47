#include "e2s/eventify.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace e2s {

namespace {

bool is_verb_tag(std::string_view pos) { return pos.size() >= 2 && pos.substr(0, 2) == "VB"; }
bool is_noun_tag(std::string_view pos) { return pos.size() >= 2 && pos.substr(0, 2) == "NN"; }

bool is_sentence_final(std::string_view surface) {
  return surface == "." || surface == "!" || surface == "?";
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

Span span_from_json(const nlohmann::json& j) {
  if (j.is_array() && j.size() == 3)
    return Span{j[0].get<int>(), j[1].get<int>(), j[2].get<std::string>()};
  if (j.is_object())
    return Span{get_field<int>(j, "start"), get_field<int>(j, "end"),
                j.contains("label") ? j.at("label").get<std::string>()
                                    : get_field<std::string>(j, "category")};
  throw FormatError("span must be [start, end, label]: " + j.dump());
}

}  // namespace

// ---------------------------------------------------------------------------
// ParsedSentence / Story

void ParsedSentence::validate() const {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) throw FormatError("sentence has no tokens");
  for (const auto& e : dep_edges) {
    if (e.child < 0 || e.child >= n || e.head < -1 || e.head >= n)
      throw FormatError("dependency edge (" + std::to_string(e.head) + ", " +
                        std::to_string(e.child) + ") outside " + std::to_string(n) + " tokens");
  }
  for (const auto* spans : {&ner_spans, &constituents})
    for (const auto& s : *spans)
      if (s.start < 0 || s.end > n || s.start >= s.end)
        throw FormatError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                          ") outside " + std::to_string(n) + " tokens");
}

std::string ParsedSentence::text() const {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(t.surface);
  return render_tokens(words);
}

std::optional<DepEdge> ParsedSentence::head_edge(int i) const {
  for (const auto& e : dep_edges)
    if (e.child == i) return e;
  return std::nullopt;
}

std::vector<int> ParsedSentence::children(int head, std::string_view relation) const {
  std::vector<int> out;
  for (const auto& e : dep_edges)
    if (e.head == head && (relation.empty() || e.relation == relation)) out.push_back(e.child);
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json ParsedSentence::to_json() const {
  nlohmann::json j;
  j["tokens"] = nlohmann::json::array();
  for (const auto& t : tokens) j["tokens"].push_back({t.surface, t.lemma, t.pos});
  j["dep_edges"] = nlohmann::json::array();
  for (const auto& e : dep_edges) j["dep_edges"].push_back({e.head, e.child, e.relation});
  j["ner_spans"] = nlohmann::json::array();
  for (const auto& s : ner_spans) j["ner_spans"].push_back({s.start, s.end, s.label});
  j["constituency"] = nlohmann::json::array();
  for (const auto& s : constituents) j["constituency"].push_back({s.start, s.end, s.label});
  return j;
}

ParsedSentence ParsedSentence::from_json(const nlohmann::json& j) {
  ParsedSentence s;
  try {
    for (const auto& t : j.at("tokens")) {
      if (t.is_array() && t.size() == 3)
        s.tokens.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                            t[2].get<std::string>()});
      else if (t.is_object())
        s.tokens.push_back({get_field<std::string>(t, "surface"),
                            get_field<std::string>(t, "lemma"), get_field<std::string>(t, "pos")});
      else
        throw FormatError("token must be [surface, lemma, pos]: " + t.dump());
    }
    if (j.contains("dep_edges"))
      for (const auto& e : j.at("dep_edges")) {
        if (e.is_array() && e.size() == 3)
          s.dep_edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<std::string>()});
        else if (e.is_object())
          s.dep_edges.push_back({get_field<int>(e, "head"), get_field<int>(e, "child"),
                                 get_field<std::string>(e, "relation")});
        else
          throw FormatError("dependency edge must be [head, child, relation]: " + e.dump());
      }
    if (j.contains("ner_spans"))
      for (const auto& sp : j.at("ner_spans")) s.ner_spans.push_back(span_from_json(sp));
    if (j.contains("constituency") && !j.at("constituency").is_null())
      for (const auto& sp : j.at("constituency")) s.constituents.push_back(span_from_json(sp));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed sentence: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json Story::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  if (!title.empty()) j["title"] = title;
  if (!source.empty()) j["source"] = source;
  j["sentences"] = nlohmann::json::array();
  for (const auto& s : sentences) j["sentences"].push_back(s.to_json());
  return j;
}

Story Story::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("story record must be a JSON object");
  Story story;
  try {
    story.id = get_field<std::string>(j, "id");
    if (j.contains("title")) story.title = j.at("title").get<std::string>();
    if (j.contains("source")) story.source = j.at("source").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed story: ") + e.what());
  }
  if (!j.contains("sentences") || !j.at("sentences").is_array())
    throw FormatError("story '" + story.id + "' has no sentences array");
  for (const auto& s : j.at("sentences")) story.sentences.push_back(ParsedSentence::from_json(s));
  if (story.sentences.empty()) throw FormatError("story '" + story.id + "' has no sentences");
  return story;
}

std::vector<Story> read_interchange(std::istream& in) {
  std::vector<Story> stories;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (is_header_line(j)) continue;
      stories.push_back(Story::from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("interchange line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("interchange line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return stories;
}

std::vector<Story> read_interchange(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "the preprocess adapter (preprocess --out)");
  return read_interchange(in);
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

using Piece = std::vector<int>;  // sorted token indices

bool has_verb(const ParsedSentence& s, const Piece& piece) {
  return std::any_of(piece.begin(), piece.end(),
                     [&](int i) { return is_verb_tag(s.tokens[i].pos); });
}

bool covers(const Piece& piece, int start, int end) {
  for (int i = start; i < end; ++i)
    if (!std::binary_search(piece.begin(), piece.end(), i)) return false;
  return true;
}

std::vector<Piece> split_piece(const ParsedSentence& s, const Piece& piece);

std::optional<std::pair<Piece, Piece>> split_on_sbar(const ParsedSentence& s,
                                                      const Piece& piece) {
  std::vector<const Span*> sbars;
  for (const auto& c : s.constituents)
    if (c.label == "SBAR" && covers(piece, c.start, c.end)) sbars.push_back(&c);
  // Outermost first, then leftmost.
  std::sort(sbars.begin(), sbars.end(), [](const Span* a, const Span* b) {
    if (a->end - a->start != b->end - b->start) return a->end - a->start > b->end - b->start;
    return a->start < b->start;
  });
  for (const Span* sb : sbars) {
    Piece inner, outer;
    for (int i : piece) (i >= sb->start && i < sb->end ? inner : outer).push_back(i);
    // The complementizer ("that", "because") does not belong to either clause.
    if (!inner.empty()) {
      const auto& first = s.tokens[inner.front()];
      const auto edge = s.head_edge(inner.front());
      if (first.pos == "IN" || (edge && edge->relation == "mark")) inner.erase(inner.begin());
    }
    if (has_verb(s, inner) && has_verb(s, outer)) return std::make_pair(outer, inner);
  }
  return std::nullopt;
}

std::optional<std::pair<Piece, Piece>> split_on_conjunction(const ParsedSentence& s,
                                                            const Piece& piece) {
  for (int c : piece) {
    if (s.tokens[c].pos != "CC") continue;
    // A clause must end right before the conjunction (or before a comma there)
    // and another must start right after it.
    bool left = false, right = false;
    for (const auto& span : s.constituents) {
      if (span.label != "S") continue;
      if ((span.end == c || (span.end == c - 1 && s.tokens[c - 1].surface == ",")) &&
          covers(piece, span.start, span.end))
        left = true;
      if (span.start == c + 1 && covers(piece, span.start, span.end)) right = true;
    }
    if (!left || !right) continue;
    Piece l, r;
    for (int i : piece) {
      if (i < c) l.push_back(i);
      else if (i > c) r.push_back(i);
    }
    if (!l.empty() && s.tokens[l.back()].surface == ",") l.pop_back();
    if (has_verb(s, l) && has_verb(s, r)) return std::make_pair(l, r);
  }
  return std::nullopt;
}

std::vector<Piece> split_piece(const ParsedSentence& s, const Piece& piece) {
  auto parts = split_on_sbar(s, piece);
  if (!parts) parts = split_on_conjunction(s, piece);
  if (!parts) return {piece};
  std::vector<Piece> out = split_piece(s, parts->first);
  auto more = split_piece(s, parts->second);
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

ParsedSentence materialize(const ParsedSentence& s, const Piece& piece) {
  ParsedSentence out;
  std::map<int, int> remap;
  for (int i : piece) {
    remap[i] = static_cast<int>(out.tokens.size());
    out.tokens.push_back(s.tokens[i]);
  }
  for (const auto& e : s.dep_edges) {
    auto child = remap.find(e.child);
    if (child == remap.end()) continue;
    auto head = remap.find(e.head);
    if (e.head >= 0 && head != remap.end())
      out.dep_edges.push_back({head->second, child->second, e.relation});
    else
      out.dep_edges.push_back({-1, child->second, "root"});
  }
  auto remap_spans = [&](const std::vector<Span>& in, std::vector<Span>& dst) {
    for (const auto& sp : in) {
      if (!covers(piece, sp.start, sp.end)) continue;
      const int a = remap[sp.start];
      const int b = remap[sp.end - 1] + 1;
      if (b - a == sp.end - sp.start) dst.push_back({a, b, sp.label});
    }
  };
  remap_spans(s.ner_spans, out.ner_spans);
  remap_spans(s.constituents, out.constituents);
  if (!out.tokens.empty() && !is_sentence_final(out.tokens.back().surface)) {
    if (out.tokens.back().surface == ",") {
      out.tokens.back() = {".", ".", "."};
    } else {
      int root = -1;
      for (const auto& e : out.dep_edges)
        if (e.head == -1 && is_verb_tag(out.tokens[e.child].pos)) {
          root = e.child;
          break;
        }
      out.dep_edges.push_back({root, static_cast<int>(out.tokens.size()), "punct"});
      out.tokens.push_back({".", ".", "."});
    }
  }
  if (!out.tokens.empty()) {
    auto& first = out.tokens.front().surface;
    if (!first.empty() && std::islower(static_cast<unsigned char>(first[0])))
      first[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(first[0])));
  }
  return out;
}

}  // namespace

std::vector<ParsedSentence> split_sentence(const ParsedSentence& s) {
  if (s.constituents.empty()) return {s};
  Piece all(s.tokens.size());
  std::iota(all.begin(), all.end(), 0);
  auto pieces = split_piece(s, all);
  if (pieces.size() == 1) return {s};
  std::stable_sort(pieces.begin(), pieces.end(),
                   [](const Piece& a, const Piece& b) { return a.front() < b.front(); });
  std::vector<ParsedSentence> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) out.push_back(materialize(s, p));
  return out;
}

// ---------------------------------------------------------------------------
// Eventification

namespace {

/// Generalizes tokens of one sentence, memoizing so the event and the sentence
/// agree on every token.
class Generalizer {
 public:
  Generalizer(const ParsedSentence& s, StoryMemory& memory, const Lexicon& lexicon, int verb)
      : s_(s), memory_(memory), lexicon_(lexicon), verb_(verb), cache_(s.tokens.size()) {
    // Entities are numbered in order of appearance.
    for (const auto& span : s_.ner_spans) {
      std::vector<std::string> words;
      for (int i = span.start; i < span.end; ++i) words.push_back(s_.tokens[i].surface);
      const std::string surface = render_tokens(words);
      const std::string tag = tag_entity(surface, span.label, memory_);
      for (int i = span.start; i < span.end; ++i) {
        entity_of_[i] = tag;
        span_start_[i] = span.start;
      }
    }
  }

  bool in_entity(int i) const { return entity_of_.count(i) > 0; }
  bool entity_start(int i) const {
    auto it = span_start_.find(i);
    return it != span_start_.end() && it->second == i;
  }

  GeneralToken token(int i) {
    if (cache_[i]) return *cache_[i];
    GeneralToken t = compute(i);
    cache_[i] = t;
    return t;
  }

 private:
  GeneralToken compute(int i) {
    const auto& tok = s_.tokens[i];
    if (auto it = entity_of_.find(i); it != entity_of_.end())
      return {TokenKind::EntityTag, it->second};
    if (tok.pos == "PRP") return {TokenKind::Pronoun, std::string(kPronounToken)};
    if (i == verb_) {
      try {
        return {TokenKind::VerbClass, classify_verb(tok.lemma, lexicon_)};
      } catch (const UnknownVerb&) {
        return {TokenKind::Literal, to_lower(tok.lemma)};
      }
    }
    if (is_noun_tag(tok.pos)) {
      try {
        return {TokenKind::Synset, generalize_noun(tok.lemma, 'n', lexicon_)};
      } catch (const UnknownLemma&) {
        try {
          return {TokenKind::Synset, generalize_noun(to_lower(tok.lemma), 'n', lexicon_)};
        } catch (const UnknownLemma&) {
          return {TokenKind::Literal, to_lower(tok.lemma)};
        }
      }
    }
    return {TokenKind::Literal, to_lower(tok.surface)};
  }

  const ParsedSentence& s_;
  StoryMemory& memory_;
  const Lexicon& lexicon_;
  int verb_;
  std::vector<std::optional<GeneralToken>> cache_;
  std::map<int, std::string> entity_of_;
  std::map<int, int> span_start_;
};

int find_main_verb(const ParsedSentence& s) {
  // Prefer a verbal root, then any verb that is not an auxiliary.
  for (const auto& e : s.dep_edges)
    if (e.head == -1 && is_verb_tag(s.tokens[e.child].pos)) return e.child;
  for (int i = 0; i < static_cast<int>(s.tokens.size()); ++i) {
    if (!is_verb_tag(s.tokens[i].pos)) continue;
    const auto edge = s.head_edge(i);
    if (edge && (edge->relation == "aux" || edge->relation == "auxpass" || edge->relation == "cop"))
      continue;
    return i;
  }
  for (int i = 0; i < static_cast<int>(s.tokens.size()); ++i)
    if (is_verb_tag(s.tokens[i].pos)) return i;
  return -1;
}

std::optional<int> first_child(const ParsedSentence& s, int head,
                               std::initializer_list<std::string_view> relations) {
  for (std::string_view rel : relations) {
    auto kids = s.children(head, rel);
    if (!kids.empty()) return kids.front();
  }
  return std::nullopt;
}

}  // namespace

EventifiedSentence eventify_sentence(const ParsedSentence& s, StoryMemory& memory,
                                     const Lexicon& lexicon) {
  const int verb = find_main_verb(s);
  if (verb < 0) throw NoVerb(s.text());
  Generalizer gen(s, memory, lexicon, verb);

  // A copula's arguments hang off its predicate ("he is upset": is <-cop- upset).
  int head = verb;
  std::optional<int> predicate;
  if (const auto e = s.head_edge(verb); e && e->relation == "cop" && e->head >= 0) {
    head = e->head;
    predicate = head;
  }

  std::optional<GeneralToken> subj, obj, prep, mod;
  if (auto i = first_child(s, head, {"nsubj", "nsubjpass"})) subj = gen.token(*i);
  if (auto i = first_child(s, head, {"dobj", "obj"})) obj = gen.token(*i);

  // Preposition: Stanford-style prep -> pobj, or UD-style obl/nmod with a case child.
  std::optional<int> prep_idx, pobj_idx;
  if (auto p = first_child(s, head, {"prep"})) {
    prep_idx = *p;
    pobj_idx = first_child(s, *p, {"pobj"});
  } else {
    for (int c : s.children(head)) {
      const auto rel = s.head_edge(c)->relation;
      if (rel != "obl" && rel != "nmod") continue;
      if (auto cs = first_child(s, c, {"case"})) {
        prep_idx = *cs;
        pobj_idx = c;
        break;
      }
    }
  }
  if (prep_idx) prep = GeneralToken{TokenKind::Preposition, to_lower(s.tokens[*prep_idx].surface)};
  if (pobj_idx) mod = gen.token(*pobj_idx);
  else if (auto i = first_child(s, head, {"iobj"})) mod = gen.token(*i);
  else if (predicate) mod = gen.token(*predicate);
  else if (auto i = first_child(s, head, {"advmod", "npadvmod", "acomp", "amod"}))
    mod = gen.token(*i);

  EventTuple event(subj, gen.token(verb), obj, prep, mod);

  EventifiedSentence out{std::move(event), {}, {}};
  for (int i = 0; i < static_cast<int>(s.tokens.size()); ++i) {
    if (gen.in_entity(i)) {
      if (gen.entity_start(i)) {
        out.sentence.push_back(gen.token(i).surface);
        out.pos.push_back("NNP");
      }
      continue;
    }
    const auto& tok = s.tokens[i];
    // Noun compounds collapse into their head ("drone barge" -> barge's synset).
    if (is_noun_tag(tok.pos)) {
      const auto edge = s.head_edge(i);
      if (edge && edge->relation == "compound" && edge->head >= 0 &&
          is_noun_tag(s.tokens[edge->head].pos))
        continue;
    }
    const GeneralToken t = gen.token(i);
    out.sentence.push_back(t.surface);
    out.pos.push_back(i == verb ? std::string("VB") : tok.pos);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus

nlohmann::json EventRecord::to_json() const {
  nlohmann::json j;
  j["event"] = event.to_json();
  j["sentence"] = sentence;
  if (!pos.empty()) j["pos"] = pos;
  j["story_id"] = story_id;
  j["index"] = index;
  return j;
}

EventRecord EventRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("event"))
    throw FormatError("event record must be an object with an 'event' field");
  EventRecord r{EventTuple::from_json(j.at("event")), {}, {}, {}, 0};
  try {
    if (j.contains("sentence") && !j.at("sentence").is_null())
      r.sentence = j.at("sentence").get<GeneralizedSentence>();
    if (j.contains("pos")) r.pos = j.at("pos").get<std::vector<std::string>>();
    if (j.contains("story_id")) r.story_id = j.at("story_id").get<std::string>();
    if (j.contains("index")) r.index = j.at("index").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed event record: ") + e.what());
  }
  if (!r.pos.empty() && r.pos.size() != r.sentence.size())
    throw FormatError("event record: pos and sentence lengths differ");
  return r;
}

std::vector<EventRecord> EventifiedCorpus::records_for(
    const std::vector<std::string>& story_ids) const {
  std::set<std::string> wanted(story_ids.begin(), story_ids.end());
  std::vector<EventRecord> out;
  for (const auto& story : stories)
    for (const auto& r : story)
      if (wanted.count(r.story_id)) out.push_back(r);
  return out;
}

CorpusSplit split_stories(const std::vector<std::string>& story_ids, std::uint64_t seed,
                          SplitRatio ratio) {
  const int total_ratio = ratio.train + ratio.validation + ratio.test;
  if (ratio.train < 0 || ratio.validation < 0 || ratio.test < 0 || total_ratio <= 0)
    throw ConfigError("split ratio must be non-negative with a positive sum");
  std::vector<std::string> ids = story_ids;
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.uniform_index(i)]);
  const auto n = static_cast<double>(ids.size());
  auto rounded = [&](int part) {
    return static_cast<std::size_t>(n * part / total_ratio + 0.5);
  };
  const std::size_t n_train = std::min(rounded(ratio.train), ids.size());
  const std::size_t n_val = std::min(rounded(ratio.validation), ids.size() - n_train);
  CorpusSplit split;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.validation.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  split.test.assign(ids.begin() + n_train + n_val, ids.end());
  return split;
}

EventifiedCorpus eventify_corpus(const std::vector<Story>& stories, const Lexicon& lexicon,
                                 std::uint64_t seed, SplitRatio ratio) {
  EventifiedCorpus corpus;
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& story : stories) {
    if (!seen.insert(story.id).second) throw FormatError("duplicate story id '" + story.id + "'");
    ids.push_back(story.id);
    StoryMemory memory;
    std::vector<EventRecord> records;
    for (std::size_t si = 0; si < story.sentences.size(); ++si) {
      for (const auto& piece : split_sentence(story.sentences[si])) {
        try {
          auto ev = eventify_sentence(piece, memory, lexicon);
          records.push_back(EventRecord{std::move(ev.event), std::move(ev.sentence),
                                        std::move(ev.pos), story.id, records.size()});
        } catch (const NoVerb& e) {
          corpus.warnings.push_back("story " + story.id + " sentence " + std::to_string(si) +
                                    ": skipped, " + e.what());
        }
      }
    }
    corpus.stories.push_back(std::move(records));
  }
  corpus.split = split_stories(ids, seed, ratio);
  return corpus;
}

// ---------------------------------------------------------------------------
// JSONL

bool is_header_line(const nlohmann::json& j) {
  return j.is_object() && j.size() == 1 && j.contains("header");
}

void write_events_jsonl(std::ostream& out, const std::vector<EventRecord>& records,
                        const nlohmann::json& header) {
  if (!header.is_null()) out << nlohmann::json{{"header", header}}.dump() << '\n';
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<EventRecord> read_events_jsonl(std::istream& in) {
  std::vector<EventRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (is_header_line(j)) continue;
      out.push_back(EventRecord::from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("events line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("events line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EventRecord> read_events_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "e2s eventify");
  return read_events_jsonl(in);
}

std::vector<TrainingPair> to_pairs(const std::vector<EventRecord>& records) {
  std::vector<TrainingPair> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (!r.sentence.empty()) out.push_back({r.event, r.sentence});
  return out;
}

}  // namespace e2s
