#include "e2s/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace e2s {

namespace {

const std::vector<std::string> kNoStrings;
const std::vector<FrameSpec> kNoFrames;

Gender parse_gender(std::string_view g) {
  const std::string s = to_lower(g);
  if (s == "m" || s == "masc" || s == "male" || s == "masculine") return Gender::Masculine;
  if (s == "f" || s == "fem" || s == "female" || s == "feminine") return Gender::Feminine;
  return Gender::Unknown;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::Masculine: return "masc";
    case Gender::Feminine: return "fem";
    case Gender::Unknown: return "unknown";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// GenderTable

GenderTable::GenderTable(std::unordered_map<std::string, Gender> table) {
  for (auto& [name, g] : table) table_[to_lower(name)] = g;
}

GenderTable GenderTable::from_csv(const std::filesystem::path& path, double threshold) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "a name,gender,count CSV");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv_text(ss.str(), threshold);
}

GenderTable GenderTable::from_csv_text(std::string_view text, double threshold) {
  struct Counts {
    double masc = 0, fem = 0, total = 0;
  };
  std::map<std::string, Counts> counts;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 3) throw FormatError("gender csv line " + std::to_string(line_no) +
                                            ": expected name,gender,count");
    if (line_no == 1 && to_lower(cols[0]) == "name") continue;
    double count = 0;
    try {
      count = std::stod(cols[2]);
    } catch (const std::exception&) {
      throw FormatError("gender csv line " + std::to_string(line_no) + ": bad count '" +
                        cols[2] + "'");
    }
    auto& c = counts[to_lower(cols[0])];
    const Gender g = parse_gender(cols[1]);
    if (g == Gender::Masculine) c.masc += count;
    if (g == Gender::Feminine) c.fem += count;
    c.total += count;
  }
  std::unordered_map<std::string, Gender> table;
  for (const auto& [name, c] : counts) {
    Gender g = Gender::Unknown;
    if (c.total > 0 && c.masc / c.total >= threshold) g = Gender::Masculine;
    else if (c.total > 0 && c.fem / c.total >= threshold) g = Gender::Feminine;
    table.emplace(name, g);
  }
  return GenderTable(std::move(table));
}

Gender GenderTable::lookup(std::string_view first_name) const {
  auto it = table_.find(to_lower(first_name));
  return it == table_.end() ? Gender::Unknown : it->second;
}

void GenderTable::merge(const GenderTable& other) {
  for (const auto& [name, g] : other.table_) table_[name] = g;
}

// ---------------------------------------------------------------------------
// Lexicon

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "tools/compile_lexicon.py");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("lexicon " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("lexicon snapshot must be a JSON object");
  Lexicon lex;
  try {
    if (j.contains("hypernyms"))
      for (const auto& [child, parent] : j.at("hypernyms").items())
        lex.hypernyms_[child] = parent.get<std::string>();
    if (j.contains("hyponyms"))
      for (const auto& [parent, children] : j.at("hyponyms").items())
        lex.hyponyms_[parent] = children.get<std::vector<std::string>>();
    if (j.contains("lemma_index"))
      for (const auto& [pos, entries] : j.at("lemma_index").items())
        for (const auto& [lemma, sense] : entries.items()) {
          std::string first;
          if (sense.is_array()) {
            if (sense.empty()) continue;
            first = sense.front().get<std::string>();
          } else {
            first = sense.get<std::string>();
          }
          lex.lemma_index_[pos][lemma] = first;
        }
    if (j.contains("verb_classes"))
      for (const auto& [lemma, classes] : j.at("verb_classes").items()) {
        auto v = classes.get<std::vector<std::string>>();
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        lex.verb_index_[lemma] = std::move(v);
      }
    if (j.contains("frames"))
      for (const auto& [cls, frames] : j.at("frames").items()) {
        auto& out = lex.frames_[cls];
        for (const auto& f : frames) out.push_back(FrameSpec::from_json(f));
      }
    if (j.contains("class_members"))
      for (const auto& [cls, members] : j.at("class_members").items())
        lex.class_members_[cls] = members.get<std::vector<std::string>>();
    if (j.contains("gender_table")) {
      std::unordered_map<std::string, Gender> genders;
      for (const auto& [name, g] : j.at("gender_table").items())
        genders[name] = parse_gender(g.get<std::string>());
      lex.genders_ = GenderTable(std::move(genders));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("lexicon snapshot: ") + e.what());
  }
  lex.validate_and_complete();
  return lex;
}

void Lexicon::validate_and_complete() {
  for (const auto& [parent, children] : hyponyms_) {
    for (const auto& child : children) {
      auto it = hypernyms_.find(child);
      if (it == hypernyms_.end() || it->second != parent)
        throw FormatError("lexicon: hyponym edge " + parent + " -> " + child +
                          " has no matching hypernym edge");
    }
  }
  // Acyclicity: every chain must terminate within the number of edges.
  for (const auto& [start, _] : hypernyms_) {
    std::string cur = start;
    std::size_t hops = 0;
    for (auto it = hypernyms_.find(cur); it != hypernyms_.end(); it = hypernyms_.find(cur)) {
      cur = it->second;
      if (++hops > hypernyms_.size())
        throw FormatError("lexicon: hypernym cycle through " + start);
    }
  }
  // Hyponym lists are completed from the hypernym edges and kept sorted.
  for (const auto& [child, parent] : hypernyms_) {
    auto& kids = hyponyms_[parent];
    if (std::find(kids.begin(), kids.end(), child) == kids.end()) kids.push_back(child);
  }
  for (auto& [_, kids] : hyponyms_) std::sort(kids.begin(), kids.end());

  for (const auto& [child, parent] : hypernyms_) {
    synsets_[child] = true;
    synsets_[parent] = true;
  }
  for (const auto& [_, entries] : lemma_index_)
    for (const auto& [__, sense] : entries) synsets_[sense] = true;
}

nlohmann::json Lexicon::to_json() const {
  nlohmann::json j;
  j["format"] = "e2s-lexicon";
  j["version"] = 1;
  j["hypernyms"] = nlohmann::json::object();
  for (const auto& [c, p] : hypernyms_) j["hypernyms"][c] = p;
  j["hyponyms"] = nlohmann::json::object();
  for (const auto& [p, cs] : hyponyms_)
    if (!cs.empty()) j["hyponyms"][p] = cs;
  j["lemma_index"] = nlohmann::json::object();
  for (const auto& [pos, entries] : lemma_index_)
    for (const auto& [lemma, sense] : entries) j["lemma_index"][pos][lemma] = sense;
  j["verb_classes"] = nlohmann::json::object();
  for (const auto& [lemma, cls] : verb_index_) j["verb_classes"][lemma] = cls;
  j["frames"] = nlohmann::json::object();
  for (const auto& [cls, frames] : frames_) {
    auto& arr = j["frames"][cls] = nlohmann::json::array();
    for (const auto& f : frames) arr.push_back(f.to_json());
  }
  if (!class_members_.empty())
    for (const auto& [cls, members] : class_members_) j["class_members"][cls] = members;
  j["gender_table"] = nlohmann::json::object();
  for (const auto& [name, g] : genders_.entries()) j["gender_table"][name] = to_string(g);
  return j;
}

bool Lexicon::has_synset(std::string_view synset) const {
  return synsets_.count(std::string(synset)) > 0;
}

std::optional<std::string> Lexicon::hypernym(std::string_view synset) const {
  auto it = hypernyms_.find(std::string(synset));
  if (it == hypernyms_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& Lexicon::hyponyms(std::string_view synset) const {
  auto it = hyponyms_.find(std::string(synset));
  return it == hyponyms_.end() ? kNoStrings : it->second;
}

std::optional<int> Lexicon::hypernym_distance(std::string_view descendant,
                                              std::string_view ancestor) const {
  std::string cur(descendant);
  int hops = 0;
  while (true) {
    if (cur == ancestor) return hops;
    auto it = hypernyms_.find(cur);
    if (it == hypernyms_.end()) return std::nullopt;
    cur = it->second;
    ++hops;
  }
}

std::optional<std::string> Lexicon::first_sense(std::string_view lemma, char pos) const {
  auto p = lemma_index_.find(std::string(1, pos));
  if (p == lemma_index_.end()) return std::nullopt;
  auto it = p->second.find(std::string(lemma));
  if (it == p->second.end()) {
    it = p->second.find(to_lower(lemma));
    if (it == p->second.end()) return std::nullopt;
  }
  return it->second;
}

const std::vector<std::string>& Lexicon::verb_classes_of(std::string_view lemma) const {
  auto it = verb_index_.find(std::string(lemma));
  return it == verb_index_.end() ? kNoStrings : it->second;
}

bool Lexicon::has_verb_class(std::string_view class_id) const {
  const std::string id(class_id);
  if (frames_.count(id) || class_members_.count(id)) return true;
  for (const auto& [_, classes] : verb_index_)
    if (std::binary_search(classes.begin(), classes.end(), id)) return true;
  return false;
}

const std::vector<FrameSpec>& Lexicon::frames(std::string_view class_id) const {
  auto it = frames_.find(std::string(class_id));
  return it == frames_.end() ? kNoFrames : it->second;
}

std::optional<std::string> Lexicon::representative_verb(std::string_view class_id) const {
  const std::string id(class_id);
  if (auto it = class_members_.find(id); it != class_members_.end() && !it->second.empty())
    return it->second.front();
  std::optional<std::string> best;
  for (const auto& [lemma, classes] : verb_index_)
    if (std::binary_search(classes.begin(), classes.end(), id) && (!best || lemma < *best))
      best = lemma;
  return best;
}

// ---------------------------------------------------------------------------

std::string generalize_noun(std::string_view lemma, char pos, const Lexicon& lexicon) {
  auto sense = lexicon.first_sense(lemma, pos);
  if (!sense) throw UnknownLemma(std::string(lemma));
  std::string cur = *sense;
  for (int hop = 0; hop < 2; ++hop) {
    auto up = lexicon.hypernym(cur);
    if (!up) break;
    cur = *up;
  }
  return cur;
}

std::vector<std::string> verb_stem_candidates(std::string_view word) {
  const std::string w = to_lower(word);
  std::vector<std::string> out{w};
  auto add = [&](std::string s) {
    if (s.size() >= 2 && std::find(out.begin(), out.end(), s) == out.end())
      out.push_back(std::move(s));
  };
  const auto n = w.size();
  if (ends_with(w, "ies")) add(w.substr(0, n - 3) + "y");
  if (ends_with(w, "ied")) add(w.substr(0, n - 3) + "y");
  if (ends_with(w, "es")) add(w.substr(0, n - 2));
  if (ends_with(w, "s") && !ends_with(w, "ss")) add(w.substr(0, n - 1));
  if (ends_with(w, "ed")) {
    add(w.substr(0, n - 1));  // chased -> chase
    add(w.substr(0, n - 2));  // inspected -> inspect
    if (n >= 4 && w[n - 3] == w[n - 4]) add(w.substr(0, n - 3));  // stopped -> stop
  }
  if (ends_with(w, "ing")) {
    add(w.substr(0, n - 3));
    add(w.substr(0, n - 3) + "e");
    if (n >= 5 && w[n - 4] == w[n - 5]) add(w.substr(0, n - 4));
  }
  return out;
}

std::string classify_verb(std::string_view verb_lemma, const Lexicon& lexicon) {
  for (const auto& candidate : verb_stem_candidates(verb_lemma)) {
    const auto& classes = lexicon.verb_classes_of(candidate);
    if (!classes.empty()) return classes.front();
  }
  throw UnknownVerb(std::string(verb_lemma));
}

std::string conjugate_third_person(std::string_view verb) {
  std::string v(verb);
  if (v.empty()) return v;
  if (v == "be") return "is";
  if (v == "have") return "has";
  if (v == "do") return "does";
  if (v == "go") return "goes";
  // Multi-word verbs ("find out") inflect the head word.
  if (auto sp = v.find(' '); sp != std::string::npos)
    return conjugate_third_person(v.substr(0, sp)) + v.substr(sp);
  const auto n = v.size();
  if (n >= 2 && v[n - 1] == 'y' && !is_vowel(v[n - 2])) return v.substr(0, n - 1) + "ies";
  if (ends_with(v, "s") || ends_with(v, "x") || ends_with(v, "z") || ends_with(v, "ch") ||
      ends_with(v, "sh") || ends_with(v, "o"))
    return v + "es";
  return v + "s";
}

}  // namespace e2s
