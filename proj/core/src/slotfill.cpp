#include "e2s/slotfill.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace e2s {

EntityPool::EntityPool(std::map<std::string, std::vector<std::string>> names) {
  for (auto& [cat, list] : names) names_.emplace(cat, std::move(list));
}

EntityPool EntityPool::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("entity pool must map categories to name lists");
  std::map<std::string, std::vector<std::string>> names;
  try {
    for (const auto& [cat, list] : j.items()) {
      auto v = list.get<std::vector<std::string>>();
      for (const auto& n : v)
        if (n.empty()) throw FormatError("empty name in entity pool category '" + cat + "'");
      names.emplace(cat, std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed entity pool: ") + e.what());
  }
  return EntityPool(std::move(names));
}

EntityPool EntityPool::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string(), "a JSON file of names per NER category (--pool)");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

nlohmann::json EntityPool::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [cat, list] : names_) j[cat] = list;
  return j;
}

const std::vector<std::string>& EntityPool::names(std::string_view category) const {
  static const std::vector<std::string> none;
  auto it = names_.find(category);
  return it == names_.end() ? none : it->second;
}

// ---------------------------------------------------------------------------

std::string resolve_pronoun(const StoryMemory& memory, const GenderTable& genders, PronounCase c) {
  const bool obj = c == PronounCase::Objective;
  const Binding* b = memory.most_recent([](const Binding&) { return true; });
  if (!b) return "it";
  if (b->category == "ORG") return obj ? "them" : "they";
  if (b->category == "PERSON") {
    const auto words = split_ws(b->surface);
    switch (words.empty() ? Gender::Unknown : genders.lookup(words.front())) {
      case Gender::Masculine: return obj ? "him" : "he";
      case Gender::Feminine: return obj ? "her" : "she";
      case Gender::Unknown: return obj ? "them" : "they";
    }
  }
  return "it";
}

std::string choose_hyponym(std::string_view synset, const Lexicon& lexicon, Rng& rng) {
  std::set<std::string> reach;
  for (const auto& h1 : lexicon.hyponyms(synset)) {
    reach.insert(h1);
    for (const auto& h2 : lexicon.hyponyms(h1)) reach.insert(h2);
  }
  if (reach.empty()) return std::string(synset);
  auto it = reach.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_index(reach.size())));
  return *it;
}

std::string realize_verb(std::string_view class_id, const Lexicon& lexicon, bool base_form) {
  std::string verb;
  if (auto rep = lexicon.representative_verb(class_id)) {
    verb = *rep;
  } else {
    // Unknown class: its name part, "act-114-1-1" -> "act".
    verb = std::string(class_id.substr(0, class_id.find('-')));
  }
  std::replace(verb.begin(), verb.end(), '_', ' ');
  return base_form ? verb : conjugate_third_person(verb);
}

namespace {

bool takes_base_form(const std::vector<std::string>& out) {
  static const std::set<std::string> triggers = {"can", "could", "will", "would", "shall",
                                                 "should", "may", "might", "must", "to",
                                                 "do", "does", "did"};
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    const std::string w = to_lower(*it);
    if (w == "not" || w == "n't" || w == "never") continue;
    return triggers.count(w) > 0;
  }
  return false;
}

bool objective_position(const GeneralizedSentence& sentence, std::size_t i) {
  static const std::set<std::string> preps = {
      "about", "against", "at", "behind", "beside", "between", "by", "for", "from", "in",
      "into", "near", "of", "on", "onto", "over", "through", "to", "toward", "towards", "under",
      "with", "without"};
  if (i == 0) return false;
  const std::string& prev = sentence[i - 1];
  return is_verb_class_id(prev) || preps.count(to_lower(prev)) > 0;
}

}  // namespace

FillResult fill_sentence(const GeneralizedSentence& sentence, StoryMemory& memory,
                         const EntityPool& pool, const Lexicon& lexicon, Rng& rng) {
  FillResult result;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const std::string& tok = sentence[i];
    if (tok == kPronounToken) {
      const auto c = objective_position(sentence, i) ? PronounCase::Objective
                                                     : PronounCase::Nominative;
      result.tokens.push_back(resolve_pronoun(memory, lexicon.genders(), c));
      // The referent counts as mentioned again.
      if (const Binding* b = memory.most_recent([](const Binding&) { return true; }))
        memory.mention(b->key);
    } else if (is_entity_tag(tok)) {
      if (const Binding* b = memory.find(tok)) {
        memory.mention(tok);
        result.tokens.push_back(b->surface);
        continue;
      }
      const std::string category = entity_category(tok);
      std::vector<std::string> fresh;
      for (const auto& name : pool.names(category))
        if (std::none_of(memory.bindings().begin(), memory.bindings().end(),
                         [&](const Binding& b) { return b.surface == name; }))
          fresh.push_back(name);
      std::string surface;
      if (fresh.empty()) {
        surface = tok;
        result.warnings.push_back("no unused " + category + " name left for " + tok);
      } else {
        surface = fresh[rng.uniform_index(fresh.size())];
      }
      memory.bind(tok, surface, category);
      result.tokens.push_back(surface);
    } else if (is_synset_id(tok)) {
      if (const Binding* b = memory.find(tok)) {
        memory.mention(tok);
        result.tokens.push_back(b->surface);
        continue;
      }
      // A stored word is reused when the sense it was drawn from is a kind of `tok`.
      const Binding* kind = memory.most_recent([&](const Binding& b) {
        return b.category == kSynsetCategory && !b.sense.empty() &&
               lexicon.hypernym_distance(b.sense, tok).has_value();
      });
      std::string surface;
      if (kind) {
        surface = kind->surface;
        memory.mention(kind->key);
      } else {
        const std::string sense = lexicon.has_synset(tok) ? choose_hyponym(tok, lexicon, rng) : tok;
        surface = synset_lemma(sense);
        memory.bind(tok, surface, std::string(kSynsetCategory), sense);
      }
      result.tokens.push_back(surface);
    } else if (is_verb_class_id(tok)) {
      const bool plural = !result.tokens.empty() && to_lower(result.tokens.back()) == "they";
      result.tokens.push_back(
          realize_verb(tok, lexicon, plural || takes_base_form(result.tokens)));
    } else if (tok == "be" && !result.tokens.empty() && !takes_base_form(result.tokens)) {
      const std::string prev = to_lower(result.tokens.back());
      result.tokens.push_back(prev == "i" ? "am" : prev == "they" || prev == "we" || prev == "you" ? "are" : "is");
    } else {
      result.tokens.push_back(tok);
    }
  }
  result.text = render_sentence(result.tokens);
  return result;
}

}  // namespace e2s
