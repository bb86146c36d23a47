#include "e2s/event.hpp"

#include <cctype>
#include <regex>

#include "e2s/common.hpp"

namespace e2s {

namespace {

const std::regex& synset_re() {
  static const std::regex re(R"(^[^\s.]+(\.[^\s.]+)*\.[nvasr]\.[0-9]{2}$)");
  return re;
}
const std::regex& entity_re() {
  static const std::regex re(R"(^<([A-Z][A-Z_]*)>([0-9]+)$)");
  return re;
}
const std::regex& verb_class_re() {
  static const std::regex re(R"(^[a-z_]+-[0-9]+(\.[0-9]+)*(-[0-9]+(\.[0-9]+)*)*$)");
  return re;
}

void check_vocabulary_member(const GeneralToken& t, Slot slot) {
  if (t.surface.empty())
    throw FormatError("event slot " + std::string(slot_name(slot)) + " holds an empty token");
  for (unsigned char c : t.surface) {
    if (std::isspace(c))
      throw FormatError("event slot " + std::string(slot_name(slot)) + " holds '" + t.surface +
                        "', which contains whitespace");
  }
}

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Synset: return "synset";
    case TokenKind::EntityTag: return "entity";
    case TokenKind::Pronoun: return "pronoun";
    case TokenKind::VerbClass: return "verb_class";
    case TokenKind::Preposition: return "preposition";
    case TokenKind::Literal: return "literal";
  }
  return "literal";
}

bool is_synset_id(std::string_view token) {
  return std::regex_match(token.begin(), token.end(), synset_re());
}

bool is_entity_tag(std::string_view token) {
  return std::regex_match(token.begin(), token.end(), entity_re());
}

bool is_verb_class_id(std::string_view token) {
  return std::regex_match(token.begin(), token.end(), verb_class_re());
}

std::string entity_category(std::string_view tag) {
  const auto close = tag.find('>');
  return std::string(tag.substr(1, close - 1));
}

int entity_index(std::string_view tag) {
  const auto close = tag.find('>');
  return std::stoi(std::string(tag.substr(close + 1)));
}

std::string make_entity_tag(std::string_view category, int index) {
  return "<" + std::string(category) + ">" + std::to_string(index);
}

char synset_pos(std::string_view synset) {
  // lemma.p.NN
  return synset.size() >= 4 ? synset[synset.size() - 4] : '?';
}

std::string synset_lemma(std::string_view synset) {
  std::string lemma(synset.substr(0, synset.size() >= 5 ? synset.size() - 5 : 0));
  for (char& c : lemma)
    if (c == '_') c = ' ';
  return lemma;
}

GeneralToken GeneralToken::classify(std::string_view surface) {
  if (surface == kPronounToken) return {TokenKind::Pronoun, std::string(surface)};
  if (is_entity_tag(surface)) return {TokenKind::EntityTag, std::string(surface)};
  if (is_synset_id(surface)) return {TokenKind::Synset, std::string(surface)};
  if (is_verb_class_id(surface)) return {TokenKind::VerbClass, std::string(surface)};
  return {TokenKind::Literal, std::string(surface)};
}

std::string_view slot_name(Slot slot) {
  switch (slot) {
    case Slot::Subject: return "s";
    case Slot::Verb: return "v";
    case Slot::Object: return "o";
    case Slot::Preposition: return "p";
    case Slot::Modifier: return "m";
  }
  return "?";
}

EventTuple::EventTuple(Field subject, GeneralToken verb, Field object, Field preposition,
                       Field modifier)
    : slots_{std::move(subject), std::move(verb), std::move(object), std::move(preposition),
             std::move(modifier)} {
  for (Slot s : kAllSlots)
    if (slot(s)) check_vocabulary_member(*slot(s), s);
}

EventTuple EventTuple::from_surfaces(
    const std::array<std::optional<std::string>, kSlotCount>& s) {
  auto field = [&](Slot slot) -> Field {
    const auto& v = s[static_cast<std::size_t>(slot)];
    if (!v) return std::nullopt;
    if (slot == Slot::Preposition) return GeneralToken{TokenKind::Preposition, *v};
    GeneralToken t = GeneralToken::classify(*v);
    if (slot != Slot::Verb && t.kind == TokenKind::VerbClass) t.kind = TokenKind::Literal;
    if (slot == Slot::Verb && t.kind != TokenKind::VerbClass) t.kind = TokenKind::Literal;
    return t;
  };
  if (!s[static_cast<std::size_t>(Slot::Verb)])
    throw FormatError("event verb slot must not be empty");
  return EventTuple(field(Slot::Subject), *field(Slot::Verb), field(Slot::Object),
                    field(Slot::Preposition), field(Slot::Modifier));
}

std::vector<std::string> EventTuple::tokens() const {
  std::vector<std::string> out;
  for (const auto& f : slots_)
    if (f) out.push_back(f->surface);
  return out;
}

std::array<std::optional<std::string>, kSlotCount> EventTuple::surfaces() const {
  std::array<std::optional<std::string>, kSlotCount> out;
  for (std::size_t i = 0; i < kSlotCount; ++i)
    if (slots_[i]) out[i] = slots_[i]->surface;
  return out;
}

std::string EventTuple::to_string() const {
  std::string out = "<";
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    if (i) out += ", ";
    out += slots_[i] ? slots_[i]->surface : "null";
  }
  return out + ">";
}

nlohmann::json EventTuple::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : slots_) j.push_back(f ? nlohmann::json(f->surface) : nlohmann::json());
  return j;
}

EventTuple EventTuple::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kSlotCount)
    throw FormatError("event must be a JSON array [s, v, o, p, m], got " + j.dump());
  std::array<std::optional<std::string>, kSlotCount> s;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    if (j[i].is_null()) continue;
    if (!j[i].is_string()) throw FormatError("event slots must be strings or null: " + j.dump());
    s[i] = j[i].get<std::string>();
  }
  return from_surfaces(s);
}

std::size_t EventHash::operator()(const EventTuple& e) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Slot s : kAllSlots) {
    h = fnv1a64(e.slot(s) ? e.slot(s)->surface : std::string_view("\x01"), h);
    h = fnv1a64("\x1f", h);
  }
  return static_cast<std::size_t>(h);
}

}  // namespace e2s
