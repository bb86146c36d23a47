#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace e2s {

/// The token standing for any pronoun in generalized text.
inline constexpr std::string_view kPronounToken = "<PRP>";

enum class TokenKind { Synset, EntityTag, Pronoun, VerbClass, Preposition, Literal };

std::string_view to_string(TokenKind kind);

/// lemma.pos.NN, e.g. event.n.01 or natural_object.n.01.
bool is_synset_id(std::string_view token);
/// <CATEGORY>n with n >= 0, e.g. <PERSON>3. <PRP> is not an entity tag.
bool is_entity_tag(std::string_view token);
/// VerbNet-style class id such as send-11.1 or act-114-1-1.
bool is_verb_class_id(std::string_view token);

/// "PERSON" for "<PERSON>3". Precondition: is_entity_tag(tag).
std::string entity_category(std::string_view tag);
/// 3 for "<PERSON>3". Precondition: is_entity_tag(tag).
int entity_index(std::string_view tag);
std::string make_entity_tag(std::string_view category, int index);

/// The part of speech embedded in a synset id ('n', 'v', 'a', 's' or 'r').
char synset_pos(std::string_view synset);
/// "natural object" for "natural_object.n.01".
std::string synset_lemma(std::string_view synset);

/// A token of the generalized vocabulary together with its kind.
struct GeneralToken {
  TokenKind kind = TokenKind::Literal;
  std::string surface;

  /// Infers the kind from the token's shape. Prepositions are only known by
  /// position in an event, so they come out as Literal here.
  static GeneralToken classify(std::string_view surface);

  friend bool operator==(const GeneralToken&, const GeneralToken&) = default;
};

enum class Slot : std::size_t { Subject = 0, Verb = 1, Object = 2, Preposition = 3, Modifier = 4 };
inline constexpr std::size_t kSlotCount = 5;
inline constexpr std::array<Slot, kSlotCount> kAllSlots = {
    Slot::Subject, Slot::Verb, Slot::Object, Slot::Preposition, Slot::Modifier};

std::string_view slot_name(Slot slot);

/// An event <s, v, o, p, m>. Any slot except the verb may be empty.
/// Serialized as the JSON array [s, v, o, p, m] with null for empty slots.
class EventTuple {
 public:
  using Field = std::optional<GeneralToken>;

  EventTuple(Field subject, GeneralToken verb, Field object, Field preposition, Field modifier);

  /// Builds an event from raw surfaces; an empty optional is an empty slot.
  static EventTuple from_surfaces(const std::array<std::optional<std::string>, kSlotCount>& s);

  const Field& slot(Slot s) const { return slots_[static_cast<std::size_t>(s)]; }
  const Field& subject() const { return slot(Slot::Subject); }
  const GeneralToken& verb() const { return *slot(Slot::Verb); }
  const Field& object() const { return slot(Slot::Object); }
  const Field& preposition() const { return slot(Slot::Preposition); }
  const Field& modifier() const { return slot(Slot::Modifier); }

  bool has(Slot s) const { return slot(s).has_value(); }

  /// Non-empty surfaces in canonical (s, v, o, p, m) order.
  std::vector<std::string> tokens() const;
  std::array<std::optional<std::string>, kSlotCount> surfaces() const;

  /// Human-readable form, e.g. "<<PRP>, act-114-1-1, null, to, event.n.01>".
  std::string to_string() const;

  nlohmann::json to_json() const;
  static EventTuple from_json(const nlohmann::json& j);

  friend bool operator==(const EventTuple&, const EventTuple&) = default;

 private:
  std::array<Field, kSlotCount> slots_;
};

/// A sentence over the generalized vocabulary (synsets, entity tags, <PRP>,
/// verb class ids and plain function words).
using GeneralizedSentence = std::vector<std::string>;

struct EventHash {
  std::size_t operator()(const EventTuple& e) const noexcept;
};

}  // namespace e2s
