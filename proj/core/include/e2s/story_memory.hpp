#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace e2s {

/// Category recorded for synset bindings (entity tags carry their NER category).
inline constexpr std::string_view kSynsetCategory = "SYNSET";

/// One entry of a story's memory: a generalized key (entity tag or synset) bound
/// to a surface form, plus the positions at which it was mentioned.
struct Binding {
  std::string key;
  std::string surface;
  std::string category;
  std::vector<std::size_t> mentions;  // strictly increasing
  std::string sense;                  // synset the surface was drawn from, for synset keys

  std::size_t last_mention() const { return mentions.empty() ? 0 : mentions.back(); }
};

/// Per-story graph of what has been mentioned and how it was realized.
/// Not thread-safe: one story, one writer.
class StoryMemory {
 public:
  const Binding* find(std::string_view key) const;
  /// Binding for a surface within a category (used when numbering entities).
  const Binding* find_surface(std::string_view surface, std::string_view category) const;

  /// Binds `key` to `surface` and records a mention. Re-binding a key to a
  /// different surface is an error: a key has one surface per story.
  const Binding& bind(const std::string& key, const std::string& surface,
                      const std::string& category, const std::string& sense = {});
  /// Records another mention of an existing key.
  void mention(std::string_view key);

  /// Number of distinct bindings of a category.
  std::size_t count_category(std::string_view category) const;

  /// Most recently mentioned binding that satisfies `pred`, if any.
  const Binding* most_recent(const std::function<bool(const Binding&)>& pred) const;

  const std::vector<Binding>& bindings() const { return bindings_; }
  bool empty() const { return bindings_.empty(); }

 private:
  Binding* find_mutable(std::string_view key);

  std::vector<Binding> bindings_;
  std::size_t clock_ = 0;
};

/// Returns the entity tag for a named entity, minting <CATEGORY>n on first sight
/// where n counts the category's distinct entities so far (0-based).
std::string tag_entity(const std::string& surface, const std::string& category,
                       StoryMemory& memory);

}  // namespace e2s
