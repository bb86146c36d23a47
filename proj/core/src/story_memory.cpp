#include "e2s/story_memory.hpp"

#include <algorithm>

#include "e2s/common.hpp"
#include "e2s/event.hpp"

namespace e2s {

const Binding* StoryMemory::find(std::string_view key) const {
  for (const auto& b : bindings_)
    if (b.key == key) return &b;
  return nullptr;
}

Binding* StoryMemory::find_mutable(std::string_view key) {
  for (auto& b : bindings_)
    if (b.key == key) return &b;
  return nullptr;
}

const Binding* StoryMemory::find_surface(std::string_view surface,
                                         std::string_view category) const {
  for (const auto& b : bindings_)
    if (b.category == category && b.surface == surface) return &b;
  return nullptr;
}

const Binding& StoryMemory::bind(const std::string& key, const std::string& surface,
                                 const std::string& category, const std::string& sense) {
  if (Binding* existing = find_mutable(key)) {
    if (existing->surface != surface)
      throw Error("BindingConflict", "'" + key + "' is already bound to '" + existing->surface +
                                         "', cannot rebind to '" + surface + "'");
    existing->mentions.push_back(++clock_);
    return *existing;
  }
  bindings_.push_back(Binding{key, surface, category, {++clock_}, sense});
  return bindings_.back();
}

void StoryMemory::mention(std::string_view key) {
  Binding* b = find_mutable(key);
  if (!b) throw Error("UnboundKey", "'" + std::string(key) + "' is not bound in this story");
  b->mentions.push_back(++clock_);
}

std::size_t StoryMemory::count_category(std::string_view category) const {
  return static_cast<std::size_t>(std::count_if(
      bindings_.begin(), bindings_.end(), [&](const Binding& b) { return b.category == category; }));
}

const Binding* StoryMemory::most_recent(const std::function<bool(const Binding&)>& pred) const {
  const Binding* best = nullptr;
  for (const auto& b : bindings_)
    if (pred(b) && (!best || b.last_mention() > best->last_mention())) best = &b;
  return best;
}

std::string tag_entity(const std::string& surface, const std::string& category,
                       StoryMemory& memory) {
  if (const Binding* b = memory.find_surface(surface, category)) {
    memory.mention(b->key);
    return b->key;
  }
  const auto n = static_cast<int>(memory.count_category(category));
  std::string tag = make_entity_tag(category, n);
  memory.bind(tag, surface, category);
  return tag;
}

}  // namespace e2s
