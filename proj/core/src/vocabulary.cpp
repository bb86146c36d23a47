#include "e2s/vocabulary.hpp"

#include <algorithm>

#include "e2s/common.hpp"

namespace e2s {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  tokens_ = {std::string(kBeginToken), std::string(kEosToken), std::string(kUnkToken)};
  for (auto& t : tokens) {
    if (t.empty()) throw FormatError("vocabulary token is empty");
    if (t == kBeginToken || t == kEosToken || t == kUnkToken) continue;
    tokens_.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<TokenId>(i));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

nlohmann::json Vocabulary::to_json() const {
  return std::vector<std::string>(tokens_.begin() + 3, tokens_.end());
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("vocabulary must be a JSON array of tokens");
  return Vocabulary(j.get<std::vector<std::string>>());
}

}  // namespace e2s
