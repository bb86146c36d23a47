#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace e2s {

/// Phrase symbols of the realization grammar
///   S -> NP v (NP) (PP);  NP -> d n;  PP -> p NP
enum class Phrase { NP, V, PP };

std::string_view to_string(Phrase p);

/// An ordered phrase pattern such as [NP V NP PP]. Always holds exactly one V.
class FrameSpec {
 public:
  FrameSpec() = default;
  explicit FrameSpec(std::vector<Phrase> symbols);

  /// Parses ["NP", "V", "PP"]; "v" is accepted for V.
  static FrameSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::vector<Phrase>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }
  std::string to_string() const;  // "[NP V PP]"

  friend bool operator==(const FrameSpec&, const FrameSpec&) = default;

 private:
  std::vector<Phrase> symbols_;
};

}  // namespace e2s
