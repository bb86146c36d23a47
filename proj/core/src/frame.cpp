#include "e2s/frame.hpp"

#include <algorithm>

#include "e2s/common.hpp"

namespace e2s {

std::string_view to_string(Phrase p) {
  switch (p) {
    case Phrase::NP: return "NP";
    case Phrase::V: return "V";
    case Phrase::PP: return "PP";
  }
  return "?";
}

FrameSpec::FrameSpec(std::vector<Phrase> symbols) : symbols_(std::move(symbols)) {
  if (std::count(symbols_.begin(), symbols_.end(), Phrase::V) != 1)
    throw FormatError("frame " + to_string() + " must contain exactly one V");
}

FrameSpec FrameSpec::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("frame must be an array of phrase symbols: " + j.dump());
  std::vector<Phrase> symbols;
  for (const auto& s : j) {
    const std::string sym = s.get<std::string>();
    if (sym == "NP") symbols.push_back(Phrase::NP);
    else if (sym == "V" || sym == "v") symbols.push_back(Phrase::V);
    else if (sym == "PP") symbols.push_back(Phrase::PP);
    else throw FormatError("unknown phrase symbol '" + sym + "' in frame " + j.dump());
  }
  return FrameSpec(std::move(symbols));
}

nlohmann::json FrameSpec::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (Phrase p : symbols_) j.push_back(std::string(e2s::to_string(p)));
  return j;
}

std::string FrameSpec::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (i) out += ' ';
    out += e2s::to_string(symbols_[i]);
  }
  return out + "]";
}

}  // namespace e2s
