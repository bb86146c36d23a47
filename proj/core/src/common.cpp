#include "e2s/common.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace e2s {

std::size_t Rng::sample(const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error("InvalidArgument", "Rng::sample: weights sum to zero");
  const double target = uniform01() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  return std::all_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::ispunct(c) && c != '<' && c != '>'; });
}

namespace {

bool attaches_left(std::string_view token) {
  if (token == "(" || token == "``" || token == "\"") return false;
  if (is_punctuation(token)) return true;
  return token == "'s" || token == "n't" || token == "'re" || token == "'ll" || token == "'ve" ||
         token == "'m" || token == "'d";
}

}  // namespace

std::string render_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.empty()) continue;
    if (!out.empty() && !attaches_left(t)) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string render_sentence(const std::vector<std::string>& tokens) {
  std::string out = render_tokens(tokens);
  for (char& c : out) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      break;
    }
    if (c == '<') break;
  }
  return out;
}

}  // namespace e2s
