#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace e2s {

/// Base of every error the library throws. `kind()` is a stable machine-readable
/// name used by the CLI's error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("FormatError", message) {}
};

class EmptyCorpus : public Error {
 public:
  explicit EmptyCorpus(const std::string& message) : Error("EmptyCorpus", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

/// A file the current command needs but which has not been produced yet.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::string& path, const std::string& producer)
      : Error("MissingArtifact",
              "missing artifact '" + path + "' (produce it with: " + producer + ")"),
        path_(path), producer_(producer) {}
  const std::string& path() const noexcept { return path_; }
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string path_;
  std::string producer_;
};

// ---------------------------------------------------------------------------
// Hashing and seeding

/// FNV-1a, 64 bit. Stable across platforms; used for config hashes and for
/// deriving per-token random vectors.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of indices,
/// e.g. (seed, step, node, playout).
template <typename... Ix>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Ix... path) noexcept {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(path))), ...);
  return h;
}

/// Random source with platform-independent draws. The standard distributions
/// are implementation-defined, so bounded and real draws are done here on top
/// of the (fully specified) mt19937_64 output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  /// Index drawn proportionally to `weights` (non-negative, not all zero).
  std::size_t sample(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Text helpers

std::string to_lower(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
bool is_punctuation(std::string_view token);

/// Joins generalized tokens into display text: punctuation and clitics attach to
/// the previous token; no capitalization is applied.
std::string render_tokens(const std::vector<std::string>& tokens);

/// Same as render_tokens, with the first letter upper-cased.
std::string render_sentence(const std::vector<std::string>& tokens);

}  // namespace e2s
