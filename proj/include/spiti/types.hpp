#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spiti {

using VarId = int;
using ActionId = int;

/// A state is a vector of value indices, one per variable.
using State = std::vector<int>;

/// A discrete distribution over the values of one variable, indexed by value.
using Distribution = std::vector<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tree or inconsistent structural data.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Problem-file parsing failure (bad syntax, missing fields).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Semantic validation failure (e.g. a CPD leaf that does not sum to 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_delta)
      : Error(what), last_delta(last_delta) {}
  double last_delta;
};

/// State-space enumeration was requested beyond the supported cap.
class EnumerationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Variable table: per-variable domain sizes plus human-readable names.
struct DomainSpec {
  std::vector<std::string> names;
  std::vector<int> sizes;

  int num_vars() const { return static_cast<int>(sizes.size()); }

  /// Total number of states; throws EnumerationError past 2^62.
  long long state_count() const {
    long long n = 1;
    for (int s : sizes) {
      if (n > (1ll << 62) / s) throw EnumerationError("state space too large to enumerate");
      n *= s;
    }
    return n;
  }

  /// Mixed-radix index with variable 0 least significant.
  long long state_index(std::span<const int> s) const {
    long long idx = 0;
    for (int i = num_vars() - 1; i >= 0; --i) idx = idx * sizes[i] + s[i];
    return idx;
  }

  State index_state(long long idx) const {
    State s(sizes.size());
    for (int i = 0; i < num_vars(); ++i) {
      s[i] = static_cast<int>(idx % sizes[i]);
      idx /= sizes[i];
    }
    return s;
  }

  static DomainSpec binary(int n, const std::string& prefix = "x") {
    DomainSpec d;
    for (int i = 0; i < n; ++i) {
      d.names.push_back(prefix + std::to_string(i + 1));
      d.sizes.push_back(2);
    }
    return d;
  }
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1). Bypasses std::uniform_real_distribution so that
/// seeded streams are identical across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline int uniform_int(Rng& rng, int n) {
  return static_cast<int>(static_cast<double>(n) * uniform01(rng));
}

/// Draw an index from a discrete distribution.
inline int sample_index(const Distribution& probs, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace spiti
