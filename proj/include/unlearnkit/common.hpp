#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unlearnkit {

using Matrix = Eigen::MatrixXd;  // rows = samples
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------- errors

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid forget/teacher/experiment specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Mismatched dimensions between probability vectors, batches or models.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values handed to a numeric kernel.
class NumericError : public Error {
 public:
  using Error::Error;
};

// NaN loss during an optimization loop.
class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

// Empty views, malformed arguments.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Degenerate membership-attack fit.
class AttackError : public Error {
 public:
  using Error::Error;
};

// Missing mandatory metric when assembling a report.
class ReportError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------- hashing & seeds

// FNV-1a, 64-bit. Used for artifact manifests and frozen-parameter checks.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stable master-seed fan-out: the sub-seed for a named stage is a pure
// function of (master_seed, tag). Tags in use: "train", "gold", "unlearn",
// "attack", "sampling", "teacher", "amnesiac", "dataset", "test-split".
inline uint64_t derive_seed(uint64_t master_seed, std::string_view tag) {
  return splitmix64(master_seed ^ fnv1a64(tag));
}

inline uint64_t hash_matrix(const Matrix& m, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(m.data(), sizeof(double) * static_cast<size_t>(m.size()), h);
}

std::string hex64(uint64_t v);

}  // namespace unlearnkit
