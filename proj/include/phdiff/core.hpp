//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_CORE_HPP_
#define PHDIFF_CORE_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace phdiff {

enum class ErrorKind {
  kMalformedRecord,
  kUnknownElement,
  kUnknownBondOrder,
  kInvalidRange,
  kEmptySelection,
  kTooFewFeatures,
  kDegenerateHypothesis,
  kEmptyInput,
  kInvalidT,
  kInvalidNu,
  kTimestepOutOfRange,
  kZeroNormalizer,
  kShapeMismatch,
  kMaskOutOfRange,
  kEmptyMask,
  kNonFiniteActivation,
  kUnrecordedOperation,
  kEmptyDataset,
  kDivergedLoss,
  kTooFewAtoms,
  kCheckpointMismatch,
  kEmptyBatch,
  kTooFewMolecules,
  kInvalidArgument,
  kIo,
};

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::kMalformedRecord: return "MalformedRecord";
  case ErrorKind::kUnknownElement: return "UnknownElement";
  case ErrorKind::kUnknownBondOrder: return "UnknownBondOrder";
  case ErrorKind::kInvalidRange: return "InvalidRange";
  case ErrorKind::kEmptySelection: return "EmptySelection";
  case ErrorKind::kTooFewFeatures: return "TooFewFeatures";
  case ErrorKind::kDegenerateHypothesis: return "DegenerateHypothesis";
  case ErrorKind::kEmptyInput: return "EmptyInput";
  case ErrorKind::kInvalidT: return "InvalidT";
  case ErrorKind::kInvalidNu: return "InvalidNu";
  case ErrorKind::kTimestepOutOfRange: return "TimestepOutOfRange";
  case ErrorKind::kZeroNormalizer: return "ZeroNormalizer";
  case ErrorKind::kShapeMismatch: return "ShapeMismatch";
  case ErrorKind::kMaskOutOfRange: return "MaskOutOfRange";
  case ErrorKind::kEmptyMask: return "EmptyMask";
  case ErrorKind::kNonFiniteActivation: return "NonFiniteActivation";
  case ErrorKind::kUnrecordedOperation: return "UnrecordedOperation";
  case ErrorKind::kEmptyDataset: return "EmptyDataset";
  case ErrorKind::kDivergedLoss: return "DivergedLoss";
  case ErrorKind::kTooFewAtoms: return "TooFewAtoms";
  case ErrorKind::kCheckpointMismatch: return "CheckpointMismatch";
  case ErrorKind::kEmptyBatch: return "EmptyBatch";
  case ErrorKind::kTooFewMolecules: return "TooFewMolecules";
  case ErrorKind::kInvalidArgument: return "InvalidArgument";
  case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

// All library failures surface as this type; `kind()` is the stable
// discriminator, the message is for humans.
class Error: public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
        kind_(kind) { }

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Parse failures carry the record and line they were raised at (both
// zero-based record, one-based line).
class ParseError: public Error {
public:
  ParseError(ErrorKind kind, int record, int line, const std::string &what)
      : Error(kind, "record " + std::to_string(record) + ", line "
                        + std::to_string(line) + ": " + what),
        record_(record), line_(line) { }

  int record() const noexcept { return record_; }
  int line() const noexcept { return line_; }

private:
  int record_;
  int line_;
};

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed,
                                     std::uint64_t value) noexcept {
  return splitmix64(seed ^ (splitmix64(value) + 0x9e3779b97f4a7c15ULL
                            + (seed << 6) + (seed >> 2)));
}

// Independent, reproducible stream for (seed, stream id).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(hash_combine(splitmix64(seed), stream));
}

// Uniform integer in [lo, hi]; avoids the implementation-defined
// std::uniform_int_distribution so streams are portable.
inline std::int64_t uniform_int(Rng &rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0)
    return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

inline double uniform_real(Rng &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; one draw per call so streams stay aligned.
inline double standard_normal(Rng &rng) {
  double u1;
  do {
    u1 = uniform_real(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform_real(rng);
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Runs f(0) .. f(count - 1) on up to `threads` workers. Work items are
// claimed in index order; the first exception is rethrown after joining.
template <class F>
void parallel_for(int count, int threads, F &&f) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int k = 0; k < count; ++k)
      f(k);
    return;
  }
  std::atomic<int> next { 0 };
  std::exception_ptr failure;
  std::mutex lock;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int k; (k = next.fetch_add(1)) < count;) {
        try {
          f(k);
        } catch (...) {
          std::lock_guard<std::mutex> guard(lock);
          if (!failure)
            failure = std::current_exception();
        }
      }
    });
  for (std::thread &th: pool)
    th.join();
  if (failure)
    std::rethrow_exception(failure);
}

inline int default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace phdiff

#endif  // PHDIFF_CORE_HPP_
