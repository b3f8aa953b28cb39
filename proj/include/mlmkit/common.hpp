// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mlmkit {

inline constexpr const char* kVersion = "0.1.0";

static_assert(std::endian::native == std::endian::little,
              "checkpoint and tokenizer files are little-endian; big-endian hosts unsupported");

/// Error taxonomy shared by the C++ core and the C API status codes.
enum class ErrorKind {
    usage,     // unknown subcommand / bad invocation
    config,    // invalid or missing configuration
    data,      // bad input data (parse errors, empty datasets)
    training,  // runtime failure inside a training loop
    io,        // file system problems
    contract,  // precondition violated by a caller
    numeric,   // NaN/Inf or undefined metric
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorKind::usage, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};
struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorKind::data, m) {}
};
struct TrainingError : Error {
    explicit TrainingError(const std::string& m) : Error(ErrorKind::training, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& m) : Error(ErrorKind::contract, m) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ErrorKind::numeric, m) {}
};

/// Deterministic random generator. Wraps std::mt19937_64 (fully specified by
/// the standard) and draws floats, normals and bounded integers through our
/// own code, so streams are identical on every platform for a given seed.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

    uint64_t next() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform();
    /// Uniform float in [lo, hi).
    float uniform(float lo, float hi);
    /// Standard normal via Box-Muller; one fresh pair per call, no cached spare.
    double normal();
    float normal(float mean, float stddev);
    /// Normal resampled until within `cutoff` standard deviations of the mean.
    float truncated_normal(float mean, float stddev, double cutoff = 2.0);
    /// Uniform integer in [0, n). Rejection sampled; requires n > 0.
    int64_t below(int64_t n);

    /// Derive an independent generator for a named substream, e.g. fork(epoch).
    Rng fork(uint64_t stream) const;

    template <typename V>
    void shuffle(V& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = below(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

  private:
    std::mt19937_64 gen_;
    uint64_t seed_ = 0;
};

}  // namespace mlmkit
