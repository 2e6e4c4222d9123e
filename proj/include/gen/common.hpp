#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gen {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major matrix; used wherever a flat row-major layout is part of a contract.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

// Error kinds map one-to-one onto CLI exit codes (see tools/gen.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or bad arguments (exit 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing, unreadable or malformed input data (exit 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite value during training or evaluation (exit 4).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Unreadable, corrupted or version-mismatched checkpoint (exit 5).
class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Shape or precondition violation inside the library.
class ShapeError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ShapeError(what);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

/// splitmix64 finalizer; derives independent sub-seeds from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Sub-seed streams used by the trainer.
enum class SeedStream : std::uint64_t {
    feature_map = 1,
    generator_init = 2,
    shuffling = 3,
    noise = 4,
    dataset = 5,
    evaluation = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream s) {
    return mix_seed(seed, static_cast<std::uint64_t>(s));
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace gen
