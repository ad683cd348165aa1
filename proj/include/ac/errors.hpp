#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

// Error taxonomy shared by all modules. The CLI maps these onto its
// exit-code contract (2 = config/argument, 3 = I/O, 4 = numeric failure).
namespace ac {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatchError : std::runtime_error {
    explicit DimensionMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroRowError : std::runtime_error {
    explicit ZeroRowError(std::size_t row)
        : std::runtime_error("row " + std::to_string(row) + " has near-zero norm"), row(row) {}
    std::size_t row;
};

struct RankDeficientError : std::runtime_error {
    explicit RankDeficientError(std::size_t row)
        : std::runtime_error("rank deficiency detected at row " + std::to_string(row)), row(row) {}
    std::size_t row;
};

struct BatchTooSmallError : std::runtime_error {
    explicit BatchTooSmallError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LabelOutOfRangeError : std::runtime_error {
    LabelOutOfRangeError(std::size_t label, std::size_t num_classes)
        : std::runtime_error("label " + std::to_string(label) + " out of range for " +
                             std::to_string(num_classes) + " classes"),
          label(label), num_classes(num_classes) {}
    std::size_t label;
    std::size_t num_classes;
};

struct DegenerateDimensionError : std::runtime_error {
    explicit DegenerateDimensionError(std::size_t dim)
        : std::runtime_error("dimension " + std::to_string(dim) +
                             " has near-zero batch standard deviation"),
          dim(dim) {}
    std::size_t dim;
};

struct MissingClassError : std::runtime_error {
    explicit MissingClassError(std::size_t cls)
        : std::runtime_error("class " + std::to_string(cls) + " absent from training split"),
          cls(cls) {}
    std::size_t cls;
};

struct TooManyClassesError : std::runtime_error {
    TooManyClassesError(std::size_t k, std::size_t d)
        : std::runtime_error("cannot place " + std::to_string(k) +
                             " orthonormal anchors in dimension " + std::to_string(d)),
          k(k), d(d) {}
    std::size_t k;
    std::size_t d;
};

struct DirectionSamplingFailedError : std::runtime_error {
    explicit DirectionSamplingFailedError(std::size_t attempts)
        : std::runtime_error("failed to sample well-separated cluster directions after " +
                             std::to_string(attempts) + " attempts") {}
};

struct NonFiniteLossError : std::runtime_error {
    explicit NonFiniteLossError(long long epoch)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch)), epoch(epoch) {}
    long long epoch;
};

struct UnsupportedLossError : std::runtime_error {
    explicit UnsupportedLossError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ac
