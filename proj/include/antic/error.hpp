#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace antic {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidShapeError : public Error {
public:
    using Error::Error;
};

class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

/// Zero-variance or otherwise degenerate statistical input.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite activation produced inside the network.
class NumericInstabilityError : public Error {
public:
    NumericInstabilityError(const std::string& what, std::size_t layer)
        : Error(what), layer_(layer) {}
    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// An update chain is missing the record for `timestep`.
class ChainGapError : public Error {
public:
    ChainGapError(const std::string& what, std::uint64_t timestep)
        : Error(what), timestep_(timestep) {}
    std::uint64_t timestep() const noexcept { return timestep_; }

private:
    std::uint64_t timestep_;
};

}  // namespace antic
