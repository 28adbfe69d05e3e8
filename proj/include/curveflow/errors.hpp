#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace curveflow {

/// Non-finite intermediate value. `primitive()` names the operation that produced it.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(std::string primitive, const std::string& what)
        : std::runtime_error(what), primitive_(std::move(primitive)) {}
    const std::string& primitive() const noexcept { return primitive_; }

private:
    std::string primitive_;
};

class UnsupportedPrimitiveError : public std::invalid_argument {
public:
    explicit UnsupportedPrimitiveError(std::string_view name)
        : std::invalid_argument("unsupported primitive: " + std::string(name)) {}
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration or arguments. `field()` is empty when no single field is at fault.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what, std::string field = {})
        : std::invalid_argument(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The speed of a trajectory vanished, so its curvature is undefined.
class DegenerateTrajectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite value appeared during an iterative process.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace curveflow
