#pragma once

// Reverse-mode differentiation over matrix-valued nodes.
//
// A Tape records every primitive applied during one evaluation of a scalar
// loss. Values are computed eagerly; backward() walks the record in reverse
// and accumulates adjoints into every node that depends on a leaf.
// All arithmetic is double precision and every primitive checks that its
// output is finite.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curveflow/errors.hpp"

namespace curveflow {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix scalar(double v) { return Matrix(1, 1, v); }
    static Matrix column(std::span<const double> values);
    static Matrix row(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* row_ptr(std::size_t r) noexcept { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const noexcept { return data_.data() + r * cols_; }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Named trainable arrays. Names are unique and iteration order is sorted by name.
class ParameterSet {
public:
    void add(const std::string& name, Matrix value);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const Matrix& at(const std::string& name) const;
    Matrix& at(const std::string& name);
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t scalar_count() const noexcept;
    bool empty() const noexcept { return entries_.empty(); }

    /// Copies every entry of `other` into this set; names must not collide.
    void merge(const ParameterSet& other);
    /// Entries whose name starts with `prefix`.
    ParameterSet subset(std::string_view prefix) const;
    /// Overwrites entries that exist in both sets, checking shapes.
    void assign_from(const ParameterSet& other);
    bool congruent(const ParameterSet& other) const;

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::map<std::string, Matrix> entries_;
};

/// Same names and shapes as the ParameterSet it was computed for.
using GradientMap = ParameterSet;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    double item() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    bool requires_grad() const;

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

using VarMap = std::map<std::string, Var>;

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value);
    Var constant(Matrix value);
    Var constant(double v) { return constant(Matrix::scalar(v)); }

    /// Registers every parameter as a differentiable leaf.
    VarMap leaves(const ParameterSet& params);
    /// Registers every parameter as a constant (forward-only evaluation).
    VarMap constants(const ParameterSet& params);

    /// Seeds d(root)/d(root) = 1 and propagates adjoints. Root must be 1x1.
    void backward(Var root);
    const Matrix& grad(Var v) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }

    // Internal interface used by the primitives.
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;
    Var record(const char* op, Matrix value, std::vector<std::size_t> parents, BackwardFn backward);
    const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
    const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
    Matrix& grad_buffer(std::size_t id);
    bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

private:
    struct Node {
        const char* op;
        Matrix value;
        Matrix grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad;
    };
    std::vector<Node> nodes_;
};

// Primitives. Binary elementwise ops accept equal shapes, a 1x1 operand
// (scalar broadcast), or an (n x 1) column against an (n x m) matrix
// (per-row scaling). No other broadcasting is supported.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);
Var matmul(Var a, Var b);
/// x W + 1 b, with b a (1 x cols(W)) row.
Var affine(Var x, Var weight, Var bias);
Var tanh(Var a);
Var silu(Var a);
Var square(Var a);
Var sqrt(Var a);
Var reciprocal(Var a);
Var sum(Var a);
Var mean(Var a);
/// Rows [start, start + count).
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var concat_cols(Var a, Var b);

/// Elementwise unary primitive by name; throws UnsupportedPrimitiveError for unknown names.
Var apply_unary(std::string_view name, Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return neg(a); }

// Plain kernels, shared with forward-only code paths.
namespace kernels {
/// out = a * b (row-major, fixed summation order per output row).
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a^T * b
void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T
void matmul_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& out);
}  // namespace kernels

using LossFn = std::function<Var(Tape&, const VarMap&)>;

struct Evaluation {
    double value = 0.0;
    GradientMap gradients;
};

/// Evaluates `loss` at `params` and returns the value with its reverse-mode gradient.
Evaluation evaluate_with_gradients(const LossFn& loss, const ParameterSet& params);

/// Forward-only evaluation.
double evaluate(const LossFn& loss, const ParameterSet& params);

/// Central differences (f(p + h) - f(p - h)) / 2h, one coordinate at a time.
GradientMap finite_difference_gradient(const LossFn& loss, const ParameterSet& params, double step);

struct GradientComparison {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
};

/// Elementwise |g - r| / max(|g|, |r|, floor), maximised over all entries.
GradientComparison compare_gradients(const GradientMap& computed, const GradientMap& reference, double floor);

}  // namespace curveflow
