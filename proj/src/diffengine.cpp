#include "curveflow/diffengine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curveflow {

// ---------------------------------------------------------------------------
// Matrix

Matrix Matrix::column(std::span<const double> values) {
    Matrix m(values.size(), 1);
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
}

Matrix Matrix::row(std::span<const double> values) {
    Matrix m(1, values.size());
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

// ---------------------------------------------------------------------------
// ParameterSet

void ParameterSet::add(const std::string& name, Matrix value) {
    if (entries_.count(name) != 0) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    if (!value.all_finite()) {
        throw std::invalid_argument("parameter " + name + " has non-finite entries");
    }
    entries_.emplace(name, std::move(value));
}

const Matrix& ParameterSet::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range("unknown parameter: " + name);
    }
    return it->second;
}

Matrix& ParameterSet::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range("unknown parameter: " + name);
    }
    return it->second;
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [name, m] : entries_) {
        n += m.size();
    }
    return n;
}

void ParameterSet::merge(const ParameterSet& other) {
    for (const auto& [name, m] : other.entries_) {
        add(name, m);
    }
}

ParameterSet ParameterSet::subset(std::string_view prefix) const {
    ParameterSet out;
    for (const auto& [name, m] : entries_) {
        if (std::string_view(name).substr(0, prefix.size()) == prefix) {
            out.entries_.emplace(name, m);
        }
    }
    return out;
}

void ParameterSet::assign_from(const ParameterSet& other) {
    for (auto& [name, m] : entries_) {
        auto it = other.entries_.find(name);
        if (it == other.entries_.end()) {
            continue;
        }
        if (!it->second.same_shape(m)) {
            throw ShapeError("shape mismatch assigning parameter " + name);
        }
        m = it->second;
    }
}

bool ParameterSet::congruent(const ParameterSet& other) const {
    if (entries_.size() != other.entries_.size()) {
        return false;
    }
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    for (; a != entries_.end(); ++a, ++b) {
        if (a->first != b->first || !a->second.same_shape(b->second)) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const { return tape_->value_of(id_); }

double Var::item() const {
    const Matrix& v = value();
    if (v.size() != 1) {
        throw ShapeError("item() on non-scalar " + v.shape_string());
    }
    return v[0];
}

bool Var::requires_grad() const { return tape_->needs_grad(id_); }

Var Tape::leaf(Matrix value) {
    nodes_.push_back(Node{"leaf", std::move(value), {}, {}, {}, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{"constant", std::move(value), {}, {}, {}, false});
    return Var(this, nodes_.size() - 1);
}

VarMap Tape::leaves(const ParameterSet& params) {
    VarMap out;
    for (const auto& [name, m] : params) {
        out.emplace(name, leaf(m));
    }
    return out;
}

VarMap Tape::constants(const ParameterSet& params) {
    VarMap out;
    for (const auto& [name, m] : params) {
        out.emplace(name, constant(m));
    }
    return out;
}

Var Tape::record(const char* op, Matrix value, std::vector<std::size_t> parents, BackwardFn backward) {
    if (!value.all_finite()) {
        throw EvaluationError(op, std::string("non-finite value produced by primitive '") + op + "'");
    }
    bool needs = std::any_of(parents.begin(), parents.end(),
                                [this](std::size_t p) { return nodes_[p].requires_grad; });
    nodes_.push_back(Node{op, std::move(value), {}, std::move(parents),
                          needs ? std::move(backward) : BackwardFn{}, needs});
    return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && !n.value.empty()) {
        n.grad = Matrix(n.value.rows(), n.value.cols(), 0.0);
    }
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.tape() != this) {
        throw std::invalid_argument("backward on a variable from another tape");
    }
    if (root.value().size() != 1) {
        throw ShapeError("backward requires a scalar root, got " + root.value().shape_string());
    }
    for (auto& n : nodes_) {
        n.grad = Matrix();
    }
    grad_buffer(root.id())[0] = 1.0;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty() || !n.backward) {
            continue;
        }
        n.backward(*this, i);
    }
}

const Matrix& Tape::grad(Var v) const {
    static const Matrix empty;
    const Matrix& g = nodes_[v.id()].grad;
    return g.empty() ? empty : g;
}

// ---------------------------------------------------------------------------
// kernels

namespace kernels {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    out = Matrix(n, m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* o = out.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a(i, p);
            const double* br = b.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) {
                o[j] += av * br[j];
            }
        }
    }
}

void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* br = b.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a(i, p);
            double* o = out.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) {
                o[j] += av * br[j];
            }
        }
    }
}

void matmul_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ar = a.row_ptr(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* br = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += ar[p] * br[p];
            }
            out(i, j) += acc;
        }
    }
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// primitives

namespace {

enum class Bcast { same, scalar, column };

struct BinaryLayout {
    std::size_t rows, cols;
    Bcast a, b;
};

Bcast classify(const Matrix& x, std::size_t rows, std::size_t cols) {
    if (x.rows() == rows && x.cols() == cols) {
        return Bcast::same;
    }
    if (x.size() == 1) {
        return Bcast::scalar;
    }
    return Bcast::column;
}

BinaryLayout layout(const char* op, const Matrix& a, const Matrix& b) {
    std::size_t rows = std::max(a.rows(), b.rows());
    std::size_t cols = std::max(a.cols(), b.cols());
    auto fits = [&](const Matrix& x) {
        return (x.rows() == rows && x.cols() == cols) || x.size() == 1 ||
               (x.rows() == rows && x.cols() == 1);
    };
    if (!fits(a) || !fits(b)) {
        throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                         b.shape_string());
    }
    return {rows, cols, classify(a, rows, cols), classify(b, rows, cols)};
}

inline std::size_t index(Bcast k, std::size_t r, std::size_t c, std::size_t cols) {
    switch (k) {
        case Bcast::same:
            return r * cols + c;
        case Bcast::scalar:
            return 0;
        case Bcast::column:
            return r;
    }
    return 0;
}

// g reduced onto an operand of broadcast kind `k`, scaled elementwise by `factor` (if given).
void accumulate_reduced(Matrix& target, Bcast k, const Matrix& g, std::size_t cols, const Matrix* factor,
                        Bcast factor_kind, double sign) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double v = g(r, c) * sign;
            if (factor != nullptr) {
                v *= (*factor)[index(factor_kind, r, c, cols)];
            }
            target[index(k, r, c, cols)] += v;
        }
    }
}

Tape& tape_of(Var a, Var b) {
    if (a.tape() != b.tape() || a.tape() == nullptr) {
        throw std::invalid_argument("variables belong to different tapes");
    }
    return *a.tape();
}

template <class F, class DF>
Var unary(const char* op, Var a, F f, DF df_from_xy) {
    Tape& tape = *a.tape();
    const Matrix& x = a.value();
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = f(x[i]);
    }
    const std::size_t ia = a.id();
    return tape.record(op, std::move(y), {ia}, [ia, df_from_xy](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        const Matrix& xv = t.value_of(ia);
        const Matrix& yv = t.value_of(self);
        Matrix& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * df_from_xy(xv[i], yv[i]);
        }
    });
}

Var add_signed(const char* op, Var a, Var b, double sign_b) {
    Tape& tape = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    const BinaryLayout L = layout(op, x, y);
    Matrix out(L.rows, L.cols);
    for (std::size_t r = 0; r < L.rows; ++r) {
        for (std::size_t c = 0; c < L.cols; ++c) {
            out(r, c) = x[index(L.a, r, c, L.cols)] + sign_b * y[index(L.b, r, c, L.cols)];
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(op, std::move(out), {ia, ib}, [ia, ib, L, sign_b](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        if (t.needs_grad(ia)) {
            accumulate_reduced(t.grad_buffer(ia), L.a, g, L.cols, nullptr, Bcast::same, 1.0);
        }
        if (t.needs_grad(ib)) {
            accumulate_reduced(t.grad_buffer(ib), L.b, g, L.cols, nullptr, Bcast::same, sign_b);
        }
    });
}

}  // namespace

Var add(Var a, Var b) { return add_signed("add", a, b, 1.0); }

Var sub(Var a, Var b) { return add_signed("sub", a, b, -1.0); }

Var mul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    const BinaryLayout L = layout("multiply", x, y);
    Matrix out(L.rows, L.cols);
    for (std::size_t r = 0; r < L.rows; ++r) {
        for (std::size_t c = 0; c < L.cols; ++c) {
            out(r, c) = x[index(L.a, r, c, L.cols)] * y[index(L.b, r, c, L.cols)];
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record("multiply", std::move(out), {ia, ib}, [ia, ib, L](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        if (t.needs_grad(ia)) {
            accumulate_reduced(t.grad_buffer(ia), L.a, g, L.cols, &t.value_of(ib), L.b, 1.0);
        }
        if (t.needs_grad(ib)) {
            accumulate_reduced(t.grad_buffer(ib), L.b, g, L.cols, &t.value_of(ia), L.a, 1.0);
        }
    });
}

Var scale(Var a, double factor) {
    return unary("scale", a, [factor](double x) { return factor * x; },
                 [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
    return unary("add", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var matmul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& w = b.value();
    if (x.cols() != w.rows()) {
        throw ShapeError("matmul: inner dimensions differ " + x.shape_string() + " * " + w.shape_string());
    }
    Matrix out;
    kernels::matmul(x, w, out);
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        if (t.needs_grad(ia)) {
            kernels::matmul_a_bt_acc(g, t.value_of(ib), t.grad_buffer(ia));
        }
        if (t.needs_grad(ib)) {
            kernels::matmul_at_b_acc(t.value_of(ia), g, t.grad_buffer(ib));
        }
    });
}

Var affine(Var x, Var weight, Var bias) {
    Tape& tape = tape_of(x, weight);
    tape_of(weight, bias);
    const Matrix& xv = x.value();
    const Matrix& wv = weight.value();
    const Matrix& bv = bias.value();
    if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
        throw ShapeError("affine: incompatible shapes x" + xv.shape_string() + " W" + wv.shape_string() +
                         " b" + bv.shape_string());
    }
    Matrix out;
    kernels::matmul(xv, wv, out);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row_span(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += bv[c];
        }
    }
    const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
    return tape.record("affine", std::move(out), {ix, iw, ib}, [ix, iw, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        if (t.needs_grad(ix)) {
            kernels::matmul_a_bt_acc(g, t.value_of(iw), t.grad_buffer(ix));
        }
        if (t.needs_grad(iw)) {
            kernels::matmul_at_b_acc(t.value_of(ix), g, t.grad_buffer(iw));
        }
        if (t.needs_grad(ib)) {
            Matrix& gb = t.grad_buffer(ib);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < g.cols(); ++c) {
                    gb[c] += g(r, c);
                }
            }
        }
    });
}

Var tanh(Var a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var silu(Var a) {
    return unary("silu", a, [](double x) { return x / (1.0 + std::exp(-x)); },
                 [](double x, double) {
                     const double s = 1.0 / (1.0 + std::exp(-x));
                     return s * (1.0 + x * (1.0 - s));
                 });
}

Var square(Var a) {
    return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
    return unary("sqrt", a, [](double x) { return std::sqrt(x); },
                 [](double, double y) { return 0.5 / y; });
}

Var reciprocal(Var a) {
    return unary("reciprocal", a, [](double x) { return 1.0 / x; },
                 [](double, double y) { return -y * y; });
}

Var sum(Var a) {
    Tape& tape = *a.tape();
    double s = 0.0;
    for (double v : a.value().values()) {
        s += v;
    }
    const std::size_t ia = a.id();
    return tape.record("sum", Matrix::scalar(s), {ia}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0];
        for (double& v : t.grad_buffer(ia).values()) {
            v += g;
        }
    });
}

Var mean(Var a) {
    const std::size_t n = a.value().size();
    if (n == 0) {
        throw ShapeError("mean of an empty matrix");
    }
    Tape& tape = *a.tape();
    double s = 0.0;
    for (double v : a.value().values()) {
        s += v;
    }
    const std::size_t ia = a.id();
    const double inv = 1.0 / static_cast<double>(n);
    return tape.record("mean", Matrix::scalar(s * inv), {ia}, [ia, inv](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0] * inv;
        for (double& v : t.grad_buffer(ia).values()) {
            v += g;
        }
    });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
    const Matrix& x = a.value();
    if (start + count > x.rows()) {
        throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + x.shape_string());
    }
    Matrix out(count, x.cols());
    std::copy_n(x.values().begin() + static_cast<std::ptrdiff_t>(start * x.cols()), count * x.cols(),
                out.values().begin());
    const std::size_t ia = a.id();
    return a.tape()->record("slice_rows", std::move(out), {ia}, [ia, start](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        Matrix& ga = t.grad_buffer(ia);
        const std::size_t offset = start * ga.cols();
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[offset + i] += g[i];
        }
    });
}

Var concat_cols(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    if (x.rows() != y.rows()) {
        throw ShapeError("concat_cols: row counts differ " + x.shape_string() + " " + y.shape_string());
    }
    const std::size_t ca = x.cols(), cb = y.cols();
    Matrix out(x.rows(), ca + cb);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::copy_n(x.row_ptr(r), ca, out.row_ptr(r));
        std::copy_n(y.row_ptr(r), cb, &out(r, ca));
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record("concat_cols", std::move(out), {ia, ib}, [ia, ib, ca, cb](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        if (t.needs_grad(ia)) {
            Matrix& ga = t.grad_buffer(ia);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < ca; ++c) {
                    ga(r, c) += g(r, c);
                }
            }
        }
        if (t.needs_grad(ib)) {
            Matrix& gb = t.grad_buffer(ib);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < cb; ++c) {
                    gb(r, c) += g(r, ca + c);
                }
            }
        }
    });
}

Var apply_unary(std::string_view name, Var a) {
    if (name == "tanh") return tanh(a);
    if (name == "silu") return silu(a);
    if (name == "square") return square(a);
    if (name == "sqrt") return sqrt(a);
    if (name == "reciprocal") return reciprocal(a);
    if (name == "neg") return neg(a);
    throw UnsupportedPrimitiveError(name);
}

// ---------------------------------------------------------------------------
// evaluation

Evaluation evaluate_with_gradients(const LossFn& loss, const ParameterSet& params) {
    Tape tape;
    VarMap vars = tape.leaves(params);
    Var out = loss(tape, vars);
    Evaluation result;
    result.value = out.item();
    tape.backward(out);
    for (const auto& [name, var] : vars) {
        const Matrix& g = tape.grad(var);
        Matrix grad = g.empty() ? Matrix(var.rows(), var.cols(), 0.0) : g;
        if (!grad.all_finite()) {
            throw EvaluationError("backward", "non-finite gradient for parameter " + name);
        }
        result.gradients.add(name, std::move(grad));
    }
    return result;
}

double evaluate(const LossFn& loss, const ParameterSet& params) {
    Tape tape;
    VarMap vars = tape.constants(params);
    return loss(tape, vars).item();
}

GradientMap finite_difference_gradient(const LossFn& loss, const ParameterSet& params, double step) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("finite difference step must be positive");
    }
    ParameterSet probe = params;
    GradientMap out;
    for (const auto& [name, m] : params) {
        Matrix g(m.rows(), m.cols());
        Matrix& entry = probe.at(name);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double orig = entry[i];
            entry[i] = orig + step;
            const double fp = evaluate(loss, probe);
            entry[i] = orig - step;
            const double fm = evaluate(loss, probe);
            entry[i] = orig;
            g[i] = (fp - fm) / (2.0 * step);
        }
        out.add(name, std::move(g));
    }
    return out;
}

GradientComparison compare_gradients(const GradientMap& computed, const GradientMap& reference, double floor) {
    if (!computed.congruent(reference)) {
        throw ShapeError("gradient maps are not congruent");
    }
    GradientComparison cmp;
    for (const auto& [name, g] : computed) {
        const Matrix& r = reference.at(name);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double denom = std::max({std::abs(g[i]), std::abs(r[i]), floor});
            const double err = std::abs(g[i] - r[i]) / denom;
            if (err > cmp.max_relative_error || cmp.worst_parameter.empty()) {
                if (err >= cmp.max_relative_error) {
                    cmp.max_relative_error = err;
                    cmp.worst_parameter = name;
                    cmp.worst_index = i;
                }
            }
        }
    }
    return cmp;
}

}  // namespace curveflow
