#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsadv/common.hpp"

namespace tsadv {

/// Dense row-major tensor of doubles. Rank 1 (vectors) and rank 2
/// (matrices) cover everything the forecasting models need; a scalar is
/// shape {1}. Values are dimensionless — datasets are normalized to [0,1]
/// before they reach any model.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, double fill = 0.0);
    Tensor(std::vector<std::size_t> s, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor from_vector(std::vector<double> v);
    static Tensor from_matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return rank() < 2 ? 1 : shape[1]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    /// Extract the single element of a scalar tensor.
    double value() const;

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool finite() const { return all_finite(data); }
};

std::string shape_str(const std::vector<std::size_t>& shape);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;
};

/// Gradients of one scalar loss with respect to tape leaves, keyed by leaf.
/// Leaves that requested gradients but do not influence the loss map to
/// zero tensors of their own shape.
class GradientMap {
public:
    const Tensor& at(Var v) const;
    bool contains(Var v) const { return grads_.count(v.id) != 0; }

private:
    friend class Tape;
    std::unordered_map<std::int32_t, Tensor> grads_;
};

/// Reverse-mode autodiff tape. One tape per forward pass; nodes are
/// appended in evaluation order, so parents always precede children and
/// the graph is acyclic by construction. A Tape is single-threaded;
/// independent tapes over shared read-only tensors may run concurrently.
///
/// Broadcasting is deliberately limited to scalar-with-tensor in the
/// elementwise ops; anything else is a shape error.
class Tape {
public:
    /// Register an input tensor. Values must be finite.
    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(double v) { return leaf(Tensor::scalar(v)); }

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // elementwise
    /// matrix*matrix, matrix*vector, or vector*vector (inner product).
    Var matmul(Var a, Var b);
    Var tanh(Var a);
    Var sigmoid(Var a);
    /// Multiply by a plain constant (not a tape node).
    Var scale(Var a, double c);
    Var neg(Var a) { return scale(a, -1.0); }
    /// Row r of a rank-2 tensor, as a vector.
    Var row(Var a, std::size_t r);
    /// Rank-2 tensor flattened to a vector (row-major).
    Var flatten(Var a);
    /// Mean squared error; result is a scalar node.
    Var mse_loss(Var pred, Var target);

    const Tensor& value(Var v) const;

    /// Accumulate d(loss)/d(leaf) for every gradient-requiring leaf.
    /// `loss` must be scalar. The tape is read-only during the sweep, so
    /// backward may be called again and yields bit-identical results.
    GradientMap backward(Var loss) const;

    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        leaf, add, sub, mul, matmul, tanh, sigmoid, scale, row, flatten, mse
    };

    struct Node {
        Op op = Op::leaf;
        std::int32_t a = -1;
        std::int32_t b = -1;
        std::size_t aux = 0;    // row index
        double factor = 0.0;    // scale constant
        bool requires_grad = false;
        Tensor value;
    };

    Var push(Node n);
    const Node& node(Var v) const;
    static void check_same_tape(Var a, Var b);

    std::vector<Node> nodes_;
};

// Operator sugar so model code reads like the math.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }

} // namespace tsadv
