#include "tsadv/tensor.hpp"

#include <cmath>
#include <numeric>

namespace tsadv {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_product(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
    if (shape_product(shape) != data.size())
        throw ShapeError("tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
}

Tensor Tensor::from_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

Tensor Tensor::from_matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
}

double Tensor::value() const {
    if (size() != 1)
        throw ShapeError("expected scalar tensor, got shape " + shape_str(shape));
    return data[0];
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

const Tensor& GradientMap::at(Var v) const {
    auto it = grads_.find(v.id);
    if (it == grads_.end())
        throw std::invalid_argument("no gradient recorded for node " + std::to_string(v.id) +
                                    " (leaf without requires_grad?)");
    return it->second;
}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw std::invalid_argument("Var does not belong to this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::check_same_tape(Var a, Var b) {
    if (a.tape != b.tape)
        throw std::invalid_argument("operands come from different tapes");
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    if (!value.finite())
        throw NumericError("leaf tensor contains non-finite values");
    Node n;
    n.op = Op::leaf;
    n.requires_grad = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
}

namespace {

enum class EwKind { add, sub, mul };

double ew_apply(EwKind k, double x, double y) {
    switch (k) {
    case EwKind::add: return x + y;
    case EwKind::sub: return x - y;
    case EwKind::mul: return x * y;
    }
    return 0.0;
}

} // namespace

// Shared forward for add/sub/mul with scalar-with-tensor broadcast only.
static Tensor ew_forward(EwKind k, const Tensor& a, const Tensor& b, const char* name) {
    if (a.same_shape(b)) {
        Tensor out(a.shape);
        for (std::size_t i = 0; i < a.size(); ++i)
            out.data[i] = ew_apply(k, a.data[i], b.data[i]);
        return out;
    }
    if (a.size() == 1) {
        Tensor out(b.shape);
        for (std::size_t i = 0; i < b.size(); ++i)
            out.data[i] = ew_apply(k, a.data[0], b.data[i]);
        return out;
    }
    if (b.size() == 1) {
        Tensor out(a.shape);
        for (std::size_t i = 0; i < a.size(); ++i)
            out.data[i] = ew_apply(k, a.data[i], b.data[0]);
        return out;
    }
    throw ShapeError(std::string(name) + ": shapes " + shape_str(a.shape) + " and " +
                     shape_str(b.shape) + " do not conform");
}

Var Tape::add(Var a, Var b) {
    check_same_tape(a, b);
    Node n;
    n.op = Op::add;
    n.a = a.id;
    n.b = b.id;
    n.value = ew_forward(EwKind::add, node(a).value, node(b).value, "add");
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    check_same_tape(a, b);
    Node n;
    n.op = Op::sub;
    n.a = a.id;
    n.b = b.id;
    n.value = ew_forward(EwKind::sub, node(a).value, node(b).value, "sub");
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    check_same_tape(a, b);
    Node n;
    n.op = Op::mul;
    n.a = a.id;
    n.b = b.id;
    n.value = ew_forward(EwKind::mul, node(a).value, node(b).value, "mul");
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& A = node(a).value;
    const Tensor& B = node(b).value;
    Node n;
    n.op = Op::matmul;
    n.a = a.id;
    n.b = b.id;
    if (A.rank() == 2 && B.rank() == 2) {
        if (A.shape[1] != B.shape[0])
            throw ShapeError("matmul: inner dims of " + shape_str(A.shape) + " and " +
                             shape_str(B.shape) + " differ");
        Tensor out({A.shape[0], B.shape[1]});
        for (std::size_t i = 0; i < A.shape[0]; ++i)
            for (std::size_t k = 0; k < A.shape[1]; ++k) {
                double aik = A.at(i, k);
                for (std::size_t j = 0; j < B.shape[1]; ++j)
                    out.at(i, j) += aik * B.at(k, j);
            }
        n.value = std::move(out);
    } else if (A.rank() == 2 && B.rank() == 1) {
        if (A.shape[1] != B.shape[0])
            throw ShapeError("matmul: inner dims of " + shape_str(A.shape) + " and " +
                             shape_str(B.shape) + " differ");
        Tensor out({A.shape[0]});
        for (std::size_t i = 0; i < A.shape[0]; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < A.shape[1]; ++k) s += A.at(i, k) * B.data[k];
            out.data[i] = s;
        }
        n.value = std::move(out);
    } else if (A.rank() == 1 && B.rank() == 1) {
        if (A.shape[0] != B.shape[0])
            throw ShapeError("matmul: vector lengths " + shape_str(A.shape) + " and " +
                             shape_str(B.shape) + " differ");
        double s = 0.0;
        for (std::size_t k = 0; k < A.size(); ++k) s += A.data[k] * B.data[k];
        n.value = Tensor::scalar(s);
    } else {
        throw ShapeError("matmul: unsupported ranks " + shape_str(A.shape) + " * " +
                         shape_str(B.shape));
    }
    return push(std::move(n));
}

Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::tanh;
    n.a = a.id;
    const Tensor& x = node(a).value;
    n.value = Tensor(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) n.value.data[i] = std::tanh(x.data[i]);
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    Node n;
    n.op = Op::sigmoid;
    n.a = a.id;
    const Tensor& x = node(a).value;
    n.value = Tensor(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) n.value.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
    return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
    Node n;
    n.op = Op::scale;
    n.a = a.id;
    n.factor = c;
    const Tensor& x = node(a).value;
    n.value = Tensor(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) n.value.data[i] = c * x.data[i];
    return push(std::move(n));
}

Var Tape::row(Var a, std::size_t r) {
    const Tensor& x = node(a).value;
    if (x.rank() != 2)
        throw ShapeError("row: expected rank-2 tensor, got " + shape_str(x.shape));
    if (r >= x.shape[0])
        throw ShapeError("row: index " + std::to_string(r) + " out of range for " +
                         shape_str(x.shape));
    Node n;
    n.op = Op::row;
    n.a = a.id;
    n.aux = r;
    n.value = Tensor({x.shape[1]});
    for (std::size_t j = 0; j < x.shape[1]; ++j) n.value.data[j] = x.at(r, j);
    return push(std::move(n));
}

Var Tape::flatten(Var a) {
    const Tensor& x = node(a).value;
    Node n;
    n.op = Op::flatten;
    n.a = a.id;
    n.value = Tensor({x.size()}, x.data);
    return push(std::move(n));
}

Var Tape::mse_loss(Var pred, Var target) {
    check_same_tape(pred, target);
    const Tensor& p = node(pred).value;
    const Tensor& t = node(target).value;
    if (!p.same_shape(t))
        throw ShapeError("mse_loss: shapes " + shape_str(p.shape) + " and " +
                         shape_str(t.shape) + " differ");
    Node n;
    n.op = Op::mse;
    n.a = pred.id;
    n.b = target.id;
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p.data[i] - t.data[i];
        s += d * d;
    }
    n.value = Tensor::scalar(s / static_cast<double>(p.size()));
    return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

GradientMap Tape::backward(Var loss) const {
    const Node& ln = node(loss);
    if (ln.value.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(ln.value.shape));

    std::vector<Tensor> grads(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) grads[i] = Tensor(nodes_[i].value.shape);
    grads[static_cast<std::size_t>(loss.id)].data[0] = 1.0;

    // Parents precede children, so one reverse sweep suffices.
    for (std::size_t idx = static_cast<std::size_t>(loss.id) + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        const Tensor& g = grads[idx];
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::add:
        case Op::sub: {
            double sign_b = n.op == Op::add ? 1.0 : -1.0;
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            Tensor& ga = grads[n.a];
            Tensor& gb = grads[n.b];
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data[av.size() == 1 ? 0 : i] += g.data[i];
                gb.data[bv.size() == 1 ? 0 : i] += sign_b * g.data[i];
            }
            break;
        }
        case Op::mul: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            Tensor& ga = grads[n.a];
            Tensor& gb = grads[n.b];
            for (std::size_t i = 0; i < g.size(); ++i) {
                double a_i = av.data[av.size() == 1 ? 0 : i];
                double b_i = bv.data[bv.size() == 1 ? 0 : i];
                ga.data[av.size() == 1 ? 0 : i] += g.data[i] * b_i;
                gb.data[bv.size() == 1 ? 0 : i] += g.data[i] * a_i;
            }
            break;
        }
        case Op::matmul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            Tensor& gA = grads[n.a];
            Tensor& gB = grads[n.b];
            if (A.rank() == 2 && B.rank() == 2) {
                // dA = G * B^T, dB = A^T * G
                for (std::size_t i = 0; i < A.shape[0]; ++i)
                    for (std::size_t j = 0; j < B.shape[1]; ++j) {
                        double gij = g.data[i * B.shape[1] + j];
                        for (std::size_t k = 0; k < A.shape[1]; ++k) {
                            gA.at(i, k) += gij * B.at(k, j);
                            gB.at(k, j) += A.at(i, k) * gij;
                        }
                    }
            } else if (A.rank() == 2 && B.rank() == 1) {
                for (std::size_t i = 0; i < A.shape[0]; ++i)
                    for (std::size_t k = 0; k < A.shape[1]; ++k) {
                        gA.at(i, k) += g.data[i] * B.data[k];
                        gB.data[k] += A.at(i, k) * g.data[i];
                    }
            } else { // vector . vector
                for (std::size_t k = 0; k < A.size(); ++k) {
                    gA.data[k] += g.data[0] * B.data[k];
                    gB.data[k] += g.data[0] * A.data[k];
                }
            }
            break;
        }
        case Op::tanh: {
            Tensor& ga = grads[n.a];
            for (std::size_t i = 0; i < g.size(); ++i) {
                double y = n.value.data[i];
                ga.data[i] += g.data[i] * (1.0 - y * y);
            }
            break;
        }
        case Op::sigmoid: {
            Tensor& ga = grads[n.a];
            for (std::size_t i = 0; i < g.size(); ++i) {
                double y = n.value.data[i];
                ga.data[i] += g.data[i] * y * (1.0 - y);
            }
            break;
        }
        case Op::scale: {
            Tensor& ga = grads[n.a];
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += n.factor * g.data[i];
            break;
        }
        case Op::row: {
            Tensor& ga = grads[n.a];
            std::size_t cols = nodes_[n.a].value.shape[1];
            for (std::size_t j = 0; j < g.size(); ++j) ga.data[n.aux * cols + j] += g.data[j];
            break;
        }
        case Op::flatten: {
            Tensor& ga = grads[n.a];
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
            break;
        }
        case Op::mse: {
            const Tensor& p = nodes_[n.a].value;
            const Tensor& t = nodes_[n.b].value;
            Tensor& gp = grads[n.a];
            Tensor& gt = grads[n.b];
            double inv_n = 1.0 / static_cast<double>(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                double d = 2.0 * (p.data[i] - t.data[i]) * inv_n * g.data[0];
                gp.data[i] += d;
                gt.data[i] -= d;
            }
            break;
        }
        }
    }

    GradientMap out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].op == Op::leaf && nodes_[i].requires_grad)
            out.grads_.emplace(static_cast<std::int32_t>(i), std::move(grads[i]));
    return out;
}

} // namespace tsadv
