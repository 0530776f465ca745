#include "epf/autodiff.hpp"

#include <algorithm>

#include "epf/error.hpp"

namespace epf::ad {

Var Tape::push(Matrix value, std::function<void(Node&)> fn, bool needs_grad) {
    auto n = std::make_unique<Node>();
    n->value = std::move(value);
    n->push = std::move(fn);
    n->needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_of(Var v) {
    Node& n = *nodes_[v.id];
    if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
    return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr, false); }

Var Tape::dense(Var x, const double* weights, const double* bias, Eigen::Index in, Eigen::Index out,
                double* weight_grads, double* bias_grads) {
    return dense(std::vector<Var>{x}, weights, bias, in, out, weight_grads, bias_grads);
}

Var Tape::dense(const std::vector<Var>& parts, const double* weights, const double* bias, Eigen::Index in,
                Eigen::Index out, double* weight_grads, double* bias_grads) {
    const Eigen::Map<const Matrix> W(weights, in, out);
    const Eigen::Map<const Eigen::VectorXd> b(bias, out);
    Eigen::Index width = 0;
    for (Var p : parts) width += value(p).cols();
    if (width != in) throw Error("dense: input width mismatch");
    Matrix y(value(parts.front()).rows(), out);
    y.rowwise() = b.transpose();
    bool needs_grad = weight_grads != nullptr || bias_grads != nullptr;
    Eigen::Index off = 0;
    for (Var p : parts) {
        const Matrix& xv = value(p);
        if (xv.rows() != y.rows()) throw Error("dense: row mismatch");
        y.noalias() += xv * W.middleRows(off, xv.cols());
        off += xv.cols();
        needs_grad = needs_grad || needs(p);
    }
    return push(
        std::move(y),
        [this, parts, weights, in, out, weight_grads, bias_grads](Node& self) {
            const Eigen::Map<const Matrix> Wc(weights, in, out);
            if (bias_grads) {
                MapVector gb(bias_grads, out);
                gb += self.grad.colwise().sum().transpose();
            }
            Eigen::Index o = 0;
            for (Var p : parts) {
                const Eigen::Index w = value(p).cols();
                if (weight_grads) {
                    MapMatrix gW(weight_grads, in, out);
                    gW.middleRows(o, w).noalias() += value(p).transpose() * self.grad;
                }
                if (needs(p)) grad_of(p).noalias() += self.grad * Wc.middleRows(o, w).transpose();
                o += w;
            }
        },
        needs_grad);
}

Var Tape::relu(Var x) {
    Matrix y = value(x).cwiseMax(0.0);
    return push(
        std::move(y),
        [this, x](Node& self) { grad_of(x).array() += (value(x).array() > 0.0).select(self.grad.array(), 0.0); },
        needs(x));
}

Var Tape::mask(Var x, Matrix m) {
    Matrix y = value(x).cwiseProduct(m);
    return push(
        std::move(y), [this, x, m = std::move(m)](Node& self) { grad_of(x).array() += self.grad.array() * m.array(); },
        needs(x));
}

Var Tape::linear(Var x, const Matrix& a) {
    Matrix y = value(x) * a;
    return push(
        std::move(y), [this, x, &a](Node& self) { grad_of(x).noalias() += self.grad * a.transpose(); }, needs(x));
}

Var Tape::max_pool(Var x, Eigen::Index kernel) {
    const Matrix& xv = value(x);
    const Eigen::Index n = (xv.cols() + kernel - 1) / kernel;
    Matrix y(xv.rows(), n);
    Eigen::MatrixXi arg(xv.rows(), n);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            const Eigen::Index lo = c * kernel, hi = std::min(xv.cols(), lo + kernel);
            Eigen::Index best = lo;
            for (Eigen::Index k = lo + 1; k < hi; ++k)
                if (xv(r, k) > xv(r, best)) best = k;
            y(r, c) = xv(r, best);
            arg(r, c) = static_cast<int>(best);
        }
    }
    return push(
        std::move(y),
        [this, x, arg = std::move(arg)](Node& self) {
            Matrix& g = grad_of(x);
            for (Eigen::Index r = 0; r < arg.rows(); ++r)
                for (Eigen::Index c = 0; c < arg.cols(); ++c) g(r, arg(r, c)) += self.grad(r, c);
        },
        needs(x));
}

Var Tape::cols(Var x, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > value(x).cols()) throw Error("cols: range outside input");
    Matrix y = value(x).middleCols(start, count);
    return push(
        std::move(y), [this, x, start, count](Node& self) { grad_of(x).middleCols(start, count) += self.grad; },
        needs(x));
}

Var Tape::concat(const std::vector<Var>& parts) {
    Eigen::Index rows = value(parts.front()).rows(), width = 0;
    for (Var p : parts) {
        if (value(p).rows() != rows) throw Error("concat: row mismatch");
        width += value(p).cols();
    }
    Matrix y(rows, width);
    Eigen::Index at = 0;
    for (Var p : parts) {
        y.middleCols(at, value(p).cols()) = value(p);
        at += value(p).cols();
    }
    bool needs_grad = false;
    for (Var p : parts) needs_grad = needs_grad || needs(p);
    return push(
        std::move(y),
        [this, parts](Node& self) {
            Eigen::Index off = 0;
            for (Var p : parts) {
                const Eigen::Index w = value(p).cols();
                if (needs(p)) grad_of(p) += self.grad.middleCols(off, w);
                off += w;
            }
        },
        needs_grad);
}

Var Tape::add(Var a, Var b) {
    Matrix y = value(a) + value(b);
    return push(
        std::move(y),
        [this, a, b](Node& self) {
            if (needs(a)) grad_of(a) += self.grad;
            if (needs(b)) grad_of(b) += self.grad;
        },
        needs(a) || needs(b));
}

Var Tape::sub(Var a, Var b) {
    Matrix y = value(a) - value(b);
    return push(
        std::move(y),
        [this, a, b](Node& self) {
            if (needs(a)) grad_of(a) += self.grad;
            if (needs(b)) grad_of(b) -= self.grad;
        },
        needs(a) || needs(b));
}

Var Tape::mae(Var pred, const Matrix& target) {
    const Matrix diff = value(pred) - target;
    Matrix y(1, 1);
    y(0, 0) = diff.cwiseAbs().mean();
    const double n = static_cast<double>(diff.size());
    return push(
        std::move(y),
        [this, pred, diff, n](Node& self) { grad_of(pred).array() += self.grad(0, 0) * diff.array().sign() / n; },
        needs(pred));
}

Var Tape::weighted_sum(Var x, const Matrix& w) {
    Matrix y(1, 1);
    y(0, 0) = value(x).cwiseProduct(w).sum();
    return push(
        std::move(y), [this, x, w](Node& self) { grad_of(x) += self.grad(0, 0) * w; }, needs(x));
}

void Tape::backward(Var out) {
    for (auto& n : nodes_) n->grad.resize(0, 0);
    grad_of(out).setOnes();
    for (std::size_t i = out.id + 1; i-- > 0;) {
        Node& n = *nodes_[i];
        if (n.push && n.needs_grad && n.grad.size() != 0) n.push(n);
    }
}

}  // namespace epf::ad
