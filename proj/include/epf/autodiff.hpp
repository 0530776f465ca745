#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace epf::ad {

using Matrix = Eigen::MatrixXd;
using MapMatrix = Eigen::Map<Eigen::MatrixXd>;
using MapVector = Eigen::Map<Eigen::VectorXd>;

/// Handle to a node on a tape.
struct Var {
    std::size_t id = 0;
};

/// Minimal reverse-mode tape over batched dense matrices (rows = batch).
///
/// Nodes are appended in evaluation order; `backward` walks them in reverse
/// and each node pushes its adjoint to its inputs. Parameters live outside
/// the tape in a flat vector; `dense` accumulates their gradients directly
/// into the caller's flat gradient vector.
class Tape {
public:
    Var constant(Matrix value);

    /// y = x W + 1 b^T, with W (in x out) and b (out) viewing `params` and
    /// gradients accumulated into the matching slices of `grads`.
    Var dense(Var x, const double* weights, const double* bias, Eigen::Index in, Eigen::Index out,
              double* weight_grads, double* bias_grads);
    /// Same as above with the input given as column blocks [parts...]; W's
    /// rows are split accordingly and constant blocks receive no adjoint.
    Var dense(const std::vector<Var>& parts, const double* weights, const double* bias, Eigen::Index in,
              Eigen::Index out, double* weight_grads, double* bias_grads);
    Var relu(Var x);
    /// Element-wise multiply by a fixed mask (already scaled).
    Var mask(Var x, Matrix m);
    /// y = x A for a fixed matrix A (pooling, interpolation).
    Var linear(Var x, const Matrix& a);
    /// Max over consecutive column windows of width `kernel` (last may be partial).
    Var max_pool(Var x, Eigen::Index kernel);
    Var cols(Var x, Eigen::Index start, Eigen::Index count);
    Var concat(const std::vector<Var>& parts);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    /// Scalar mean absolute error against a constant target; subgradient 0 at ties.
    Var mae(Var pred, const Matrix& target);
    /// Scalar sum of x .* w for a constant weight matrix.
    Var weighted_sum(Var x, const Matrix& w);

    [[nodiscard]] const Matrix& value(Var v) const { return nodes_[v.id]->value; }
    /// Seeds d(out)/d(out) = 1 and propagates to every node and parameter.
    void backward(Var out);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Node&)> push;  // propagate this node's grad to its inputs
        bool needs_grad = false;
    };
    Var push(Matrix value, std::function<void(Node&)> fn, bool needs_grad);
    [[nodiscard]] bool needs(Var v) const { return nodes_[v.id]->needs_grad; }
    Matrix& grad_of(Var v);

    std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace epf::ad
