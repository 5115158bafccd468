#pragma once

#include "lfsr/ops.hpp"
#include "lfsr/params.hpp"
#include "lfsr/tensor.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lfsr {

namespace ag {

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    /// Set for scalar reductions; holds the double-precision result.
    double scalar = std::numeric_limits<double>::quiet_NaN();
    std::string param_name;
    std::vector<std::shared_ptr<Node>> parents;
    /// Reads this node's grad and accumulates into the parents.
    std::function<void(Node&)> backward;

    void accumulate(const Tensor& g);
};

/// Handle to a value in the computation graph. Nodes only keep their parents
/// alive when some input requires a gradient, so no-grad evaluation frees
/// intermediate activations as soon as they go out of scope.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    /// Scalar result in double precision when available.
    double item() const;

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

Var constant(Tensor value);

Var conv3d(const Var& x, const Var& kernel, const Var& bias);
Var conv2d(const Var& x, const Var& kernel, const Var& bias);
Var prelu(const Var& x, const Var& slope);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var pool(const Var& x, std::vector<Index> axes, ops::PoolMode mode);
Var dense(const Var& x, const Var& weight, const Var& bias);
Var concat(std::span<const Var> parts, Index axis);
Var broadcast_mul(const Var& x, const Var& w);
Var add(const Var& x, const Var& y);
Var reshape(const Var& x, Shape shape);
/// Mean absolute error against a fixed target.
Var l1_loss(const Var& pred, const Tensor& target);
Var sum(const Var& x);
/// sum(x * weights) against a fixed tensor; used to probe Jacobians.
Var dot(const Var& x, const Tensor& weights);

} // namespace ag

/// Binds a ParamStore to graph leaves and runs reverse-mode differentiation.
///
/// With `record` false every parameter leaf is a constant and nothing is
/// retained for a backward pass.
class GradTape {
public:
    GradTape(const ParamStore& params, bool record);

    bool recording() const noexcept { return record_; }
    const ParamStore& params() const noexcept { return *params_; }

    /// Leaf for a named parameter; repeated calls return the same node.
    ag::Var param(const std::string& name);

    /// Gradient of a scalar loss for every parameter; unreached ones are zero.
    GradMap backward(const ag::Var& loss) const;

private:
    const ParamStore* params_;
    bool record_;
    std::unordered_map<std::string, ag::Var> leaves_;
};

GradMap backward(const GradTape& tape, const ag::Var& loss);

} // namespace lfsr
