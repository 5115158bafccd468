#include "lfsr/autograd.hpp"

#include "lfsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace lfsr {
namespace ag {
namespace {

using NodePtr = std::shared_ptr<Node>;

Var make(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad =
        std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward = std::move(backward);
    }
    return Var(std::move(node));
}

void push(const NodePtr& parent, const Tensor& g) {
    if (parent->requires_grad) parent->accumulate(g);
}

const Tensor& in(const Node& n, std::size_t i) { return n.parents[i]->value; }

} // namespace

void Node::accumulate(const Tensor& g) {
    if (grad.empty()) {
        grad = g;
        return;
    }
    require(grad.shape() == g.shape(), "gradient shape mismatch during accumulation");
    for (Index i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

double Var::item() const {
    require(node_ != nullptr, "empty variable");
    if (!std::isnan(node_->scalar)) return node_->scalar;
    require(node_->value.size() == 1, "item() requires a scalar");
    return node_->value[0];
}

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var conv3d(const Var& x, const Var& kernel, const Var& bias) {
    return make(ops::conv3d_same(x.value(), kernel.value(), bias.value()), {x.node(), kernel.node(), bias.node()},
                [](Node& self) {
                    auto g = ops::conv3d_same_backward(in(self, 0), in(self, 1), self.grad,
                                                       self.parents[0]->requires_grad);
                    push(self.parents[0], g.input);
                    push(self.parents[1], g.kernel);
                    push(self.parents[2], g.bias);
                });
}

Var conv2d(const Var& x, const Var& kernel, const Var& bias) {
    return make(ops::conv2d_same(x.value(), kernel.value(), bias.value()), {x.node(), kernel.node(), bias.node()},
                [](Node& self) {
                    auto g = ops::conv2d_same_backward(in(self, 0), in(self, 1), self.grad,
                                                       self.parents[0]->requires_grad);
                    push(self.parents[0], g.input);
                    push(self.parents[1], g.kernel);
                    push(self.parents[2], g.bias);
                });
}

Var prelu(const Var& x, const Var& slope) {
    return make(ops::prelu(x.value(), slope.value()), {x.node(), slope.node()}, [](Node& self) {
        auto g = ops::prelu_backward(in(self, 0), in(self, 1), self.grad);
        push(self.parents[0], g.input);
        push(self.parents[1], g.slope);
    });
}

Var sigmoid(const Var& x) {
    return make(ops::sigmoid(x.value()), {x.node()},
                [](Node& self) { push(self.parents[0], ops::sigmoid_backward(self.value, self.grad)); });
}

Var relu(const Var& x) {
    return make(ops::relu(x.value()), {x.node()},
                [](Node& self) { push(self.parents[0], ops::relu_backward(in(self, 0), self.grad)); });
}

Var pool(const Var& x, std::vector<Index> axes, ops::PoolMode mode) {
    Tensor y = ops::pool_over_axes(x.value(), axes, mode);
    return make(std::move(y), {x.node()}, [axes = std::move(axes), mode](Node& self) {
        push(self.parents[0], ops::pool_over_axes_backward(in(self, 0), axes, mode, self.grad));
    });
}

Var dense(const Var& x, const Var& weight, const Var& bias) {
    return make(ops::dense(x.value(), weight.value(), bias.value()), {x.node(), weight.node(), bias.node()},
                [](Node& self) {
                    auto g = ops::dense_backward(in(self, 0), in(self, 1), self.grad);
                    push(self.parents[0], g.input);
                    push(self.parents[1], g.weight);
                    push(self.parents[2], g.bias);
                });
}

Var concat(std::span<const Var> parts, Index axis) {
    std::vector<Tensor> values;
    std::vector<NodePtr> nodes;
    std::vector<Index> extents;
    values.reserve(parts.size());
    for (const Var& p : parts) {
        values.push_back(p.value());
        nodes.push_back(p.node());
    }
    Tensor y = ops::concat(values, axis);
    const Index real_axis = axis < 0 ? axis + y.rank() : axis;
    for (const Var& p : parts) extents.push_back(p.value().dim(real_axis));
    return make(std::move(y), std::move(nodes), [extents = std::move(extents), real_axis](Node& self) {
        auto pieces = ops::split(self.grad, extents, real_axis);
        for (std::size_t i = 0; i < pieces.size(); ++i) push(self.parents[i], pieces[i]);
    });
}

Var broadcast_mul(const Var& x, const Var& w) {
    return make(ops::broadcast_mul(x.value(), w.value()), {x.node(), w.node()}, [](Node& self) {
        auto g = ops::broadcast_mul_backward(in(self, 0), in(self, 1), self.grad);
        push(self.parents[0], g.input);
        push(self.parents[1], g.weight);
    });
}

Var add(const Var& x, const Var& y) {
    return make(ops::add(x.value(), y.value()), {x.node(), y.node()}, [](Node& self) {
        push(self.parents[0], self.grad);
        push(self.parents[1], self.grad);
    });
}

Var reshape(const Var& x, Shape shape) {
    return make(x.value().reshaped(std::move(shape)), {x.node()},
                [](Node& self) { push(self.parents[0], self.grad.reshaped(self.parents[0]->value.shape())); });
}

Var l1_loss(const Var& pred, const Tensor& target) {
    const double loss = ops::l1_loss(pred.value(), target);
    Var out = make(Tensor::scalar(static_cast<float>(loss)), {pred.node()}, [target](Node& self) {
        push(self.parents[0], ops::l1_loss_backward(in(self, 0), target, self.grad[0]));
    });
    out.node()->scalar = loss;
    return out;
}

Var sum(const Var& x) {
    const double total = ops::sum(x.value());
    Var out = make(Tensor::scalar(static_cast<float>(total)), {x.node()}, [](Node& self) {
        push(self.parents[0], Tensor(self.parents[0]->value.shape(), self.grad[0]));
    });
    out.node()->scalar = total;
    return out;
}

Var dot(const Var& x, const Tensor& weights) {
    require(x.shape() == weights.shape(), "dot: shape mismatch");
    double total = 0.0;
    for (Index i = 0; i < weights.size(); ++i) total += static_cast<double>(x.value()[i]) * weights[i];
    Var out = make(Tensor::scalar(static_cast<float>(total)), {x.node()}, [weights](Node& self) {
        push(self.parents[0], ops::scale(weights, self.grad[0]));
    });
    out.node()->scalar = total;
    return out;
}

} // namespace ag

GradTape::GradTape(const ParamStore& params, bool record) : params_(&params), record_(record) {}

ag::Var GradTape::param(const std::string& name) {
    if (auto it = leaves_.find(name); it != leaves_.end()) return it->second;
    auto node = std::make_shared<ag::Node>();
    node->value = params_->get(name);
    node->requires_grad = record_;
    node->param_name = name;
    ag::Var leaf(std::move(node));
    leaves_.emplace(name, leaf);
    return leaf;
}

GradMap GradTape::backward(const ag::Var& loss) const {
    require(record_, "backward requires a recording tape");
    require(loss.node() != nullptr && loss.value().size() == 1, "backward requires a scalar loss");

    GradMap grads;
    for (const auto& e : params_->entries()) grads.emplace(e.name, Tensor(e.value.shape()));
    if (!loss.requires_grad()) return grads;

    // Iterative post-order DFS gives a topological order.
    std::vector<ag::Node*> order;
    std::unordered_set<ag::Node*> visited;
    std::vector<std::pair<ag::Node*, std::size_t>> stack{{loss.node().get(), 0}};
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            ag::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (ag::Node* n : order) n->grad = Tensor();
    loss.node()->grad = Tensor(loss.shape(), 1.0f);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        ag::Node* n = *it;
        if (n->grad.empty()) continue;
        if (n->backward) n->backward(*n);
        if (!n->param_name.empty()) grads[n->param_name] = n->grad;
    }
    // Release graph-held gradients so the tape can be reused.
    for (ag::Node* n : order) {
        if (n->param_name.empty()) n->grad = Tensor();
    }
    return grads;
}

GradMap backward(const GradTape& tape, const ag::Var& loss) { return tape.backward(loss); }

} // namespace lfsr
