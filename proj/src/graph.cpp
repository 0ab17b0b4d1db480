#include "pg/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace pg {

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Graph::check_arg(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("graph: argument node " + std::to_string(id) +
                                    " does not exist");
}

int Graph::add_input(const std::string& name, std::vector<int> shape) {
    // extent -1 in the leading dim means "any batch size"
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (shape[d] <= 0 && !(d == 0 && shape[d] == -1))
            throw std::invalid_argument("input placeholder extent must be positive");
    }
    Node n;
    n.kind = OpKind::Input;
    n.name = name;
    n.shape = std::move(shape);
    return push(std::move(n));
}

int Graph::add_param(const std::string& name, Tensor value) {
    if (param_ids_.count(name))
        throw std::invalid_argument("graph: duplicate parameter '" + name + "'");
    Node n;
    n.kind = OpKind::Param;
    n.name = name;
    const int id = push(std::move(n));
    param_ids_[name] = id;
    param_names_.push_back(name);
    param_values_[id] = std::move(value);
    return id;
}

int Graph::add_activation(int x, ActivationRule rule, std::string probe) {
    check_arg(x);
    Node n;
    n.kind = OpKind::Activation;
    n.args = {x};
    n.rule = rule;
    n.probe = std::move(probe);
    return push(std::move(n));
}

int Graph::add_conv2d(int x, int kernel, std::optional<int> bias, Conv2dAttrs attrs,
                      std::string probe) {
    check_arg(x);
    check_arg(kernel);
    Node n;
    n.kind = OpKind::Conv2d;
    n.args = {x, kernel};
    if (bias) {
        check_arg(*bias);
        n.args.push_back(*bias);
        n.has_bias = true;
    }
    n.conv = attrs;
    n.probe = std::move(probe);
    return push(std::move(n));
}

int Graph::add_batchnorm(int x, int gamma, int beta, BatchNormAttrs attrs,
                         std::string probe) {
    check_arg(x);
    check_arg(gamma);
    check_arg(beta);
    if (node(gamma).kind != OpKind::Param || node(beta).kind != OpKind::Param)
        throw std::invalid_argument("graph: batchnorm gamma/beta must be Param nodes");
    if (attrs.eps <= 0.0) throw std::invalid_argument("batchnorm: eps must be > 0");
    if (attrs.momentum < 0.0 || attrs.momentum > 1.0)
        throw std::invalid_argument("batchnorm: momentum must be in [0,1]");
    const int channels = param_values_.at(gamma).extent(0);
    Node n;
    n.kind = OpKind::BatchNorm;
    n.args = {x, gamma, beta};
    n.bn = attrs;
    n.probe = std::move(probe);
    const int id = push(std::move(n));
    bn_states_[id] = BnRunningState{Tensor::zeros({channels}), Tensor::ones({channels})};
    return id;
}

int Graph::add_dense(int x, int weight, std::optional<int> bias, std::string probe) {
    check_arg(x);
    check_arg(weight);
    Node n;
    n.kind = OpKind::Dense;
    n.args = {x, weight};
    if (bias) {
        check_arg(*bias);
        n.args.push_back(*bias);
        n.has_bias = true;
    }
    n.probe = std::move(probe);
    return push(std::move(n));
}

int Graph::add_maxpool2d(int x, int size) {
    check_arg(x);
    Node n;
    n.kind = OpKind::MaxPool2d;
    n.args = {x};
    n.pool_size = size;
    return push(std::move(n));
}

int Graph::add_global_avg_pool(int x) {
    check_arg(x);
    Node n;
    n.kind = OpKind::GlobalAvgPool;
    n.args = {x};
    return push(std::move(n));
}

int Graph::add_add(int a, int b) {
    check_arg(a);
    check_arg(b);
    Node n;
    n.kind = OpKind::Add;
    n.args = {a, b};
    return push(std::move(n));
}

int Graph::add_mul(int a, int b) {
    check_arg(a);
    check_arg(b);
    Node n;
    n.kind = OpKind::Mul;
    n.args = {a, b};
    return push(std::move(n));
}

int Graph::add_scale(int x, double scalar) {
    check_arg(x);
    Node n;
    n.kind = OpKind::Scale;
    n.args = {x};
    n.scalar = scalar;
    return push(std::move(n));
}

int Graph::add_reshape(int x, std::vector<int> shape) {
    check_arg(x);
    shape_numel(shape);
    Node n;
    n.kind = OpKind::Reshape;
    n.args = {x};
    n.shape = std::move(shape);
    return push(std::move(n));
}

int Graph::add_flatten(int x) {
    check_arg(x);
    Node n;
    n.kind = OpKind::Flatten;
    n.args = {x};
    return push(std::move(n));
}

int Graph::add_reduce_sum(int x) {
    check_arg(x);
    Node n;
    n.kind = OpKind::ReduceSum;
    n.args = {x};
    return push(std::move(n));
}

int Graph::add_select(int x, int flat_index) {
    check_arg(x);
    Node n;
    n.kind = OpKind::Select;
    n.args = {x};
    n.index = flat_index;
    return push(std::move(n));
}

int Graph::add_softmax_ce(int logits, const std::string& labels_key) {
    check_arg(logits);
    Node n;
    n.kind = OpKind::SoftmaxCE;
    n.args = {logits};
    n.name = labels_key;
    return push(std::move(n));
}

void Graph::set_output(int node) {
    check_arg(node);
    output_ = node;
}

int Graph::output() const {
    if (output_ < 0) throw std::logic_error("graph: no output node designated");
    return output_;
}

void Graph::set_all_activation_rules(const ActivationRule& rule) {
    for (Node& n : nodes_)
        if (n.kind == OpKind::Activation) n.rule = rule;
}

Tensor& Graph::param(const std::string& name) {
    const auto it = param_ids_.find(name);
    if (it == param_ids_.end())
        throw std::invalid_argument("graph: unknown parameter '" + name + "'");
    return param_values_.at(it->second);
}

const Tensor& Graph::param(const std::string& name) const {
    const auto it = param_ids_.find(name);
    if (it == param_ids_.end())
        throw std::invalid_argument("graph: unknown parameter '" + name + "'");
    return param_values_.at(it->second);
}

std::size_t Graph::total_param_count() const {
    std::size_t n = 0;
    for (const auto& [id, t] : param_values_) n += t.numel();
    return n;
}

int Graph::node_by_probe(const std::string& probe) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].probe == probe && !probe.empty()) return static_cast<int>(i);
    throw std::invalid_argument("graph: no node with probe label '" + probe + "'");
}

std::vector<int> Graph::nodes_of_kind(OpKind kind) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == kind) out.push_back(static_cast<int>(i));
    return out;
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

namespace {

void accumulate(Tensor& slot, const Tensor& delta) {
    if (slot.empty()) {
        slot = delta;
    } else {
        slot = add(slot, delta);
    }
}

Tensor uniform_grad_seed(const std::vector<int>& shape, double v) {
    return Tensor::full(shape, v);
}

} // namespace

double forward(Graph& graph, const Bindings& bindings, TapeState& tape,
               const ForwardOptions& opts) {
    const auto& nodes = graph.nodes();
    const int out_id = graph.output();
    const std::size_t n = nodes.size();

    tape.value.assign(n, Tensor());
    tape.grad.assign(n, Tensor());
    tape.bn_cache.assign(n, BnForwardCache());
    tape.pool_cache.assign(n, MaxPoolCache());
    tape.ce_cache.assign(n, CrossEntropyCache());
    tape.ce_labels.assign(n, {});
    tape.forward_done = false;
    tape.trained_mode = opts.training;

    for (std::size_t i = 0; i < n; ++i) {
        const Node& nd = nodes[i];
        switch (nd.kind) {
        case OpKind::Input: {
            const auto it = bindings.tensors.find(nd.name);
            if (it == bindings.tensors.end())
                throw std::invalid_argument("forward: unbound input '" + nd.name + "'");
            const auto& got = it->second.shape();
            bool ok = got.size() == nd.shape.size();
            for (std::size_t d = 0; ok && d < got.size(); ++d)
                ok = nd.shape[d] == -1 || got[d] == nd.shape[d];
            if (!ok)
                throw std::invalid_argument(
                    "forward: input '" + nd.name + "' has shape " + shape_str(got) +
                    ", placeholder expects " + shape_str(nd.shape));
            tape.value[i] = it->second;
            break;
        }
        case OpKind::Param:
            tape.value[i] = graph.param(nd.name);
            break;
        case OpKind::Activation:
            tape.value[i] = activation_forward(tape.value[nd.args[0]], nd.rule);
            break;
        case OpKind::Conv2d: {
            const Tensor* bias = nd.has_bias ? &tape.value[nd.args[2]] : nullptr;
            tape.value[i] =
                conv2d_forward(tape.value[nd.args[0]], tape.value[nd.args[1]], bias, nd.conv);
            break;
        }
        case OpKind::BatchNorm: {
            const Tensor& x = tape.value[nd.args[0]];
            const Tensor& gamma = tape.value[nd.args[1]];
            const Tensor& beta = tape.value[nd.args[2]];
            if (opts.training) {
                tape.bn_cache[i] = batchnorm_forward_train(x, gamma, beta, nd.bn.eps);
                tape.value[i] = tape.bn_cache[i].y;
                // running <- (1 - momentum) * running + momentum * batch
                BnRunningState& st = graph.bn_state(static_cast<int>(i));
                const std::size_t m = x.numel() / static_cast<std::size_t>(x.extent(1));
                const double unbias =
                    static_cast<double>(m) / static_cast<double>(m - 1);
                for (std::size_t c = 0; c < st.mean.numel(); ++c) {
                    st.mean[c] = (1.0 - nd.bn.momentum) * st.mean[c] +
                                 nd.bn.momentum * tape.bn_cache[i].batch_mean[c];
                    st.var[c] = (1.0 - nd.bn.momentum) * st.var[c] +
                                nd.bn.momentum * unbias * tape.bn_cache[i].batch_var[c];
                }
            } else {
                const BnRunningState& st = graph.bn_state(static_cast<int>(i));
                tape.value[i] =
                    batchnorm_forward_infer(x, gamma, beta, st.mean, st.var, nd.bn.eps);
            }
            break;
        }
        case OpKind::Dense: {
            const Tensor* bias = nd.has_bias ? &tape.value[nd.args[2]] : nullptr;
            tape.value[i] =
                dense_forward(tape.value[nd.args[0]], tape.value[nd.args[1]], bias);
            break;
        }
        case OpKind::MaxPool2d:
            tape.pool_cache[i] = maxpool2d_forward(tape.value[nd.args[0]], nd.pool_size);
            tape.value[i] = tape.pool_cache[i].y;
            break;
        case OpKind::GlobalAvgPool:
            tape.value[i] = global_avg_pool_forward(tape.value[nd.args[0]]);
            break;
        case OpKind::Add:
            tape.value[i] = add(tape.value[nd.args[0]], tape.value[nd.args[1]]);
            break;
        case OpKind::Mul:
            tape.value[i] = mul(tape.value[nd.args[0]], tape.value[nd.args[1]]);
            break;
        case OpKind::Scale:
            tape.value[i] = scale(tape.value[nd.args[0]], nd.scalar);
            break;
        case OpKind::Reshape: {
            const Tensor& x = tape.value[nd.args[0]];
            if (shape_numel(nd.shape) != x.numel())
                throw std::invalid_argument("reshape: element count mismatch");
            tape.value[i] = Tensor::from_data(
                nd.shape, std::vector<double>(x.data(), x.data() + x.numel()));
            break;
        }
        case OpKind::Flatten: {
            const Tensor& x = tape.value[nd.args[0]];
            if (x.ndim() < 1) throw std::invalid_argument("flatten: scalar input");
            const int d0 = x.extent(0);
            const int rest = static_cast<int>(x.numel()) / d0;
            tape.value[i] = Tensor::from_data(
                {d0, rest}, std::vector<double>(x.data(), x.data() + x.numel()));
            break;
        }
        case OpKind::ReduceSum:
            tape.value[i] = Tensor::from_data({1}, {reduce_sum(tape.value[nd.args[0]])});
            break;
        case OpKind::Select: {
            const Tensor& x = tape.value[nd.args[0]];
            if (nd.index < 0 || static_cast<std::size_t>(nd.index) >= x.numel())
                throw std::invalid_argument("select: index out of range");
            tape.value[i] =
                Tensor::from_data({1}, {x[static_cast<std::size_t>(nd.index)]});
            break;
        }
        case OpKind::SoftmaxCE: {
            const auto it = bindings.labels.find(nd.name);
            if (it == bindings.labels.end())
                throw std::invalid_argument("forward: unbound labels '" + nd.name + "'");
            tape.ce_labels[i] = it->second;
            tape.ce_cache[i] = softmax_cross_entropy(tape.value[nd.args[0]], it->second);
            tape.value[i] = Tensor::from_data({1}, {tape.ce_cache[i].loss});
            break;
        }
        }
    }

    const Tensor& out = tape.value[static_cast<std::size_t>(out_id)];
    if (out.numel() != 1)
        throw std::logic_error("forward: output node is not scalar, shape " +
                               shape_str(out.shape()));
    tape.output = out[0];
    tape.forward_done = true;
    return tape.output;
}

void backward(const Graph& graph, TapeState& tape, double seed) {
    if (!tape.forward_done)
        throw std::logic_error("backward: no completed forward pass on this tape");
    const auto& nodes = graph.nodes();
    const int out_id = graph.output();

    for (Tensor& g : tape.grad) g = Tensor();
    tape.grad[static_cast<std::size_t>(out_id)] = uniform_grad_seed({1}, seed);

    for (int i = out_id; i >= 0; --i) {
        const Node& nd = nodes[static_cast<std::size_t>(i)];
        const Tensor& up = tape.grad[static_cast<std::size_t>(i)];
        if (up.empty()) continue; // no gradient flow through this node
        switch (nd.kind) {
        case OpKind::Input:
        case OpKind::Param:
            break;
        case OpKind::Activation:
            accumulate(tape.grad[nd.args[0]],
                       activation_backward(tape.value[nd.args[0]], up, nd.rule));
            break;
        case OpKind::Conv2d: {
            Conv2dGrads g = conv2d_backward(tape.value[nd.args[0]], tape.value[nd.args[1]],
                                            nd.conv, up, nd.has_bias);
            accumulate(tape.grad[nd.args[0]], g.dx);
            accumulate(tape.grad[nd.args[1]], g.dkernel);
            if (nd.has_bias) accumulate(tape.grad[nd.args[2]], g.dbias);
            break;
        }
        case OpKind::BatchNorm: {
            BnGrads g;
            if (tape.trained_mode) {
                g = batchnorm_backward_train(tape.value[nd.args[0]],
                                             tape.bn_cache[static_cast<std::size_t>(i)],
                                             tape.value[nd.args[1]], up);
            } else {
                const BnRunningState& st = graph.bn_state(i);
                g = batchnorm_backward_infer(tape.value[nd.args[1]], st.mean, st.var,
                                             nd.bn.eps, tape.value[nd.args[0]], up);
            }
            accumulate(tape.grad[nd.args[0]], g.dx);
            accumulate(tape.grad[nd.args[1]], g.dgamma);
            accumulate(tape.grad[nd.args[2]], g.dbeta);
            break;
        }
        case OpKind::Dense: {
            DenseGrads g = dense_backward(tape.value[nd.args[0]], tape.value[nd.args[1]],
                                          up, nd.has_bias);
            accumulate(tape.grad[nd.args[0]], g.dx);
            accumulate(tape.grad[nd.args[1]], g.dweight);
            if (nd.has_bias) accumulate(tape.grad[nd.args[2]], g.dbias);
            break;
        }
        case OpKind::MaxPool2d:
            accumulate(tape.grad[nd.args[0]],
                       maxpool2d_backward(tape.value[nd.args[0]].shape(),
                                          tape.pool_cache[static_cast<std::size_t>(i)], up));
            break;
        case OpKind::GlobalAvgPool:
            accumulate(tape.grad[nd.args[0]],
                       global_avg_pool_backward(tape.value[nd.args[0]].shape(), up));
            break;
        case OpKind::Add:
            accumulate(tape.grad[nd.args[0]], up);
            accumulate(tape.grad[nd.args[1]], up);
            break;
        case OpKind::Mul:
            accumulate(tape.grad[nd.args[0]], mul(up, tape.value[nd.args[1]]));
            accumulate(tape.grad[nd.args[1]], mul(up, tape.value[nd.args[0]]));
            break;
        case OpKind::Scale:
            accumulate(tape.grad[nd.args[0]], scale(up, nd.scalar));
            break;
        case OpKind::Reshape:
        case OpKind::Flatten: {
            const Tensor& x = tape.value[nd.args[0]];
            accumulate(tape.grad[nd.args[0]],
                       Tensor::from_data(x.shape(), std::vector<double>(
                                                        up.data(), up.data() + up.numel())));
            break;
        }
        case OpKind::ReduceSum:
            accumulate(tape.grad[nd.args[0]],
                       uniform_grad_seed(tape.value[nd.args[0]].shape(), up[0]));
            break;
        case OpKind::Select: {
            Tensor d = Tensor::zeros(tape.value[nd.args[0]].shape());
            d[static_cast<std::size_t>(nd.index)] = up[0];
            accumulate(tape.grad[nd.args[0]], d);
            break;
        }
        case OpKind::SoftmaxCE:
            accumulate(tape.grad[nd.args[0]],
                       softmax_cross_entropy_backward(
                           tape.ce_cache[static_cast<std::size_t>(i)],
                           tape.ce_labels[static_cast<std::size_t>(i)], up[0]));
            break;
        }
    }
}

Tensor gradient_of(const Graph& graph, const TapeState& tape,
                   const std::string& name) {
    for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
        const Node& nd = graph.nodes()[i];
        if ((nd.kind == OpKind::Input || nd.kind == OpKind::Param) && nd.name == name) {
            if (tape.grad[i].empty()) return Tensor::zeros(tape.value[i].shape());
            return tape.grad[i];
        }
    }
    throw std::invalid_argument("gradient_of: no input or parameter named '" + name +
                                "'");
}

const Tensor& node_value(const TapeState& tape, int node_id) {
    return tape.value.at(static_cast<std::size_t>(node_id));
}

const Tensor& node_gradient(const TapeState& tape, int node_id) {
    return tape.grad.at(static_cast<std::size_t>(node_id));
}

Tensor finite_difference_grad(Graph& graph, const Bindings& bindings,
                              const std::string& target, double eps,
                              const ForwardOptions& opts) {
    if (eps <= 0.0) throw std::invalid_argument("finite_difference_grad: eps must be > 0");

    // BN running stats are restored afterwards so probing is side-effect free.
    std::unordered_map<int, BnRunningState> saved_bn;
    for (const int id : graph.nodes_of_kind(OpKind::BatchNorm))
        saved_bn[id] = graph.bn_state(id);

    const bool is_param = [&] {
        for (const Node& nd : graph.nodes())
            if (nd.kind == OpKind::Param && nd.name == target) return true;
        for (const Node& nd : graph.nodes())
            if (nd.kind == OpKind::Input && nd.name == target) return false;
        throw std::invalid_argument("finite_difference_grad: unknown target '" +
                                    target + "'");
    }();

    Bindings local = bindings;
    Tensor& subject = is_param ? graph.param(target) : local.tensors.at(target);
    const Tensor original = subject;

    Tensor fd = Tensor::zeros(original.shape());
    TapeState tape;
    for (std::size_t i = 0; i < original.numel(); ++i) {
        subject = original;
        subject[i] = original[i] + eps;
        const double fp = forward(graph, local, tape, opts);
        subject[i] = original[i] - eps;
        const double fm = forward(graph, local, tape, opts);
        fd[i] = (fp - fm) / (2.0 * eps);
    }
    subject = original;

    for (auto& [id, st] : saved_bn) graph.bn_state(id) = std::move(st);
    return fd;
}

} // namespace pg
