#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pg/layers.hpp"
#include "pg/tensor.hpp"

namespace pg {

enum class OpKind {
    Input,          // named placeholder
    Param,          // named trainable tensor
    Activation,     // parameterized rectifier
    Conv2d,         // args: x, kernel[, bias]
    BatchNorm,      // args: x, gamma, beta
    Dense,          // args: x, weight[, bias]
    MaxPool2d,      // args: x
    GlobalAvgPool,  // args: x
    Add,            // args: a, b (equal shapes)
    Mul,            // args: a, b (elementwise, equal shapes)
    Scale,          // args: x; y = scalar * x
    Reshape,        // args: x; fixed target shape
    Flatten,        // args: x; (d0, ...) -> (d0, prod(...))
    ReduceSum,      // args: x -> scalar
    Select,         // args: x -> scalar, one flat element
    SoftmaxCE,      // args: logits; labels come from the bindings
};

struct Node {
    OpKind kind{};
    std::vector<int> args;
    std::string name;  // binding name (Input/Param) or label key (SoftmaxCE)
    std::string probe; // optional label for profiling hooks

    ActivationRule rule{};
    Conv2dAttrs conv{};
    BatchNormAttrs bn{};
    int pool_size = 2;
    double scalar = 1.0;
    std::vector<int> shape; // Input placeholder / Reshape target
    int index = 0;          // Select
    bool has_bias = false;  // Conv2d / Dense
};

/// Per-BatchNorm running statistics, updated by training-mode forwards.
struct BnRunningState {
    Tensor mean;
    Tensor var;
};

/// A recorded computation: a topologically ordered list of primitive nodes
/// ending in one designated scalar output. Construction order is execution
/// order, so the graph is acyclic by construction.
class Graph {
public:
    int add_input(const std::string& name, std::vector<int> shape);
    int add_param(const std::string& name, Tensor value);
    int add_activation(int x, ActivationRule rule, std::string probe = {});
    int add_conv2d(int x, int kernel, std::optional<int> bias, Conv2dAttrs attrs,
                   std::string probe = {});
    int add_batchnorm(int x, int gamma, int beta, BatchNormAttrs attrs,
                      std::string probe = {});
    int add_dense(int x, int weight, std::optional<int> bias, std::string probe = {});
    int add_maxpool2d(int x, int size);
    int add_global_avg_pool(int x);
    int add_add(int a, int b);
    int add_mul(int a, int b);
    int add_scale(int x, double scalar);
    int add_reshape(int x, std::vector<int> shape);
    int add_flatten(int x);
    int add_reduce_sum(int x);
    int add_select(int x, int flat_index);
    int add_softmax_ce(int logits, const std::string& labels_key = "labels");

    void set_output(int node);
    int output() const;

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    /// Applies one rule to every activation node.
    void set_all_activation_rules(const ActivationRule& rule);

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    const std::vector<std::string>& param_names() const { return param_names_; }
    std::size_t total_param_count() const;

    BnRunningState& bn_state(int node_id) { return bn_states_.at(node_id); }
    const BnRunningState& bn_state(int node_id) const { return bn_states_.at(node_id); }

    int node_by_probe(const std::string& probe) const;
    std::vector<int> nodes_of_kind(OpKind kind) const;

private:
    int push(Node n);
    void check_arg(int id) const;

    std::vector<Node> nodes_;
    std::unordered_map<std::string, int> param_ids_;
    std::vector<std::string> param_names_;
    std::unordered_map<int, Tensor> param_values_;
    std::unordered_map<int, BnRunningState> bn_states_;
    int output_ = -1;
};

/// Values the graph consumes: named input tensors plus integer label
/// vectors for cross-entropy nodes.
struct Bindings {
    std::unordered_map<std::string, Tensor> tensors;
    std::unordered_map<std::string, std::vector<int>> labels;
};

struct ForwardOptions {
    bool training = false;
};

/// Cached per-node forward activations and gradient slots for one
/// forward/backward pair. Confine a (Graph, TapeState) pair to one thread.
struct TapeState {
    std::vector<Tensor> value;
    std::vector<Tensor> grad;
    std::vector<BnForwardCache> bn_cache;
    std::vector<MaxPoolCache> pool_cache;
    std::vector<CrossEntropyCache> ce_cache;
    std::vector<std::vector<int>> ce_labels;
    bool forward_done = false;
    bool trained_mode = false;
    double output = 0.0;
};

/// Runs the recorded computation; caches every activation in the tape.
/// Training mode uses batch statistics in BatchNorm nodes and updates the
/// graph's running statistics.
double forward(Graph& graph, const Bindings& bindings, TapeState& tape,
               const ForwardOptions& opts = {});

/// One reverse sweep over a completed tape. Activation nodes apply their
/// backward slope to the cached forward input; everything else is the
/// exact adjoint of the forward. `seed` is the output node's gradient.
void backward(const Graph& graph, TapeState& tape, double seed = 1.0);

/// Gradient with respect to a named Input or Param (zeros if the node
/// never received gradient flow).
Tensor gradient_of(const Graph& graph, const TapeState& tape,
                   const std::string& name);

const Tensor& node_value(const TapeState& tape, int node_id);
const Tensor& node_gradient(const TapeState& tape, int node_id);

/// Central-difference gradient of the graph output with respect to the
/// named Input or Param, using forward passes only.
Tensor finite_difference_grad(Graph& graph, const Bindings& bindings,
                              const std::string& target, double eps,
                              const ForwardOptions& opts = {});

} // namespace pg
