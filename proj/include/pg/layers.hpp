#pragma once

#include <optional>
#include <vector>

#include "pg/tensor.hpp"

namespace pg {

/// One parameterized rectifier covering ReLU, Leaky ReLU and the
/// proxy-gradient variant:
///   (0, 0)    ReLU
///   (s, s)    Leaky ReLU with negative slope s
///   (f, b)    forward slope f, gradients taken with slope b
/// The forward pass never looks at backward_slope and the backward pass
/// never looks at forward_slope (it sees only the cached forward input).
struct ActivationRule {
    double forward_slope = 0.0;
    double backward_slope = 0.0;

    static ActivationRule relu() { return {0.0, 0.0}; }
    static ActivationRule leaky(double s) { return {s, s}; }
    static ActivationRule proxy(double fwd, double bwd) { return {fwd, bwd}; }
};

/// y_i = max(x_i, forward_slope * x_i)
Tensor activation_forward(const Tensor& x, const ActivationRule& rule);

/// dx_i = upstream_i        where x_i >= 0
///      = upstream_i * backward_slope  where x_i < 0
/// x must be the cached input of the matching forward call.
Tensor activation_backward(const Tensor& x, const Tensor& upstream,
                           const ActivationRule& rule);

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, no kernel flip). x is (N, C, H, W),
// kernel is (OC, IC, kH, kW). Valid mode shrinks spatial dims; same mode
// zero-pads by (k-1)/2 per side (odd kernels only).
// ---------------------------------------------------------------------------

struct Conv2dAttrs {
    int stride = 1;
    bool same_pad = false;
};

std::vector<int> conv2d_output_shape(const std::vector<int>& x_shape,
                                     const std::vector<int>& k_shape,
                                     const Conv2dAttrs& attrs);

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, const Tensor* bias,
                      const Conv2dAttrs& attrs);

struct Conv2dGrads {
    Tensor dx;
    Tensor dkernel;
    Tensor dbias; // empty when the layer has no bias
};

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& kernel,
                            const Conv2dAttrs& attrs, const Tensor& upstream,
                            bool need_bias);

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel. Training mode uses batch
// statistics and its backward implements the full batch-statistics
// derivative; inference mode normalizes with the provided running stats.
// ---------------------------------------------------------------------------

struct BatchNormAttrs {
    double eps = 1e-5;
    double momentum = 0.1;
};

struct BnForwardCache {
    Tensor y;
    Tensor batch_mean;   // per channel
    Tensor batch_var;    // per channel, biased
    Tensor batch_invstd; // per channel, 1/sqrt(var + eps)
    Tensor xhat;         // normalized input, same shape as x
};

/// Training-mode forward; requires batch size >= 2.
BnForwardCache batchnorm_forward_train(const Tensor& x, const Tensor& gamma,
                                       const Tensor& beta, double eps);

Tensor batchnorm_forward_infer(const Tensor& x, const Tensor& gamma,
                               const Tensor& beta, const Tensor& running_mean,
                               const Tensor& running_var, double eps);

struct BnGrads {
    Tensor dx;
    Tensor dgamma;
    Tensor dbeta;
};

BnGrads batchnorm_backward_train(const Tensor& x, const BnForwardCache& cache,
                                 const Tensor& gamma, const Tensor& upstream);

BnGrads batchnorm_backward_infer(const Tensor& gamma, const Tensor& running_mean,
                                 const Tensor& running_var, double eps,
                                 const Tensor& x, const Tensor& upstream);

// ---------------------------------------------------------------------------
// Dense layer: x (N, F), weight (K, F), bias (K) -> (N, K).
// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor* bias);

struct DenseGrads {
    Tensor dx;
    Tensor dweight;
    Tensor dbias; // empty when the layer has no bias
};

DenseGrads dense_backward(const Tensor& x, const Tensor& weight,
                          const Tensor& upstream, bool need_bias);

// ---------------------------------------------------------------------------
// Pooling on (N, C, H, W).
// ---------------------------------------------------------------------------

struct MaxPoolCache {
    Tensor y;
    std::vector<std::size_t> argmax; // flat source index per output element
};

/// Non-overlapping windows of `size` with stride `size`; ties resolve to
/// the first element in scan order.
MaxPoolCache maxpool2d_forward(const Tensor& x, int size);

Tensor maxpool2d_backward(const std::vector<int>& x_shape,
                          const MaxPoolCache& cache, const Tensor& upstream);

/// (N, C, H, W) -> (N, C), mean over the spatial dims.
Tensor global_avg_pool_forward(const Tensor& x);

Tensor global_avg_pool_backward(const std::vector<int>& x_shape,
                                const Tensor& upstream);

// ---------------------------------------------------------------------------
// Softmax cross-entropy, mean over the batch; log-sum-exp stabilized.
// logits (N, K), labels: N integers in [0, K).
// ---------------------------------------------------------------------------

struct CrossEntropyCache {
    double loss = 0.0;
    Tensor probs; // (N, K) softmax probabilities
};

CrossEntropyCache softmax_cross_entropy(const Tensor& logits,
                                        const std::vector<int>& labels);

/// Gradient of (upstream * mean CE) with respect to the logits.
Tensor softmax_cross_entropy_backward(const CrossEntropyCache& cache,
                                      const std::vector<int>& labels,
                                      double upstream);

} // namespace pg
