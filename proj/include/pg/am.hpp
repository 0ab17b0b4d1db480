#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "pg/graph.hpp"
#include "pg/rng.hpp"
#include "pg/toy_problems.hpp"

namespace pg {

struct BlurSpec {
    double sigma = 0.5;
    int kernel_size = 3;
};

struct RotateSpec {
    double max_degrees = 2.0;
};

using Regularizer = std::variant<BlurSpec, RotateSpec>;

struct InitSpec {
    double background = 0.0;
    double noise_std = 0.01;
};

struct AmConfig {
    double learning_rate = 25.0;
    int iterations = 500;
    bool normalize_gradient = true;
    double clamp_lo = -1.0;
    double clamp_hi = 1.0;
    std::vector<Regularizer> regularizers; // applied in order after each step
    InitSpec init;
    std::uint64_t seed = 0; // drives the init and rotation sub-streams
    int frame_stride = 0;   // 0: keep no intermediate frames
};

/// Record of one ascent run. objective[k] and grad_norm[k] describe the
/// iterate after k steps (k = 0 is the initial image), so both vectors
/// have length iterations + 1. A grad_norm of zero marks iterations where
/// only regularization and clamping acted.
struct AmTrajectory {
    std::vector<double> objective;
    std::vector<double> grad_norm;
    Tensor final_image;
    int best_iteration = 0;
    std::vector<Tensor> frames; // iterates 0, stride, 2*stride, ...
};

/// background + noise_std * N(0,1), clamped to [-1, 1].
Tensor init_image(const std::vector<int>& shape, const InitSpec& init, Rng& rng);

/// One projected-ascent update: step along the (optionally normalized)
/// gradient, run the regularizers in order, clamp. A gradient with L2 norm
/// below 1e-12 contributes no step.
Tensor ascend_step(const Tensor& x, const Tensor& grad, const AmConfig& config,
                   Rng& rotation_rng);

/// Gradient ascent on the graph's scalar output with respect to input
/// "x". The objective is always scored by the graph forward (the original
/// network); activation backward slopes shape only the search direction.
AmTrajectory run_am(Graph& graph, const AmConfig& config,
                    std::optional<Tensor> init_override = std::nullopt);

/// Convenience wrapper: builds the problem graph under `rule` and ascends.
AmTrajectory run_am(const WhiteImageProblem& problem, const ActivationRule& rule,
                    const AmConfig& config,
                    std::optional<Tensor> init_override = std::nullopt);

/// Separable Gaussian blur with zero-padded borders; k odd, sigma >= 0
/// (sigma == 0 is the identity). Channels are filtered independently.
Tensor regularize_blur(const Tensor& x, double sigma, int kernel_size);

/// Rotation about the image center by `degrees` with bilinear resampling;
/// samples falling outside the source are filled with background 0.
Tensor regularize_rotate(const Tensor& x, double degrees);

} // namespace pg
