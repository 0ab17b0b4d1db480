#include "pg/am.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pg {

Tensor init_image(const std::vector<int>& shape, const InitSpec& init, Rng& rng) {
    Tensor x = Tensor::gaussian(shape, init.background, init.noise_std, rng);
    return clamp(x, -1.0, 1.0);
}

Tensor regularize_blur(const Tensor& x, double sigma, int kernel_size) {
    if (sigma < 0.0) throw std::invalid_argument("blur: sigma must be >= 0");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("blur: kernel size must be odd and positive");
    if (sigma == 0.0) return x;
    if (x.ndim() != 3) throw std::invalid_argument("blur: image must be (C,H,W)");

    const int radius = (kernel_size - 1) / 2;
    std::vector<double> weights(static_cast<std::size_t>(kernel_size));
    double wsum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double w = std::exp(-(static_cast<double>(d) * d) / (2.0 * sigma * sigma));
        weights[static_cast<std::size_t>(d + radius)] = w;
        wsum += w;
    }
    for (double& w : weights) w /= wsum;

    const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
    Tensor tmp = Tensor::zeros(x.shape());
    Tensor out = Tensor::zeros(x.shape());

    // horizontal pass, zero beyond borders
    for (int ci = 0; ci < c; ++ci) {
        for (int r = 0; r < h; ++r) {
            const double* src = x.data() + (static_cast<std::size_t>(ci) * h + r) * w;
            double* dst = tmp.data() + (static_cast<std::size_t>(ci) * h + r) * w;
            for (int col = 0; col < w; ++col) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    const int cc = col + d;
                    if (cc < 0 || cc >= w) continue;
                    acc += weights[static_cast<std::size_t>(d + radius)] * src[cc];
                }
                dst[col] = acc;
            }
        }
    }
    // vertical pass
    for (int ci = 0; ci < c; ++ci) {
        for (int r = 0; r < h; ++r) {
            double* dst = out.data() + (static_cast<std::size_t>(ci) * h + r) * w;
            for (int col = 0; col < w; ++col) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    const int rr = r + d;
                    if (rr < 0 || rr >= h) continue;
                    acc += weights[static_cast<std::size_t>(d + radius)] *
                           tmp[(static_cast<std::size_t>(ci) * h + rr) * w + col];
                }
                dst[col] = acc;
            }
        }
    }
    return out;
}

Tensor regularize_rotate(const Tensor& x, double degrees) {
    if (x.ndim() != 3) throw std::invalid_argument("rotate: image must be (C,H,W)");
    const double theta = degrees * 3.14159265358979323846 / 180.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const double cy = (h - 1) / 2.0;
    const double cx = (w - 1) / 2.0;

    Tensor out = Tensor::zeros(x.shape());
    for (int ci = 0; ci < c; ++ci) {
        const double* src = x.data() + static_cast<std::size_t>(ci) * h * w;
        double* dst = out.data() + static_cast<std::size_t>(ci) * h * w;
        for (int r = 0; r < h; ++r) {
            for (int col = 0; col < w; ++col) {
                // inverse mapping: rotate the target position back by theta
                const double dy = r - cy;
                const double dx = col - cx;
                const double sy = cy + dy * ct - dx * st;
                const double sx = cx + dy * st + dx * ct;
                const int r0 = static_cast<int>(std::floor(sy));
                const int c0 = static_cast<int>(std::floor(sx));
                const double fy = sy - r0;
                const double fx = sx - c0;
                double acc = 0.0;
                for (int dr = 0; dr <= 1; ++dr) {
                    for (int dc = 0; dc <= 1; ++dc) {
                        const int rr = r0 + dr;
                        const int cc = c0 + dc;
                        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue; // background 0
                        const double wgt = (dr ? fy : 1.0 - fy) * (dc ? fx : 1.0 - fx);
                        acc += wgt * src[static_cast<std::size_t>(rr) * w + cc];
                    }
                }
                dst[static_cast<std::size_t>(r) * w + col] = acc;
            }
        }
    }
    return out;
}

Tensor ascend_step(const Tensor& x, const Tensor& grad, const AmConfig& config,
                   Rng& rotation_rng) {
    if (!x.same_shape(grad))
        throw std::invalid_argument("ascend_step: gradient shape mismatch");

    Tensor next = x;
    const double norm = l2_norm(grad);
    if (norm > 1e-12) {
        const double step = config.normalize_gradient ? config.learning_rate / norm
                                                      : config.learning_rate;
        for (std::size_t i = 0; i < next.numel(); ++i) next[i] += step * grad[i];
    }

    for (const Regularizer& reg : config.regularizers) {
        if (const auto* blur = std::get_if<BlurSpec>(&reg)) {
            next = regularize_blur(next, blur->sigma, blur->kernel_size);
        } else if (const auto* rot = std::get_if<RotateSpec>(&reg)) {
            const double deg =
                rotation_rng.uniform(-rot->max_degrees, rot->max_degrees);
            next = regularize_rotate(next, deg);
        }
    }
    return clamp(next, config.clamp_lo, config.clamp_hi);
}

AmTrajectory run_am(Graph& graph, const AmConfig& config,
                    std::optional<Tensor> init_override) {
    if (config.iterations < 1)
        throw std::invalid_argument("run_am: iterations must be >= 1");
    if (config.clamp_lo > config.clamp_hi)
        throw std::invalid_argument("run_am: clamp bounds out of order");

    const int input_id = [&] {
        for (std::size_t i = 0; i < graph.nodes().size(); ++i)
            if (graph.nodes()[i].kind == OpKind::Input) return static_cast<int>(i);
        throw std::invalid_argument("run_am: graph has no input placeholder");
    }();
    const Node& input = graph.node(input_id);

    Rng init_rng(config.seed, "init");
    Rng rotation_rng(config.seed, "rotation");

    Tensor x = init_override ? std::move(*init_override)
                             : init_image(input.shape, config.init, init_rng);
    if (x.shape() != input.shape)
        throw std::invalid_argument("run_am: init image shape mismatch");

    AmTrajectory traj;
    traj.objective.reserve(static_cast<std::size_t>(config.iterations) + 1);
    traj.grad_norm.reserve(static_cast<std::size_t>(config.iterations) + 1);

    Bindings bindings;
    TapeState tape;
    for (int k = 0; k <= config.iterations; ++k) {
        bindings.tensors[input.name] = x;
        const double objective = forward(graph, bindings, tape);
        backward(graph, tape);
        const Tensor grad = gradient_of(graph, tape, input.name);

        traj.objective.push_back(objective);
        traj.grad_norm.push_back(l2_norm(grad));
        if (config.frame_stride > 0 && k % config.frame_stride == 0)
            traj.frames.push_back(x);

        if (k < config.iterations) x = ascend_step(x, grad, config, rotation_rng);
    }

    traj.final_image = x;
    traj.best_iteration = static_cast<int>(
        std::max_element(traj.objective.begin(), traj.objective.end()) -
        traj.objective.begin());
    return traj;
}

AmTrajectory run_am(const WhiteImageProblem& problem, const ActivationRule& rule,
                    const AmConfig& config, std::optional<Tensor> init_override) {
    Graph graph = build_graph(problem, rule);
    return run_am(graph, config, std::move(init_override));
}

} // namespace pg
