#pragma once

#include <string>
#include <vector>

#include "pg/graph.hpp"
#include "pg/rng.hpp"

namespace pg {

/// Residual-network stand-in with conv -> BN -> activation blocks and
/// identity skips; downsampling skips use a strided 1x1 convolution.
/// Stage i, block j contributes probe labels "s{i}b{j}.conv1",
/// "s{i}b{j}.conv2", "s{i}b{j}.bn1", "s{i}b{j}.bn2"; the stem carries
/// "stem.conv" / "stem.bn" and the classifier "logits".
struct TinyResNetSpec {
    std::vector<int> stage_widths = {8, 16};
    std::vector<int> blocks_per_stage = {1, 1};
    ActivationRule rule{};
    bool batchnorm = true;
    int classes = 5;
    std::vector<int> input_shape = {1, 16, 16}; // C, H, W
    int stem_stride = 2;
    bool bias = false; // conv/dense biases (off keeps the net positively homogeneous)
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;
};

/// Builds the graph with Kaiming fan-in Gaussian weights drawn from `rng`.
/// Input placeholder "x" accepts any batch size; output is mean softmax
/// cross-entropy against the "labels" binding.
Graph build_tiny_resnet(const TinyResNetSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// datasets
// ---------------------------------------------------------------------------

struct Dataset {
    Tensor images; // (N, C, H, W), values in [-1, 1]
    std::vector<int> labels;
    int classes = 0;

    int size() const { return images.empty() ? 0 : images.extent(0); }
    /// Copies rows [first, first + count) into a batch tensor.
    Tensor batch_images(int first, int count) const;
    std::vector<int> batch_labels(int first, int count) const;
    Tensor batch_images(const std::vector<int>& indices) const;
    std::vector<int> batch_labels(const std::vector<int>& indices) const;
};

/// Grayscale images of parameterized shapes (bars, cross, disk, ring, ...)
/// with per-sample rotation, position/size jitter and additive noise.
/// Exactly n_per_class samples per class, class-major order.
Dataset synthetic_shapes(int n_per_class, int classes, int image_size, Rng& rng);

/// IDX container reader (big-endian; image magic 0x00000803, label magic
/// 0x00000801). Pixels map linearly onto [-1, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct LrSchedule {
    double initial = 0.01;
    double decay = 0.1;            // multiplier applied at each milestone
    std::vector<int> milestones;   // epochs (0-based) at which decay fires
};

enum class OptimizerKind { SgdMomentum, Adam };

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    LrSchedule lr{};
    double weight_decay = 0.0;
    OptimizerKind optimizer = OptimizerKind::SgdMomentum;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    bool augment = false; // random crop (pad 2) + horizontal flip
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

/// Minimizes the graph's cross-entropy output over the training set.
/// Deterministic given the config seed. A non-finite loss aborts with a
/// diagnostic. The same backward pass supplies every gradient, so the
/// activation backward slopes govern both input and weight gradients.
TrainHistory train(Graph& graph, const Dataset& train_set, const Dataset& test_set,
                   const TrainConfig& config);

/// Argmax accuracy in [0,1]; BatchNorm runs in inference mode.
double evaluate(Graph& graph, const Dataset& dataset, int batch_size = 64);

} // namespace pg
