#include "pg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace pg {

// ---------------------------------------------------------------------------
// tiny residual network
// ---------------------------------------------------------------------------

namespace {

Tensor kaiming_conv(int out_ch, int in_ch, int kh, int kw, Rng& rng) {
    const double std = std::sqrt(2.0 / (static_cast<double>(in_ch) * kh * kw));
    return Tensor::gaussian({out_ch, in_ch, kh, kw}, 0.0, std, rng);
}

Tensor kaiming_dense(int out_f, int in_f, Rng& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(in_f));
    return Tensor::gaussian({out_f, in_f}, 0.0, std, rng);
}

struct NetBuilder {
    Graph& g;
    const TinyResNetSpec& spec;
    Rng& rng;

    int conv(int x, const std::string& name, int out_ch, int in_ch, int k, int stride,
             const std::string& probe) {
        const int w = g.add_param(name + ".w", kaiming_conv(out_ch, in_ch, k, k, rng));
        std::optional<int> b;
        if (spec.bias) b = g.add_param(name + ".b", Tensor::zeros({out_ch}));
        return g.add_conv2d(x, w, b, Conv2dAttrs{stride, true}, probe);
    }

    int bn(int x, const std::string& name, int channels, const std::string& probe) {
        if (!spec.batchnorm) return x;
        const int gamma = g.add_param(name + ".gamma", Tensor::ones({channels}));
        const int beta = g.add_param(name + ".beta", Tensor::zeros({channels}));
        return g.add_batchnorm(x, gamma, beta,
                               BatchNormAttrs{spec.bn_eps, spec.bn_momentum}, probe);
    }
};

} // namespace

Graph build_tiny_resnet(const TinyResNetSpec& spec, Rng& rng) {
    if (spec.stage_widths.empty() ||
        spec.stage_widths.size() != spec.blocks_per_stage.size())
        throw std::invalid_argument("tiny resnet: stage widths and block counts "
                                    "must be non-empty and aligned");
    if (spec.classes < 2) throw std::invalid_argument("tiny resnet: need >= 2 classes");
    if (spec.input_shape.size() != 3)
        throw std::invalid_argument("tiny resnet: input shape must be (C,H,W)");

    Graph g;
    NetBuilder b{g, spec, rng};

    const int in_ch = spec.input_shape[0];
    const int x = g.add_input(
        "x", {-1, in_ch, spec.input_shape[1], spec.input_shape[2]});

    int cur = b.conv(x, "stem.conv", spec.stage_widths[0], in_ch, 3, spec.stem_stride,
                     "stem.conv");
    cur = b.bn(cur, "stem.bn", spec.stage_widths[0], "stem.bn");
    cur = g.add_activation(cur, spec.rule, "stem.act");

    int cur_ch = spec.stage_widths[0];
    for (std::size_t si = 0; si < spec.stage_widths.size(); ++si) {
        const int width = spec.stage_widths[si];
        for (int bj = 0; bj < spec.blocks_per_stage[si]; ++bj) {
            const std::string tag =
                "s" + std::to_string(si + 1) + "b" + std::to_string(bj + 1);
            const int stride = (si > 0 && bj == 0) ? 2 : 1;

            int branch = b.conv(cur, tag + ".conv1", width, cur_ch, 3, stride,
                                tag + ".conv1");
            branch = b.bn(branch, tag + ".bn1", width, tag + ".bn1");
            branch = g.add_activation(branch, spec.rule, tag + ".act1");
            branch = b.conv(branch, tag + ".conv2", width, width, 3, 1, tag + ".conv2");
            branch = b.bn(branch, tag + ".bn2", width, tag + ".bn2");

            int skip = cur;
            if (stride != 1 || cur_ch != width) {
                skip = b.conv(cur, tag + ".downsample", width, cur_ch, 1, stride,
                              tag + ".downsample");
                skip = b.bn(skip, tag + ".bnskip", width, tag + ".bnskip");
            }
            cur = g.add_activation(g.add_add(branch, skip), spec.rule, tag + ".act2");
            cur_ch = width;
        }
    }

    int head = g.add_global_avg_pool(cur);
    const int w = g.add_param("fc.w", kaiming_dense(spec.classes, cur_ch, rng));
    std::optional<int> fc_bias;
    if (spec.bias) fc_bias = g.add_param("fc.b", Tensor::zeros({spec.classes}));
    head = g.add_dense(head, w, fc_bias, "logits");
    g.set_output(g.add_softmax_ce(head));
    return g;
}

// ---------------------------------------------------------------------------
// datasets
// ---------------------------------------------------------------------------

Tensor Dataset::batch_images(int first, int count) const {
    if (first < 0 || count < 1 || first + count > size())
        throw std::invalid_argument("dataset: batch range out of bounds");
    const std::size_t row = images.numel() / static_cast<std::size_t>(size());
    std::vector<int> shape = images.shape();
    shape[0] = count;
    std::vector<double> data(
        images.data() + static_cast<std::size_t>(first) * row,
        images.data() + static_cast<std::size_t>(first + count) * row);
    return Tensor::from_data(shape, std::move(data));
}

std::vector<int> Dataset::batch_labels(int first, int count) const {
    return {labels.begin() + first, labels.begin() + first + count};
}

Tensor Dataset::batch_images(const std::vector<int>& indices) const {
    if (indices.empty()) throw std::invalid_argument("dataset: empty batch");
    const std::size_t row = images.numel() / static_cast<std::size_t>(size());
    std::vector<int> shape = images.shape();
    shape[0] = static_cast<int>(indices.size());
    std::vector<double> data;
    data.reserve(indices.size() * row);
    for (const int idx : indices) {
        if (idx < 0 || idx >= size())
            throw std::invalid_argument("dataset: index out of bounds");
        const double* src = images.data() + static_cast<std::size_t>(idx) * row;
        data.insert(data.end(), src, src + row);
    }
    return Tensor::from_data(shape, std::move(data));
}

std::vector<int> Dataset::batch_labels(const std::vector<int>& indices) const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (const int idx : indices) out.push_back(labels[static_cast<std::size_t>(idx)]);
    return out;
}

namespace {

bool shape_predicate(int cls, double px, double py) {
    const double r2 = px * px + py * py;
    switch (cls) {
    case 0: return std::fabs(py) <= 0.28 && std::fabs(px) <= 1.0;   // horizontal bar
    case 1: return std::fabs(px) <= 0.28 && std::fabs(py) <= 1.0;   // vertical bar
    case 2: return (std::fabs(py) <= 0.24 && std::fabs(px) <= 1.0) ||
                   (std::fabs(px) <= 0.24 && std::fabs(py) <= 1.0); // cross
    case 3: return r2 <= 1.0;                                       // disk
    case 4: return r2 <= 1.0 && r2 >= 0.55 * 0.55;                  // ring
    case 5: // diagonal bar
        return std::fabs(py - px) / 1.4142135623730951 <= 0.28 &&
               std::fabs(px) <= 1.05 && std::fabs(py) <= 1.05;
    case 6: { // square outline
        const double m = std::max(std::fabs(px), std::fabs(py));
        return m <= 0.95 && m >= 0.55;
    }
    case 7: { // two dots
        const double dx1 = px - 0.5, dx2 = px + 0.5;
        return (dx1 * dx1 + py * py <= 0.38 * 0.38) ||
               (dx2 * dx2 + py * py <= 0.38 * 0.38);
    }
    default: throw std::invalid_argument("synthetic shapes: unsupported class");
    }
}

} // namespace

Dataset synthetic_shapes(int n_per_class, int classes, int image_size, Rng& rng) {
    if (classes < 2 || classes > 8)
        throw std::invalid_argument("synthetic shapes: classes must be in [2, 8]");
    if (n_per_class < 1 || image_size < 8)
        throw std::invalid_argument("synthetic shapes: bad size parameters");

    const int s = image_size;
    const int n = n_per_class * classes;
    Dataset ds;
    ds.classes = classes;
    ds.labels.reserve(static_cast<std::size_t>(n));
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(n) * s * s);

    for (int cls = 0; cls < classes; ++cls) {
        for (int i = 0; i < n_per_class; ++i) {
            const double theta = rng.uniform(-0.35, 0.35);
            const double jy = rng.uniform(-0.08, 0.08) * s;
            const double jx = rng.uniform(-0.08, 0.08) * s;
            const double radius = 0.36 * s * (1.0 + rng.uniform(-0.15, 0.15));
            const double ct = std::cos(theta), st = std::sin(theta);
            const double cy = (s - 1) / 2.0 + jy;
            const double cx = (s - 1) / 2.0 + jx;
            for (int r = 0; r < s; ++r) {
                for (int c = 0; c < s; ++c) {
                    const double dy = (r - cy) / radius;
                    const double dx = (c - cx) / radius;
                    const double px = dx * ct + dy * st;
                    const double py = -dx * st + dy * ct;
                    double v = shape_predicate(cls, px, py) ? 1.0 : -1.0;
                    v += rng.normal(0.0, 0.15);
                    data.push_back(v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v));
                }
            }
            ds.labels.push_back(cls);
        }
    }
    ds.images = Tensor::from_data({n, 1, s, s}, std::move(data));
    return ds;
}

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("idx: truncated file while reading " + what);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("idx: cannot open " + images_path);
    if (read_u32_be(imgs, "image magic") != 0x00000803u)
        throw std::runtime_error("idx: bad image magic in " + images_path);
    const std::uint32_t n = read_u32_be(imgs, "image count");
    const std::uint32_t h = read_u32_be(imgs, "image height");
    const std::uint32_t w = read_u32_be(imgs, "image width");

    const std::size_t pixels = static_cast<std::size_t>(n) * h * w;
    std::vector<unsigned char> raw(pixels);
    if (!imgs.read(reinterpret_cast<char*>(raw.data()),
                   static_cast<std::streamsize>(pixels)))
        throw std::runtime_error("idx: truncated pixel data in " + images_path);

    std::ifstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw std::runtime_error("idx: cannot open " + labels_path);
    if (read_u32_be(lbls, "label magic") != 0x00000801u)
        throw std::runtime_error("idx: bad label magic in " + labels_path);
    const std::uint32_t ln = read_u32_be(lbls, "label count");
    if (ln != n)
        throw std::runtime_error("idx: label count " + std::to_string(ln) +
                                 " does not match image count " + std::to_string(n));
    std::vector<unsigned char> lraw(ln);
    if (!lbls.read(reinterpret_cast<char*>(lraw.data()),
                   static_cast<std::streamsize>(ln)))
        throw std::runtime_error("idx: truncated label data in " + labels_path);

    Dataset ds;
    std::vector<double> data(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
        data[i] = static_cast<double>(raw[i]) / 127.5 - 1.0; // 0 -> -1, 255 -> +1
    ds.images = Tensor::from_data(
        {static_cast<int>(n), 1, static_cast<int>(h), static_cast<int>(w)},
        std::move(data));
    ds.labels.assign(lraw.begin(), lraw.end());
    ds.classes = ds.labels.empty()
                     ? 0
                     : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    return ds;
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

namespace {

struct OptState {
    std::unordered_map<std::string, Tensor> momentum; // SGD velocity / Adam m
    std::unordered_map<std::string, Tensor> second;   // Adam v
    long step = 0;
};

void apply_update(Graph& graph, const TapeState& tape, const TrainConfig& cfg,
                  double lr, OptState& state) {
    ++state.step;
    for (const std::string& name : graph.param_names()) {
        Tensor grad = gradient_of(graph, tape, name);
        Tensor& w = graph.param(name);
        if (cfg.weight_decay != 0.0) {
            for (std::size_t i = 0; i < grad.numel(); ++i)
                grad[i] += cfg.weight_decay * w[i];
        }
        if (cfg.optimizer == OptimizerKind::SgdMomentum) {
            Tensor& v = state.momentum.try_emplace(name, Tensor::zeros(w.shape()))
                            .first->second;
            for (std::size_t i = 0; i < w.numel(); ++i) {
                v[i] = cfg.momentum * v[i] + grad[i];
                w[i] -= lr * v[i];
            }
        } else {
            Tensor& m = state.momentum.try_emplace(name, Tensor::zeros(w.shape()))
                            .first->second;
            Tensor& v = state.second.try_emplace(name, Tensor::zeros(w.shape()))
                            .first->second;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.step);
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.step);
            for (std::size_t i = 0; i < w.numel(); ++i) {
                m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
                v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
                w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
            }
        }
        w.ensure_finite("parameter update (" + name + ")");
    }
}

void augment_batch(Tensor& images, Rng& rng) {
    const int n = images.extent(0), c = images.extent(1), h = images.extent(2),
              w = images.extent(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ni = 0; ni < n; ++ni) {
        const bool flip = rng.uniform() < 0.5;
        const int dy = static_cast<int>(rng.below(5)) - 2; // pad-2 random crop
        const int dx = static_cast<int>(rng.below(5)) - 2;
        for (int ci = 0; ci < c; ++ci) {
            double* img = images.data() + (static_cast<std::size_t>(ni) * c + ci) * plane;
            std::vector<double> copy(img, img + plane);
            for (int r = 0; r < h; ++r) {
                for (int col = 0; col < w; ++col) {
                    const int sr = r + dy;
                    int sc = col + dx;
                    if (flip) sc = w - 1 - sc;
                    img[static_cast<std::size_t>(r) * w + col] =
                        (sr >= 0 && sr < h && sc >= 0 && sc < w)
                            ? copy[static_cast<std::size_t>(sr) * w + sc]
                            : 0.0;
                }
            }
        }
    }
}

int count_correct(const Tensor& logits, const std::vector<int>& labels) {
    const int n = logits.extent(0), k = logits.extent(1);
    int correct = 0;
    for (int ni = 0; ni < n; ++ni) {
        const double* row = logits.data() + static_cast<std::size_t>(ni) * k;
        int best = 0;
        for (int ki = 1; ki < k; ++ki)
            if (row[ki] > row[best]) best = ki;
        if (best == labels[static_cast<std::size_t>(ni)]) ++correct;
    }
    return correct;
}

int logits_node_of(const Graph& graph) {
    const Node& out = graph.node(graph.output());
    if (out.kind != OpKind::SoftmaxCE)
        throw std::invalid_argument("train: graph output must be a cross-entropy node");
    return out.args[0];
}

} // namespace

TrainHistory train(Graph& graph, const Dataset& train_set, const Dataset& test_set,
                   const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.lr.initial < 0.0)
        throw std::invalid_argument("train: hyper-parameters must be positive");
    if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
    const int logits_id = logits_node_of(graph);
    const bool has_bn = !graph.nodes_of_kind(OpKind::BatchNorm).empty();

    Rng data_rng(cfg.seed, "data");
    Rng aug_rng(cfg.seed, "augment");
    OptState opt;
    TrainHistory history;

    std::vector<int> order(static_cast<std::size_t>(train_set.size()));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr.initial;
        for (const int milestone : cfg.lr.milestones)
            if (epoch >= milestone) lr *= cfg.lr.decay;

        // Fisher-Yates with the data sub-stream
        for (int i = train_set.size() - 1; i > 0; --i) {
            const int j = static_cast<int>(data_rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double loss_sum = 0.0;
        int batches = 0, correct = 0, seen = 0;
        Bindings bindings;
        TapeState tape;
        for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, train_set.size() - start);
            if (count < 2 && has_bn) continue; // batch statistics need >= 2 samples
            const std::vector<int> idx(order.begin() + start,
                                       order.begin() + start + count);
            Tensor images = train_set.batch_images(idx);
            if (cfg.augment) augment_batch(images, aug_rng);
            bindings.tensors["x"] = std::move(images);
            bindings.labels["labels"] = train_set.batch_labels(idx);

            double loss;
            try {
                loss = forward(graph, bindings, tape, ForwardOptions{true});
            } catch (const std::domain_error& e) {
                throw std::domain_error("train: diverged at epoch " +
                                        std::to_string(epoch) + ": " + e.what());
            }
            backward(graph, tape);
            correct += count_correct(node_value(tape, logits_id),
                                     bindings.labels["labels"]);
            seen += count;
            loss_sum += loss;
            ++batches;
            apply_update(graph, tape, cfg, lr, opt);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = batches ? loss_sum / batches : 0.0;
        stats.train_acc = seen ? static_cast<double>(correct) / seen : 0.0;
        stats.test_acc = test_set.size() ? evaluate(graph, test_set) : 0.0;
        history.push_back(stats);
    }
    return history;
}

double evaluate(Graph& graph, const Dataset& dataset, int batch_size) {
    if (dataset.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    const int logits_id = logits_node_of(graph);
    int correct = 0;
    Bindings bindings;
    TapeState tape;
    for (int start = 0; start < dataset.size(); start += batch_size) {
        const int count = std::min(batch_size, dataset.size() - start);
        bindings.tensors["x"] = dataset.batch_images(start, count);
        bindings.labels["labels"] = dataset.batch_labels(start, count);
        forward(graph, bindings, tape, ForwardOptions{false});
        correct += count_correct(node_value(tape, logits_id), bindings.labels["labels"]);
    }
    return static_cast<double>(correct) / dataset.size();
}

} // namespace pg
