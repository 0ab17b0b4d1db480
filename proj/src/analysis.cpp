#include "pg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pg {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

double rectified_gaussian_mean(double s) {
    if (s < 0.0 || s > 1.0)
        throw std::invalid_argument("rectified_gaussian_mean: s must be in [0, 1]");
    return (1.0 - s) / std::sqrt(kTwoPi);
}

double rectified_gaussian_var(double s) {
    if (s < 0.0 || s > 1.0)
        throw std::invalid_argument("rectified_gaussian_var: s must be in [0, 1]");
    return (s * s + 1.0) / 2.0 - (1.0 - s) * (1.0 - s) / kTwoPi;
}

McMoments monte_carlo_moments_detailed(double s, std::size_t n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("monte_carlo_moments: n must be >= 2");
    double r1 = 0.0, r2 = 0.0, r3 = 0.0, r4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        const double y = z > s * z ? z : s * z;
        const double y2 = y * y;
        r1 += y;
        r2 += y2;
        r3 += y2 * y;
        r4 += y2 * y2;
    }
    const double dn = static_cast<double>(n);
    r1 /= dn;
    r2 /= dn;
    r3 /= dn;
    r4 /= dn;

    McMoments out;
    out.n = n;
    out.moments.mean = r1;
    const double var_pop = r2 - r1 * r1;
    out.moments.variance = var_pop * dn / (dn - 1.0);
    // central fourth moment from raw moments
    const double m4 = r4 - 4.0 * r3 * r1 + 6.0 * r2 * r1 * r1 - 3.0 * r1 * r1 * r1 * r1;
    out.se_mean = std::sqrt(var_pop / dn);
    out.se_var = std::sqrt(std::max(0.0, m4 - var_pop * var_pop) / dn);
    return out;
}

MomentPair monte_carlo_moments(double s, std::size_t n, Rng& rng) {
    return monte_carlo_moments_detailed(s, n, rng).moments;
}

// ---------------------------------------------------------------------------
// trend profiling
// ---------------------------------------------------------------------------

std::string slope_mode_name(SlopeMode mode) {
    return mode == SlopeMode::Leaky ? "leaky" : "proxygrad";
}

SlopeMode slope_mode_from_name(const std::string& name) {
    if (name == "leaky") return SlopeMode::Leaky;
    if (name == "proxygrad") return SlopeMode::ProxyGrad;
    throw std::invalid_argument("unknown slope mode '" + name + "'");
}

namespace {

ActivationRule rule_for(SlopeMode mode, double slope, double proxy_fwd) {
    return mode == SlopeMode::Leaky ? ActivationRule::leaky(slope)
                                    : ActivationRule::proxy(proxy_fwd, slope);
}

std::vector<int> sample_batch_indices(const Dataset& data, int batch_size, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(batch_size));
    for (int& v : idx)
        v = static_cast<int>(rng.below(static_cast<std::uint64_t>(data.size())));
    return idx;
}

// Mean over channels of the per-channel std over (N,H,W) -- the divisor
// batch normalization actually applies.
double bn_input_std(const Tensor& t) {
    const int n = t.extent(0), c = t.extent(1);
    const std::size_t spatial =
        static_cast<std::size_t>(t.extent(2)) * static_cast<std::size_t>(t.extent(3));
    const double m = static_cast<double>(n) * static_cast<double>(spatial);
    double acc = 0.0;
    for (int ci = 0; ci < c; ++ci) {
        double sum = 0.0, sq = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                sum += t[base + i];
                sq += t[base + i] * t[base + i];
            }
        }
        const double mean = sum / m;
        acc += std::sqrt(std::max(0.0, sq / m - mean * mean));
    }
    return acc / static_cast<double>(c);
}

struct MeanStd {
    double mean = 0.0;
    double std_dev = 0.0;
};

MeanStd aggregate(const std::vector<double>& xs) {
    MeanStd out;
    const double n = static_cast<double>(xs.size());
    for (const double x : xs) out.mean += x;
    out.mean /= n;
    double acc = 0.0;
    for (const double x : xs) acc += (x - out.mean) * (x - out.mean);
    out.std_dev = xs.size() > 1 ? std::sqrt(acc / (n - 1.0)) : 0.0;
    return out;
}

} // namespace

std::vector<GradientProfileRow> layer_gradient_magnitude(const TrendConfig& cfg,
                                                         const Dataset& data) {
    if (cfg.seeds < 1) throw std::invalid_argument("trend: seeds must be >= 1");
    if (data.size() == 0) throw std::invalid_argument("trend: empty dataset");

    std::vector<GradientProfileRow> rows;
    for (const double slope : cfg.slopes) {
        TinyResNetSpec spec = cfg.net;
        spec.rule = rule_for(cfg.mode, slope, cfg.proxy_forward_slope);
        spec.batchnorm = cfg.batchnorm;

        std::vector<std::vector<double>> per_probe(cfg.probes.size());
        for (int seed = 0; seed < cfg.seeds; ++seed) {
            Rng weights_rng(cfg.base_seed + static_cast<std::uint64_t>(seed), "weights");
            Rng batch_rng(cfg.base_seed + static_cast<std::uint64_t>(seed), "batch");
            Graph graph = build_tiny_resnet(spec, weights_rng);

            const std::vector<int> idx =
                sample_batch_indices(data, cfg.batch_size, batch_rng);
            Bindings bindings;
            bindings.tensors["x"] = data.batch_images(idx);
            bindings.labels["labels"] = data.batch_labels(idx);

            TapeState tape;
            forward(graph, bindings, tape, ForwardOptions{true});
            backward(graph, tape);

            for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
                const int id = graph.node_by_probe(cfg.probes[p]);
                per_probe[p].push_back(mean_abs(node_gradient(tape, id)));
            }
        }

        for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
            const MeanStd agg = aggregate(per_probe[p]);
            GradientProfileRow row;
            row.mode = slope_mode_name(cfg.mode);
            row.slope = slope;
            row.batchnorm = cfg.batchnorm;
            row.layer = cfg.probes[p];
            row.mean_abs_grad = agg.mean;
            row.std_dev = agg.std_dev;
            row.n_seeds = cfg.seeds;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<BnStdRow> bn_input_std_profile(const TrendConfig& cfg,
                                           const Dataset& data) {
    if (!cfg.net.batchnorm || !cfg.batchnorm)
        throw std::invalid_argument("bn_input_std_profile: batchnorm must be enabled");
    if (data.size() == 0) throw std::invalid_argument("trend: empty dataset");

    std::vector<BnStdRow> rows;
    for (const double slope : cfg.slopes) {
        TinyResNetSpec spec = cfg.net;
        spec.rule = rule_for(cfg.mode, slope, cfg.proxy_forward_slope);
        spec.batchnorm = true;

        std::vector<std::string> layers;
        std::vector<std::vector<double>> per_layer;
        for (int seed = 0; seed < cfg.seeds; ++seed) {
            Rng weights_rng(cfg.base_seed + static_cast<std::uint64_t>(seed), "weights");
            Rng batch_rng(cfg.base_seed + static_cast<std::uint64_t>(seed), "batch");
            Graph graph = build_tiny_resnet(spec, weights_rng);

            const std::vector<int> idx =
                sample_batch_indices(data, cfg.batch_size, batch_rng);
            Bindings bindings;
            bindings.tensors["x"] = data.batch_images(idx);
            bindings.labels["labels"] = data.batch_labels(idx);

            TapeState tape;
            forward(graph, bindings, tape, ForwardOptions{true});

            const std::vector<int> bn_nodes = graph.nodes_of_kind(OpKind::BatchNorm);
            if (layers.empty()) {
                for (const int id : bn_nodes) layers.push_back(graph.node(id).probe);
                per_layer.assign(layers.size(), {});
            }
            for (std::size_t b = 0; b < bn_nodes.size(); ++b) {
                const Tensor& input = node_value(tape, graph.node(bn_nodes[b]).args[0]);
                per_layer[b].push_back(bn_input_std(input));
            }
        }

        for (std::size_t b = 0; b < layers.size(); ++b) {
            const MeanStd agg = aggregate(per_layer[b]);
            BnStdRow row;
            row.mode = slope_mode_name(cfg.mode);
            row.slope = slope;
            row.layer = layers[b];
            row.mean_std = agg.mean;
            row.std_dev = agg.std_dev;
            row.n_seeds = cfg.seeds;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double spearman_rank(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("spearman_rank: need two aligned series");
    const auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            r[order[i]] = static_cast<double>(i);
        return r;
    };
    const std::vector<double> rx = ranks(xs);
    const std::vector<double> ry = ranks(ys);
    const double n = static_cast<double>(xs.size());
    double d2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

} // namespace pg
