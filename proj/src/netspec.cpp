#include "pg/netspec.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "pg/io.hpp"

namespace pg {

using nlohmann::json;

namespace {

struct ShapeTracker {
    std::vector<int> dims; // running output shape
};

[[noreturn]] void fail(std::size_t layer_idx, const std::string& msg) {
    throw std::invalid_argument("netspec: layer " + std::to_string(layer_idx) + ": " +
                                msg);
}

} // namespace

Graph graph_from_netspec_json(const std::string& json_text, Rng& rng) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("netspec: JSON parse error: ") +
                                    e.what());
    }
    if (!doc.contains("input") || !doc["input"].is_array())
        throw std::invalid_argument("netspec: missing \"input\" shape array");
    std::vector<int> in_shape = doc["input"].get<std::vector<int>>();
    if (in_shape.size() != 4)
        throw std::invalid_argument("netspec: \"input\" must be (N,C,H,W)");

    Graph g;
    int cur = g.add_input("x", in_shape);
    ShapeTracker shape{in_shape};
    int param_seq = 0;

    if (!doc.contains("layers") || !doc["layers"].is_array())
        throw std::invalid_argument("netspec: missing \"layers\" array");

    const auto& layers = doc["layers"];
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const json& layer = layers[li];
        if (!layer.contains("type")) fail(li, "missing \"type\"");
        const std::string type = layer["type"].get<std::string>();
        const std::string label = layer.value("label", std::string());
        const std::string pname = "p" + std::to_string(param_seq++);

        if (type == "conv2d") {
            if (shape.dims.size() != 4) fail(li, "conv2d needs a 4-D input");
            const int oc = layer.value("out_channels", 0);
            const int k = layer.value("kernel", 3);
            const int stride = layer.value("stride", 1);
            const std::string pad = layer.value("pad", std::string("same"));
            const bool bias = layer.value("bias", false);
            if (oc < 1 || k < 1 || stride < 1) fail(li, "bad conv2d parameters");
            if (pad != "same" && pad != "valid") fail(li, "pad must be same|valid");
            const int ic = shape.dims[1];
            const double std = std::sqrt(2.0 / (static_cast<double>(ic) * k * k));
            const int w = g.add_param(pname + ".w",
                                      Tensor::gaussian({oc, ic, k, k}, 0.0, std, rng));
            std::optional<int> b;
            if (bias) b = g.add_param(pname + ".b", Tensor::zeros({oc}));
            const Conv2dAttrs attrs{stride, pad == "same"};
            shape.dims = conv2d_output_shape(shape.dims,
                                             std::vector<int>{oc, ic, k, k}, attrs);
            cur = g.add_conv2d(cur, w, b, attrs, label);
        } else if (type == "batchnorm") {
            if (shape.dims.size() != 4) fail(li, "batchnorm needs a 4-D input");
            const int c = shape.dims[1];
            const int gamma = g.add_param(pname + ".gamma", Tensor::ones({c}));
            const int beta = g.add_param(pname + ".beta", Tensor::zeros({c}));
            cur = g.add_batchnorm(cur, gamma, beta, BatchNormAttrs{}, label);
        } else if (type == "activation") {
            cur = g.add_activation(cur, ActivationRule::relu(), label);
        } else if (type == "maxpool") {
            if (shape.dims.size() != 4) fail(li, "maxpool needs a 4-D input");
            const int size = layer.value("size", 2);
            if (size < 1) fail(li, "bad pool size");
            shape.dims = {shape.dims[0], shape.dims[1], shape.dims[2] / size,
                          shape.dims[3] / size};
            cur = g.add_maxpool2d(cur, size);
        } else if (type == "global_avg_pool") {
            if (shape.dims.size() != 4) fail(li, "global_avg_pool needs a 4-D input");
            shape.dims = {shape.dims[0], shape.dims[1]};
            cur = g.add_global_avg_pool(cur);
        } else if (type == "flatten") {
            int rest = 1;
            for (std::size_t d = 1; d < shape.dims.size(); ++d) rest *= shape.dims[d];
            shape.dims = {shape.dims[0], rest};
            cur = g.add_flatten(cur);
        } else if (type == "dense") {
            if (shape.dims.size() != 2) fail(li, "dense needs a 2-D input (flatten first?)");
            const int units = layer.value("units", 0);
            const bool bias = layer.value("bias", false);
            if (units < 1) fail(li, "bad dense units");
            const int f = shape.dims[1];
            const double std = std::sqrt(2.0 / static_cast<double>(f));
            const int w =
                g.add_param(pname + ".w", Tensor::gaussian({units, f}, 0.0, std, rng));
            std::optional<int> b;
            if (bias) b = g.add_param(pname + ".b", Tensor::zeros({units}));
            shape.dims = {shape.dims[0], units};
            cur = g.add_dense(cur, w, b, label);
        } else if (type == "sum") {
            shape.dims = {1};
            cur = g.add_reduce_sum(cur);
        } else if (type == "select") {
            const int index = layer.value("index", 0);
            shape.dims = {1};
            cur = g.add_select(cur, index);
        } else {
            fail(li, "unknown layer type '" + type + "'");
        }
    }

    if (shape.dims != std::vector<int>{1})
        throw std::invalid_argument(
            "netspec: network must end in a scalar (add \"sum\" or \"select\")");
    g.set_output(cur);
    return g;
}

Graph graph_from_netspec_file(const std::string& path, Rng& rng) {
    return graph_from_netspec_json(read_file(path), rng);
}

} // namespace pg
