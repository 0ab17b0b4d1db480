#pragma once

#include <string>

#include "pg/graph.hpp"
#include "pg/rng.hpp"

namespace pg {

/// Builds a sequential graph from a JSON network description:
///
///   {
///     "input": [1, 1, 16, 16],          // N, C, H, W
///     "layers": [
///       {"type": "conv2d", "out_channels": 8, "kernel": 3, "stride": 1,
///        "pad": "same", "bias": false, "label": "conv1"},
///       {"type": "batchnorm", "label": "bn1"},
///       {"type": "activation"},
///       {"type": "maxpool", "size": 2},
///       {"type": "global_avg_pool"},
///       {"type": "flatten"},
///       {"type": "dense", "units": 10, "label": "logits"},
///       {"type": "select", "index": 3}    // or {"type": "sum"}
///     ]
///   }
///
/// Weights are Kaiming-initialized from `rng`; activation rules are set
/// later via Graph::set_all_activation_rules. The final layer must leave
/// a scalar. The input placeholder is named "x".
Graph graph_from_netspec_json(const std::string& json_text, Rng& rng);

Graph graph_from_netspec_file(const std::string& path, Rng& rng);

} // namespace pg
