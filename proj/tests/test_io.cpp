#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "pg/io.hpp"
#include "pg/netspec.hpp"

using namespace pg;

TEST_CASE("pgm quantization endpoints and round trip") {
    CHECK(quantize_unit(-1.0) == 0);
    CHECK(quantize_unit(1.0) == 255);
    CHECK(quantize_unit(0.0) == 128);
    CHECK(quantize_unit(-2.0) == 0); // clamped first

    for (int i = 0; i <= 200; ++i) {
        const double v = -1.0 + 2.0 * i / 200.0;
        const double back = quantize_unit(v) / 127.5 - 1.0;
        CHECK(std::fabs(back - v) <= 1.0 / 255.0 + 1e-12);
    }
}

TEST_CASE("pgm writer emits the expected bytes") {
    const Tensor img = Tensor::from_data({1, 2, 2}, {-1.0, 1.0, 0.0, 0.5});
    write_pgm("io_fixture.pgm", img);
    const std::string data = read_file("io_fixture.pgm");
    CHECK(data.substr(0, 3) == "P5\n");
    REQUIRE(data.size() >= 4);
    const auto pix = data.substr(data.size() - 4);
    CHECK(static_cast<unsigned char>(pix[0]) == 0);
    CHECK(static_cast<unsigned char>(pix[1]) == 255);
    CHECK(static_cast<unsigned char>(pix[2]) == 128);
    CHECK(static_cast<unsigned char>(pix[3]) == 191);
    std::remove("io_fixture.pgm");

    CHECK_THROWS_AS(write_pgm("nope.pgm", Tensor::ones({2, 2, 2})),
                    std::invalid_argument);
}

TEST_CASE("ppm writer handles three channels") {
    const Tensor img = Tensor::full({3, 2, 2}, 1.0);
    CHECK(write_image("io_fixture_color", img) == "io_fixture_color.ppm");
    const std::string data = read_file("io_fixture_color.ppm");
    CHECK(data.substr(0, 3) == "P6\n");
    CHECK(static_cast<unsigned char>(data[data.size() - 1]) == 255);
    std::remove("io_fixture_color.ppm");
}

TEST_CASE("csv doubles round-trip and use a point separator") {
    CHECK(csv_double(0.1) == "0.1");
    CHECK(csv_double(1.0) == "1");
    for (const double v : {3.141592653589793, -0.3333333333333333, 1e-17, 25.0}) {
        const std::string s = csv_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
        CHECK(s.find(',') == std::string::npos);
    }
}

TEST_CASE("csv writer") {
    write_csv("io_fixture.csv", {"a", "b"}, {{"1", "2"}, {"3", "4"}});
    CHECK(read_file("io_fixture.csv") == "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(write_csv("io_fixture.csv", {"a"}, {{"1", "2"}}),
                    std::invalid_argument);
    std::remove("io_fixture.csv");
}

TEST_CASE("netspec builds a runnable graph") {
    const std::string spec = R"({
      "input": [1, 1, 8, 8],
      "layers": [
        {"type": "conv2d", "out_channels": 4, "kernel": 3, "pad": "same",
         "label": "conv1"},
        {"type": "batchnorm"},
        {"type": "activation"},
        {"type": "maxpool", "size": 2},
        {"type": "global_avg_pool"},
        {"type": "dense", "units": 3, "label": "logits"},
        {"type": "select", "index": 1}
      ]
    })";
    Rng rng(1, "weights");
    Graph g = graph_from_netspec_json(spec, rng);
    g.set_all_activation_rules(ActivationRule::proxy(0.0, 0.2));

    Bindings b;
    Rng xr(2);
    b.tensors["x"] = Tensor::gaussian({1, 1, 8, 8}, 0.0, 0.5, xr);
    TapeState tape;
    const double out = forward(g, b, tape);
    CHECK(std::isfinite(out));
    backward(g, tape);
    CHECK(gradient_of(g, tape, "x").numel() == 64);
    CHECK(g.node_by_probe("conv1") >= 0);
}

TEST_CASE("netspec error reporting names the offending layer") {
    Rng rng(1);
    CHECK_THROWS_WITH_AS(
        graph_from_netspec_json(
            R"({"input": [1,1,4,4], "layers": [{"type": "warp"}]})", rng),
        "netspec: layer 0: unknown layer type 'warp'", std::invalid_argument);

    CHECK_THROWS_AS(graph_from_netspec_json(R"({"input": [1,1,4,4], "layers": []})",
                                            rng),
                    std::invalid_argument); // non-scalar output
    CHECK_THROWS_AS(graph_from_netspec_json("{not json", rng), std::invalid_argument);
}
