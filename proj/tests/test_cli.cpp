// Drives the installed CLI binary (path in argv[1]) through its contract:
// exit codes, manifest-first output layout, PGM quantization of results.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pg/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;

int run(const std::string& args) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::vector<unsigned char> pgm_pixels(const std::string& path) {
    const std::string data = pg::read_file(path);
    // P5\n<w> <h>\n255\n<pixels>
    std::size_t pos = data.find("255\n");
    REQUIRE(pos != std::string::npos);
    pos += 4;
    return {data.begin() + static_cast<std::ptrdiff_t>(pos), data.end()};
}

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("toy --problem nosuch --outdir cli_t0") == 2);
    CHECK(run("toy --problem f3 --mode lrelu --slope-fwd 0.3 --p 0.2 "
              "--outdir cli_t0") == 2); // violates 1 > p > s > 0
    CHECK(run("toy --mode relu --slope-fwd 0.5 --outdir cli_t0") == 2);
    CHECK(run("gradmag --profile bogus --outdir cli_t0") == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("numerical failure exits with code 3") {
    // without the self-normalizing bn layers an absurd learning rate
    // overflows the activations within a few epochs
    CHECK(run("train --classes 3 --per-class 4 --test-per-class 2 --image-size 12 "
              "--no-bn --epochs 6 --batch 6 --lr 1e9 --seed 3 --outdir cli_t1") == 3);
    fs::remove_all("cli_t1");
}

TEST_CASE("f1 relu run keeps negative pixels; proxy escape whitens f3") {
    fs::remove_all("cli_t2");
    REQUIRE(run("toy --problem f1 --mode relu --iters 120 --lr 0.2 --seed 5 "
                "--init-noise 0.4 --outdir cli_t2") == 0);
    CHECK(fs::exists("cli_t2/manifest.json"));
    CHECK(fs::exists("cli_t2/trajectory.csv"));
    const auto init = pgm_pixels("cli_t2/init.pgm");
    const auto fin = pgm_pixels("cli_t2/final.pgm");
    REQUIRE(init.size() == fin.size());
    int frozen = 0;
    for (std::size_t i = 0; i < init.size(); ++i) {
        if (init[i] < 128) { // negative pixel: must be untouched by pure ReLU
            CHECK(fin[i] == init[i]);
            ++frozen;
        }
    }
    CHECK(frozen > 100);
    fs::remove_all("cli_t2");

    fs::remove_all("cli_t3");
    REQUIRE(run("toy --problem f3 --mode proxygrad --slope-fwd 0.1 --slope-bwd 0.5 "
                "--p 0.2 --iters 200 --lr 0.05 --seed 5 --init-noise 0.3 "
                "--outdir cli_t3") == 0);
    for (const unsigned char px : pgm_pixels("cli_t3/final.pgm"))
        CHECK(px >= 253); // all-white within quantization
    fs::remove_all("cli_t3");
}

TEST_CASE("race of patterns shows up in the trajectory csv") {
    // With s = 0.5 the negative half catches up ~5x sooner than with s = 0.1.
    const auto crossing_from_csv = [](const std::string& outdir) {
        std::ifstream in(outdir + "/trajectory.csv");
        std::string line;
        std::getline(in, line); // header
        // objective growth rate changes when the negative pixels cross zero;
        // detect the first iteration where grad_norm jumps (slope s -> 1)
        double prev = -1.0;
        int iteration = 0;
        while (std::getline(in, line)) {
            const std::size_t c1 = line.find(',');
            const std::size_t c2 = line.find(',', c1 + 1);
            const double gn = std::strtod(line.c_str() + c2 + 1, nullptr);
            if (prev > 0.0 && gn > prev * 1.5) return iteration;
            prev = gn;
            ++iteration;
        }
        return -1;
    };

    fs::remove_all("cli_t4a");
    fs::remove_all("cli_t4b");
    // all pixels start at -0.5 via a pure background init (noise 0)
    REQUIRE(run("toy --problem f2 --mode lrelu --slope-fwd 0.1 --iters 700 "
                "--lr 0.01 --init-background -0.5 --init-noise 0 --seed 2 "
                "--outdir cli_t4a") == 0);
    REQUIRE(run("toy --problem f2 --mode lrelu --slope-fwd 0.5 --iters 700 "
                "--lr 0.01 --init-background -0.5 --init-noise 0 --seed 2 "
                "--outdir cli_t4b") == 0);
    const int slow = crossing_from_csv("cli_t4a");
    const int fast = crossing_from_csv("cli_t4b");
    CHECK(std::abs(slow - 500) <= 1); // 0.5 / (0.1 * 0.01)
    CHECK(std::abs(fast - 100) <= 1); // 0.5 / (0.5 * 0.01)
    fs::remove_all("cli_t4a");
    fs::remove_all("cli_t4b");
}

TEST_CASE("am subcommand drives a JSON network") {
    fs::remove_all("cli_t5");
    fs::create_directories("cli_t5");
    pg::write_file("cli_t5/net.json", R"({
      "input": [1, 1, 12, 12],
      "layers": [
        {"type": "conv2d", "out_channels": 4, "kernel": 3, "pad": "same"},
        {"type": "activation"},
        {"type": "global_avg_pool"},
        {"type": "dense", "units": 3},
        {"type": "select", "index": 0}
      ]
    })");
    REQUIRE(run("am --net-spec cli_t5/net.json --mode proxygrad --slope-bwd 0.3 "
                "--iters 30 --lr 1.0 --weights-seed 4 --seed 4 "
                "--outdir cli_t5/out") == 0);
    CHECK(fs::exists("cli_t5/out/final.pgm"));
    CHECK(fs::exists("cli_t5/out/trajectory.csv"));
    fs::remove_all("cli_t5");
}

int main(int argc, char** argv) {
    doctest::Context context;
    context.applyCommandLine(1, argv); // keep doctest away from our path arg
    if (argc > 1) g_cli = argv[1];
    if (g_cli.empty()) {
        std::fprintf(stderr, "usage: test_cli <path-to-pgrad>\n");
        return 1;
    }
    return context.run();
}
