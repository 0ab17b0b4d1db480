#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pg/analysis.hpp"

using namespace pg;

TEST_CASE("closed-form moments at the endpoints") {
    // slope 1 is the identity on a standard normal
    CHECK(rectified_gaussian_mean(1.0) == 0.0);
    CHECK(rectified_gaussian_var(1.0) == 1.0);

    CHECK(rectified_gaussian_mean(0.0) ==
          doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(rectified_gaussian_mean(0.5) ==
          doctest::Approx(0.19947114020071635).epsilon(1e-14));
    CHECK(rectified_gaussian_var(0.0) ==
          doctest::Approx(0.34084505690810465).epsilon(1e-13));

    CHECK_THROWS_AS(rectified_gaussian_mean(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(rectified_gaussian_var(1.1), std::invalid_argument);
}

TEST_CASE("variance is strictly increasing in the slope") {
    double prev = rectified_gaussian_var(0.0);
    for (int i = 1; i <= 100; ++i) {
        const double v = rectified_gaussian_var(i / 100.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("monte carlo agrees with the closed forms within 4 standard errors") {
    for (int i = 0; i <= 10; ++i) {
        const double s = i / 10.0;
        Rng rng(1000 + static_cast<std::uint64_t>(i), "moments");
        const McMoments mc = monte_carlo_moments_detailed(s, 1000000, rng);
        CHECK(std::fabs(mc.moments.mean - rectified_gaussian_mean(s)) <=
              4.0 * mc.se_mean);
        CHECK(std::fabs(mc.moments.variance - rectified_gaussian_var(s)) <=
              4.0 * mc.se_var);
    }
}

TEST_CASE("monte carlo basics") {
    Rng rng(7);
    const MomentPair identity = monte_carlo_moments(1.0, 100000, rng);
    CHECK(std::fabs(identity.mean) <= 4.0 / std::sqrt(100000.0));

    Rng a(55), b(55);
    const MomentPair ma = monte_carlo_moments(0.3, 10000, a);
    const MomentPair mb = monte_carlo_moments(0.3, 10000, b);
    CHECK(ma.mean == mb.mean);
    CHECK(ma.variance == mb.variance);

    CHECK_THROWS_AS(monte_carlo_moments(0.3, 1, a), std::invalid_argument);
}

TEST_CASE("spearman rank correlation") {
    CHECK(spearman_rank({1, 2, 3, 4}, {10, 20, 30, 40}) == 1.0);
    CHECK(spearman_rank({1, 2, 3, 4}, {5, 4, 3, 2}) == -1.0);
    CHECK(std::fabs(spearman_rank({1, 2, 3, 4}, {1, 3, 2, 4})) < 1.0);
}

namespace {

Dataset tiny_dataset(std::uint64_t seed) {
    Rng rng(seed, "dataset");
    return synthetic_shapes(6, 5, 12, rng);
}

TrendConfig tiny_trend() {
    TrendConfig cfg;
    cfg.net.stage_widths = {6, 12};
    cfg.net.blocks_per_stage = {1, 1};
    cfg.net.classes = 5;
    cfg.net.input_shape = {1, 12, 12};
    cfg.seeds = 5;
    cfg.batch_size = 6;
    cfg.base_seed = 17;
    return cfg;
}

} // namespace

TEST_CASE("modes coincide when both rules are (1,1)") {
    const Dataset data = tiny_dataset(3);

    TrendConfig leaky = tiny_trend();
    leaky.mode = SlopeMode::Leaky;
    leaky.slopes = {1.0};
    leaky.batchnorm = false;

    TrendConfig proxy = leaky;
    proxy.mode = SlopeMode::ProxyGrad;
    proxy.proxy_forward_slope = 1.0;

    const auto a = layer_gradient_magnitude(leaky, data);
    const auto b = layer_gradient_magnitude(proxy, data);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_abs_grad == b[i].mean_abs_grad);
        CHECK(a[i].std_dev == b[i].std_dev);
    }
}

TEST_CASE("gradient magnitude trends at the first block conv") {
    const Dataset data = tiny_dataset(4);

    TrendConfig cfg = tiny_trend();
    cfg.slopes = {0.0, 0.3, 0.6, 0.9};

    const auto means = [](const std::vector<GradientProfileRow>& rows) {
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r.mean_abs_grad);
        return out;
    };

    cfg.mode = SlopeMode::Leaky;
    cfg.batchnorm = true;
    CHECK(spearman_rank(cfg.slopes, means(layer_gradient_magnitude(cfg, data))) ==
          -1.0);

    cfg.mode = SlopeMode::ProxyGrad;
    CHECK(spearman_rank(cfg.slopes, means(layer_gradient_magnitude(cfg, data))) ==
          1.0);

    cfg.batchnorm = false;
    cfg.mode = SlopeMode::Leaky;
    CHECK(spearman_rank(cfg.slopes, means(layer_gradient_magnitude(cfg, data))) ==
          1.0);
    cfg.mode = SlopeMode::ProxyGrad;
    CHECK(spearman_rank(cfg.slopes, means(layer_gradient_magnitude(cfg, data))) ==
          1.0);
}

TEST_CASE("bn input std grows with the leaky slope at post-rectifier layers") {
    const Dataset data = tiny_dataset(5);
    TrendConfig cfg = tiny_trend();
    cfg.mode = SlopeMode::Leaky;
    cfg.slopes = {0.0, 1.0};

    const auto rows = bn_input_std_profile(cfg, data);
    int compared = 0;
    for (const auto& low : rows) {
        if (low.slope != 0.0 || low.layer == "stem.bn") continue;
        for (const auto& high : rows) {
            if (high.slope == 1.0 && high.layer == low.layer) {
                CHECK(high.mean_std > low.mean_std);
                ++compared;
            }
        }
    }
    CHECK(compared >= 4); // bn1/bn2 per block plus the downsample bn

    // deterministic given the seed
    const auto again = bn_input_std_profile(cfg, data);
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(again[i].mean_std == rows[i].mean_std);
}

TEST_CASE("constant-zero batch has zero std at the stem bn input") {
    Dataset zeros;
    zeros.images = Tensor::zeros({8, 1, 12, 12});
    zeros.labels.assign(8, 0);
    zeros.classes = 2;

    TrendConfig cfg = tiny_trend();
    cfg.net.classes = 2;
    cfg.slopes = {0.3};
    cfg.seeds = 1;
    const auto rows = bn_input_std_profile(cfg, zeros);
    bool found = false;
    for (const auto& r : rows)
        if (r.layer == "stem.bn") {
            CHECK(r.mean_std == 0.0);
            found = true;
        }
    CHECK(found);
}
