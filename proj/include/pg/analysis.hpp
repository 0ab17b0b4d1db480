#pragma once

#include <string>
#include <vector>

#include "pg/rng.hpp"
#include "pg/train.hpp"

namespace pg {

struct MomentPair {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean of max(Z, sZ) for Z ~ N(0,1): (1 - s) / sqrt(2 pi).
double rectified_gaussian_mean(double s);

/// Variance of max(Z, sZ): (s^2 + 1)/2 - (1 - s)^2 / (2 pi).
/// Strictly increasing on [0, 1].
double rectified_gaussian_var(double s);

struct McMoments {
    MomentPair moments;
    double se_mean = 0.0; // standard error of the sample mean
    double se_var = 0.0;  // standard error of the sample variance
    std::size_t n = 0;
};

/// Sample moments of max(Z, sZ) over n draws, with plug-in standard
/// errors. n >= 2.
McMoments monte_carlo_moments_detailed(double s, std::size_t n, Rng& rng);
MomentPair monte_carlo_moments(double s, std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// slope-trend profiling on the tiny residual network
// ---------------------------------------------------------------------------

enum class SlopeMode { Leaky, ProxyGrad };

std::string slope_mode_name(SlopeMode mode);
SlopeMode slope_mode_from_name(const std::string& name);

struct TrendConfig {
    TinyResNetSpec net;                        // rule is overridden per slope
    std::vector<double> slopes{0.0, 0.3, 0.6, 0.9};
    SlopeMode mode = SlopeMode::Leaky;
    double proxy_forward_slope = 0.0; // forward slope used by ProxyGrad mode
    bool batchnorm = true;
    int seeds = 20;
    int batch_size = 8;
    std::uint64_t base_seed = 0;
    std::vector<std::string> probes{"s1b1.conv1"};
};

struct GradientProfileRow {
    std::string mode;
    double slope = 0.0;
    bool batchnorm = true;
    std::string layer;
    double mean_abs_grad = 0.0; // seed mean of the batch/channel mean |gradient|
    double std_dev = 0.0;       // across seeds
    int n_seeds = 0;
};

/// For each seed: re-initialize the network, draw a batch, run one
/// cross-entropy forward/backward (training mode), and record the mean
/// absolute gradient at each probe node's output. Seeds share weights and
/// batches across slopes so the comparison is paired.
std::vector<GradientProfileRow> layer_gradient_magnitude(const TrendConfig& cfg,
                                                         const Dataset& data);

struct BnStdRow {
    std::string mode;
    double slope = 0.0;
    std::string layer;
    double mean_std = 0.0; // seed mean of the BN-input standard deviation
    double std_dev = 0.0;
    int n_seeds = 0;
};

/// Forward-only profile of the standard deviation of every BatchNorm
/// input, per slope, aggregated over seeds. The reported value is the
/// mean over channels of the per-channel std over (N,H,W) -- the divisor
/// the normalization itself applies. The stem BN sits before the first
/// rectifier, so its input is slope-independent by construction; trend
/// checks should use the remaining layers.
std::vector<BnStdRow> bn_input_std_profile(const TrendConfig& cfg,
                                           const Dataset& data);

/// Spearman rank correlation (no tie handling; ranks assumed distinct).
double spearman_rank(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace pg
