#pragma once

#include <string>

#include "pg/graph.hpp"

namespace pg {

/// The white-image testbed: activation-maximization problems whose known
/// global optimum is the all-ones image. Four kinds:
///   F1    sum ReLU(x)                    -- sparse gradients
///   F2    sum LReLU_s(x)                 -- race of patterns
///   F3    sum LReLU_s(x) + LReLU_s(-p x) -- local maxima, needs 1 > p > s > 0
///   Conv  sum LReLU_s(corr(x, [1 0 -p])) -- local maxima via convolution
struct WhiteImageProblem {
    enum class Kind { F1, F2, F3, Conv };

    Kind kind = Kind::F1;
    double slope = 0.1; // s; unused by F1
    double scale = 0.2; // p; F3 and Conv only
    int height = 32;
    int width = 32;

    static WhiteImageProblem f1(int h, int w);
    static WhiteImageProblem f2(double s, int h, int w);
    static WhiteImageProblem f3(double s, double p, int h, int w);
    static WhiteImageProblem conv(double s, double p, int h, int w);

    /// Image shape used by this problem: single channel (1, H, W).
    std::vector<int> image_shape() const { return {1, height, width}; }
};

WhiteImageProblem::Kind problem_kind_from_name(const std::string& name);
std::string problem_kind_name(WhiteImageProblem::Kind kind);

/// Closed-form objective value. Input elements must lie in [-1, 1].
double eval(const WhiteImageProblem& problem, const Tensor& x);

/// Exact per-pixel derivative of the closed form. Pixels sitting exactly
/// on a rectifier kink are reported via `kink_count` (if non-null) and
/// receive the x >= 0 branch value.
Tensor analytic_grad(const WhiteImageProblem& problem, const Tensor& x,
                     int* kink_count = nullptr);

/// Graph whose forward equals eval() and whose backward under rule (s, s)
/// equals analytic_grad() away from kinks. The input placeholder is named
/// "x"; every rectifier carries `rule`.
Graph build_graph(const WhiteImageProblem& problem, const ActivationRule& rule);

struct Optimum {
    Tensor x_star; // all-ones image
    double f_star = 0.0;
};

Optimum optimum(const WhiteImageProblem& problem);

} // namespace pg
