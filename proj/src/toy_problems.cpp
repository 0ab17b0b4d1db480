#include "pg/toy_problems.hpp"

#include <cmath>
#include <stdexcept>

namespace pg {

namespace {

void require_toy_params(double s, double p, bool needs_p) {
    if (s < 0.0 || s >= 1.0)
        throw std::invalid_argument("white image problem: slope must satisfy 0 <= s < 1");
    if (needs_p && !(1.0 > p && p > s && s > 0.0))
        throw std::invalid_argument("white image problem: requires 1 > p > s > 0");
}

double lrelu(double x, double s) { return x > s * x ? x : s * x; }

void check_image(const WhiteImageProblem& problem, const Tensor& x) {
    if (x.shape() != problem.image_shape())
        throw std::invalid_argument("white image problem: expected image shape " +
                                    shape_str(problem.image_shape()) + ", got " +
                                    shape_str(x.shape()));
    for (std::size_t i = 0; i < x.numel(); ++i)
        if (x[i] < -1.0 || x[i] > 1.0)
            throw std::invalid_argument(
                "white image problem: input pixel outside [-1, 1]");
}

} // namespace

WhiteImageProblem WhiteImageProblem::f1(int h, int w) {
    WhiteImageProblem p;
    p.kind = Kind::F1;
    p.slope = 0.0;
    p.height = h;
    p.width = w;
    return p;
}

WhiteImageProblem WhiteImageProblem::f2(double s, int h, int w) {
    require_toy_params(s, 0.0, false);
    WhiteImageProblem p;
    p.kind = Kind::F2;
    p.slope = s;
    p.height = h;
    p.width = w;
    return p;
}

WhiteImageProblem WhiteImageProblem::f3(double s, double pscale, int h, int w) {
    require_toy_params(s, pscale, true);
    WhiteImageProblem p;
    p.kind = Kind::F3;
    p.slope = s;
    p.scale = pscale;
    p.height = h;
    p.width = w;
    return p;
}

WhiteImageProblem WhiteImageProblem::conv(double s, double pscale, int h, int w) {
    require_toy_params(s, pscale, true);
    if (w < 3)
        throw std::invalid_argument("conv problem: width must be >= 3");
    WhiteImageProblem p;
    p.kind = Kind::Conv;
    p.slope = s;
    p.scale = pscale;
    p.height = h;
    p.width = w;
    return p;
}

WhiteImageProblem::Kind problem_kind_from_name(const std::string& name) {
    if (name == "f1") return WhiteImageProblem::Kind::F1;
    if (name == "f2") return WhiteImageProblem::Kind::F2;
    if (name == "f3") return WhiteImageProblem::Kind::F3;
    if (name == "conv") return WhiteImageProblem::Kind::Conv;
    throw std::invalid_argument("unknown problem '" + name +
                                "' (expected f1, f2, f3 or conv)");
}

std::string problem_kind_name(WhiteImageProblem::Kind kind) {
    switch (kind) {
    case WhiteImageProblem::Kind::F1: return "f1";
    case WhiteImageProblem::Kind::F2: return "f2";
    case WhiteImageProblem::Kind::F3: return "f3";
    case WhiteImageProblem::Kind::Conv: return "conv";
    }
    return "?";
}

double eval(const WhiteImageProblem& problem, const Tensor& x) {
    check_image(problem, x);
    const double s = problem.slope;
    const double p = problem.scale;
    double acc = 0.0;
    switch (problem.kind) {
    case WhiteImageProblem::Kind::F1:
        for (std::size_t i = 0; i < x.numel(); ++i) acc += x[i] > 0.0 ? x[i] : 0.0;
        break;
    case WhiteImageProblem::Kind::F2:
        for (std::size_t i = 0; i < x.numel(); ++i) acc += lrelu(x[i], s);
        break;
    case WhiteImageProblem::Kind::F3:
        for (std::size_t i = 0; i < x.numel(); ++i)
            acc += lrelu(x[i], s) + lrelu(-p * x[i], s);
        break;
    case WhiteImageProblem::Kind::Conv: {
        // correlation with the 1x3 kernel [1, 0, -p], valid columns only
        const int h = problem.height, w = problem.width;
        for (int r = 0; r < h; ++r) {
            const double* row = x.data() + static_cast<std::size_t>(r) * w;
            for (int c = 0; c + 2 < w; ++c) acc += lrelu(row[c] - p * row[c + 2], s);
        }
        break;
    }
    }
    return acc;
}

Tensor analytic_grad(const WhiteImageProblem& problem, const Tensor& x,
                     int* kink_count) {
    check_image(problem, x);
    const double s = problem.slope;
    const double p = problem.scale;
    int kinks = 0;
    Tensor g = Tensor::zeros(x.shape());

    const auto branch = [&kinks](double v, double pos, double neg) {
        if (v == 0.0) {
            ++kinks;
            return pos;
        }
        return v > 0.0 ? pos : neg;
    };

    switch (problem.kind) {
    case WhiteImageProblem::Kind::F1:
        for (std::size_t i = 0; i < x.numel(); ++i) g[i] = branch(x[i], 1.0, 0.0);
        break;
    case WhiteImageProblem::Kind::F2:
        for (std::size_t i = 0; i < x.numel(); ++i) g[i] = branch(x[i], 1.0, s);
        break;
    case WhiteImageProblem::Kind::F3:
        // d/dx [LReLU_s(x) + LReLU_s(-p x)] = 1 - ps on x > 0, s - p on x < 0
        for (std::size_t i = 0; i < x.numel(); ++i)
            g[i] = branch(x[i], 1.0 - p * s, s - p);
        break;
    case WhiteImageProblem::Kind::Conv: {
        const int h = problem.height, w = problem.width;
        for (int r = 0; r < h; ++r) {
            const double* row = x.data() + static_cast<std::size_t>(r) * w;
            double* grow = g.data() + static_cast<std::size_t>(r) * w;
            for (int c = 0; c + 2 < w; ++c) {
                const double o = row[c] - p * row[c + 2];
                const double d = branch(o, 1.0, s);
                grow[c] += d;
                grow[c + 2] -= p * d;
            }
        }
        break;
    }
    }
    if (kink_count) *kink_count = kinks;
    return g;
}

Graph build_graph(const WhiteImageProblem& problem, const ActivationRule& rule) {
    const double defining = problem.kind == WhiteImageProblem::Kind::F1 ? 0.0
                                                                        : problem.slope;
    if (rule.forward_slope != defining)
        throw std::invalid_argument(
            "build_graph: rule forward slope must equal the problem's slope (" +
            std::to_string(defining) + ") so the graph forward matches eval()");

    Graph g;
    const int x = g.add_input("x", problem.image_shape());
    switch (problem.kind) {
    case WhiteImageProblem::Kind::F1:
    case WhiteImageProblem::Kind::F2: {
        const int a = g.add_activation(x, rule);
        g.set_output(g.add_reduce_sum(a));
        break;
    }
    case WhiteImageProblem::Kind::F3: {
        const int a = g.add_activation(x, rule);
        const int scaled = g.add_scale(x, -problem.scale);
        const int b = g.add_activation(scaled, rule);
        g.set_output(g.add_reduce_sum(g.add_add(a, b)));
        break;
    }
    case WhiteImageProblem::Kind::Conv: {
        const int img = g.add_reshape(x, {1, 1, problem.height, problem.width});
        const int kernel =
            g.add_param("conv_kernel",
                        Tensor::from_data({1, 1, 1, 3}, {1.0, 0.0, -problem.scale}));
        const int conv = g.add_conv2d(img, kernel, std::nullopt, Conv2dAttrs{1, false});
        const int a = g.add_activation(conv, rule);
        g.set_output(g.add_reduce_sum(a));
        break;
    }
    }
    return g;
}

Optimum optimum(const WhiteImageProblem& problem) {
    Optimum o;
    o.x_star = Tensor::ones(problem.image_shape());
    o.f_star = eval(problem, o.x_star);
    return o;
}

} // namespace pg
