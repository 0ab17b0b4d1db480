#include "pg/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pg {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (const int e : shape) {
        if (e <= 0) {
            throw std::invalid_argument("tensor extent must be positive, got " +
                                        shape_str(shape));
        }
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor Tensor::full(const std::vector<int>& shape, double value) {
    Tensor t;
    const std::size_t n = shape_numel(shape);
    t.shape_ = shape;
    t.data_.assign(n, value);
    t.ensure_finite("full");
    return t;
}

Tensor Tensor::from_data(const std::vector<int>& shape, std::vector<double> data) {
    const std::size_t n = shape_numel(shape);
    if (n != data.size()) {
        throw std::invalid_argument("from_data: shape " + shape_str(shape) +
                                    " does not match data length " +
                                    std::to_string(data.size()));
    }
    Tensor t;
    t.shape_ = shape;
    t.data_ = std::move(data);
    t.ensure_finite("from_data");
    return t;
}

Tensor Tensor::gaussian(const std::vector<int>& shape, double mean, double std,
                        Rng& rng) {
    if (std < 0.0) throw std::invalid_argument("gaussian: std must be >= 0");
    Tensor t;
    t.shape_ = shape;
    t.data_.resize(shape_numel(shape));
    for (double& v : t.data_) v = rng.normal(mean, std);
    t.ensure_finite("gaussian");
    return t;
}

std::size_t Tensor::flat_index(const std::vector<int>& index) const {
    if (index.size() != shape_.size()) {
        throw std::invalid_argument("index rank mismatch");
    }
    std::size_t off = 0;
    for (std::size_t d = 0; d < shape_.size(); ++d) {
        if (index[d] < 0 || index[d] >= shape_[d]) {
            throw std::out_of_range("index out of range in dim " + std::to_string(d));
        }
        off = off * static_cast<std::size_t>(shape_[d]) +
              static_cast<std::size_t>(index[d]);
    }
    return off;
}

void Tensor::ensure_finite(const std::string& context) const {
    for (const double v : data_) {
        if (!std::isfinite(v)) {
            throw std::domain_error("non-finite value produced by " + context);
        }
    }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
}

template <typename F>
Tensor map2(const Tensor& a, const Tensor& b, const char* op, F f) {
    check_same_shape(a, b, op);
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
    return Tensor::from_data(a.shape(), std::move(out));
}

template <typename F>
Tensor map1(const Tensor& a, F f) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
    return Tensor::from_data(a.shape(), std::move(out));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return map2(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return map2(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return map2(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double c) {
    return map1(a, [c](double x) { return c * x; });
}

Tensor neg(const Tensor& a) {
    return map1(a, [](double x) { return -x; });
}

Tensor abs(const Tensor& a) {
    return map1(a, [](double x) { return std::fabs(x); });
}

Tensor max_with_scalar(const Tensor& a, double c) {
    return map1(a, [c](double x) { return x > c ? x : c; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    return map1(a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); });
}

double reduce_sum(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a[i];
    if (!std::isfinite(s)) throw std::domain_error("non-finite reduce_sum");
    return s;
}

double l2_norm(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * a[i];
    const double n = std::sqrt(s);
    if (!std::isfinite(n)) throw std::domain_error("non-finite l2_norm");
    return n;
}

double mean_abs(const Tensor& a) {
    if (a.numel() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += std::fabs(a[i]);
    return s / static_cast<double>(a.numel());
}

} // namespace pg
