#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pg/rng.hpp"

namespace pg {

/// Dense n-dimensional array of doubles in row-major order.
///
/// Tensors are plain values: copying copies the data, and every public
/// operation returns a fresh tensor, so sharing them read-only across
/// threads is safe. Operations reject non-finite results instead of
/// letting NaN/Inf propagate silently.
class Tensor {
public:
    Tensor() = default;

    static Tensor full(const std::vector<int>& shape, double value);
    static Tensor zeros(const std::vector<int>& shape) { return full(shape, 0.0); }
    static Tensor ones(const std::vector<int>& shape) { return full(shape, 1.0); }
    static Tensor from_data(const std::vector<int>& shape, std::vector<double> data);

    /// i.i.d. N(mean, std^2) samples; deterministic given the rng state.
    static Tensor gaussian(const std::vector<int>& shape, double mean, double std,
                           Rng& rng);

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int extent(int dim) const { return shape_[static_cast<std::size_t>(dim)]; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double at(const std::vector<int>& index) const { return data_[flat_index(index)]; }
    double& at(const std::vector<int>& index) { return data_[flat_index(index)]; }

    /// Row-major offset of a multi-index.
    std::size_t flat_index(const std::vector<int>& index) const;

    /// Throws if any element is NaN or Inf; `context` names the offender.
    void ensure_finite(const std::string& context) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Elementwise arithmetic. Binary ops require equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor max_with_scalar(const Tensor& a, double c);
Tensor clamp(const Tensor& a, double lo, double hi);

double reduce_sum(const Tensor& a);
double l2_norm(const Tensor& a);
double mean_abs(const Tensor& a);

} // namespace pg
