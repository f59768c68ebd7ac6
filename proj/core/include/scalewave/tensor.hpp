#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scalewave/error.hpp"

namespace scalewave {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::vector<std::int64_t> row_major_strides(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense n-d tensor, contiguous row-major doubles. Rank 0 is a scalar with one
// element. Immutable by convention once handed to a tape; mutation goes
// through the optimizer between steps.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, double fill);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor from_vector(const std::vector<double>& v);
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape()); }

    const Shape& shape() const noexcept { return shape_; }
    std::int64_t rank() const noexcept { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }
    std::int64_t dim(std::int64_t axis) const;
    std::vector<std::int64_t> strides() const { return row_major_strides(shape_); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const double* raw() const noexcept { return data_.data(); }
    double* raw() noexcept { return data_.data(); }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    double& at(std::initializer_list<std::int64_t> idx);
    double at(std::initializer_list<std::int64_t> idx) const;

    double scalar_value() const;

    void fill(double v);
    // Same data, new shape; element count must match.
    Tensor reshaped(Shape new_shape) const;

    void fill_uniform(std::mt19937_64& rng, double lo, double hi);
    void fill_normal(std::mt19937_64& rng, double mean, double stddev);

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    double max_abs() const;
    double sum() const;

private:
    std::int64_t flat_index(std::initializer_list<std::int64_t> idx) const;

    Shape shape_;
    std::vector<double> data_;
};

// Debug-build guard: forward ops on finite inputs must stay finite.
void debug_check_finite(const Tensor& t, const char* where);

double max_abs_diff(const Tensor& a, const Tensor& b);
double max_rel_diff(const Tensor& a, const Tensor& b, double denom_floor = 1e-12);

}  // namespace scalewave
