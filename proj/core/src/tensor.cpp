#include "scalewave/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>

#include "scalewave/precision.hpp"

namespace scalewave {

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) {
        check(d >= 0, ErrorCode::invalid_argument, "negative dimension in shape " + shape_to_string(shape));
        n *= d;
    }
    return n;
}

std::vector<std::int64_t> row_major_strides(const Shape& shape) {
    std::vector<std::int64_t> strides(shape.size(), 1);
    for (std::int64_t i = static_cast<std::int64_t>(shape.size()) - 2; i >= 0; --i) {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    return strides;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), 0.0) {}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(static_cast<std::int64_t>(data_.size()) == shape_numel(shape_),
                "data size " + std::to_string(data_.size()) + " does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::scalar(double v) {
    Tensor t{Shape{}};
    t.data_[0] = v;
    return t;
}

Tensor Tensor::from_vector(const std::vector<double>& v) {
    return Tensor(Shape{static_cast<std::int64_t>(v.size())}, v);
}

std::int64_t Tensor::dim(std::int64_t axis) const {
    if (axis < 0) axis += rank();
    check_shape(axis >= 0 && axis < rank(), "axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape_));
    return shape_[axis];
}

std::int64_t Tensor::flat_index(std::initializer_list<std::int64_t> idx) const {
    check_shape(static_cast<std::int64_t>(idx.size()) == rank(),
                "index rank " + std::to_string(idx.size()) + " vs tensor rank " + std::to_string(rank()));
    std::int64_t flat = 0;
    std::int64_t axis = 0;
    auto strides = row_major_strides(shape_);
    for (auto i : idx) {
        assert(i >= 0 && i < shape_[axis]);
        flat += i * strides[axis];
        ++axis;
    }
    return flat;
}

double& Tensor::at(std::initializer_list<std::int64_t> idx) { return data_[static_cast<std::size_t>(flat_index(idx))]; }

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
    return data_[static_cast<std::size_t>(flat_index(idx))];
}

double Tensor::scalar_value() const {
    check_shape(numel() == 1, "scalar_value() on tensor of shape " + shape_to_string(shape_));
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape new_shape) const {
    check_shape(shape_numel(new_shape) == numel(),
                "reshape " + shape_to_string(shape_) + " -> " + shape_to_string(new_shape));
    return Tensor(std::move(new_shape), data_);
}

void Tensor::fill_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    const Precision p = default_precision();
    for (auto& v : data_) v = round_to_precision(dist(rng), p);
}

void Tensor::fill_normal(std::mt19937_64& rng, double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    const Precision p = default_precision();
    for (auto& v : data_) v = round_to_precision(dist(rng), p);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

void debug_check_finite(const Tensor& t, const char* where) {
#ifndef NDEBUG
    if (!t.all_finite()) fail(ErrorCode::numeric_failure, std::string("non-finite value after ") + where);
#else
    (void)t;
    (void)where;
#endif
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_shape(a.same_shape(b), "max_abs_diff shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double max_rel_diff(const Tensor& a, const Tensor& b, double denom_floor) {
    check_shape(a.same_shape(b), "max_rel_diff shape mismatch");
    double denom = std::max(std::max(a.max_abs(), b.max_abs()), denom_floor);
    return max_abs_diff(a, b) / denom;
}

}  // namespace scalewave
