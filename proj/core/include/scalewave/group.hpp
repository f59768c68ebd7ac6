#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

// Element (u, s) of the dilation-translation group R x R+ acting on the time
// axis: product (u1 + s1*u2, s1*s2), action g . x = s*x + u. Translation u is
// in samples, scale s is a dimensionless factor.
struct GroupElement {
    double u = 0.0;
    double s = 1.0;

    GroupElement() = default;
    GroupElement(double u_, double s_) : u(u_), s(s_) {
        check_contract(s > 0.0, "group element scale must be positive");
    }

    static GroupElement identity() { return GroupElement(0.0, 1.0); }
};

GroupElement group_product(const GroupElement& g1, const GroupElement& g2);
GroupElement group_inverse(const GroupElement& g);
double act_on_point(const GroupElement& g, double x);

// Discrete scale axis. Exponential grids carry constant Haar weights (the
// 1/s factor cancels against the exponential bin width); linear grids carry
// explicit Riemann weights Delta_i / s_i.
class ScaleGrid {
public:
    static ScaleGrid exponential(double base, int j_min, int j_max);
    static ScaleGrid linear(std::vector<double> scales);

    bool is_exponential() const noexcept { return exponential_; }
    double base() const noexcept { return base_; }
    int j_min() const noexcept { return j_min_; }
    int j_max() const noexcept { return j_max_; }

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(scales_.size()); }
    double scale(std::int64_t i) const { return scales_.at(static_cast<std::size_t>(i)); }
    const std::vector<double>& scales() const noexcept { return scales_; }
    const std::vector<double>& haar_weights() const noexcept { return haar_weights_; }

    // Index i with scale(i) == s (relative tolerance 1e-9), if any.
    std::optional<std::int64_t> index_of(double s) const;

    // For exponential grids: integer k with s == base^k, if s is on the
    // one-sided extension of the grid (k may land outside [j_min, j_max]).
    std::optional<int> log_base_of(double s) const;

    // Grid with the top `drop` scales removed (never below one scale).
    ScaleGrid dropped_top(std::int64_t drop) const;

    bool operator==(const ScaleGrid& other) const {
        return scales_ == other.scales_ && exponential_ == other.exponential_;
    }

private:
    ScaleGrid() = default;
    bool exponential_ = true;
    double base_ = 2.0;
    int j_min_ = 0;
    int j_max_ = 0;
    std::vector<double> scales_;
    std::vector<double> haar_weights_;
};

ScaleGrid build_scale_grid(double base, int j_min, int j_max);

// Function on the group sampled on [channels, scales, time].
struct GroupFeatureMap {
    Tensor data;  // [C, S, T]
    ScaleGrid grid;
    double sample_rate = 1.0;

    GroupFeatureMap(Tensor data_, ScaleGrid grid_, double sample_rate_ = 1.0)
        : data(std::move(data_)), grid(std::move(grid_)), sample_rate(sample_rate_) {
        check_shape(data.rank() == 3, "group feature map must be [channels, scales, time]");
        check_shape(data.dim(1) == grid.size(), "scale axis length must match the grid");
    }
};

// Discrete left-regular representation on sampled group maps. Exactness
// domain: u integer, s = base^k with integer k. The scale axis shifts by k
// slots (vacated slots zero-filled). The time axis reads position
// (t - u mod N) / b^k: a circular shift for k = 0, zero-stuffed dilation for
// k > 0 and strided compression for k < 0.
//
// haar weighting multiplies values by b^k so that sampled densities keep the
// continuous-dilation mass convention (sum scales by b^k, as the Lebesgue
// integral of f((x-u)/s) does). unit weighting only moves values, which is
// the norm-preserving index-permutation convention.
enum class RepWeight { haar, unit };

struct RepResult {
    Tensor data;
    bool scale_truncated = false;  // some slot left the grid
    bool time_thinned = false;     // k != 0, time axis resampled
};

// Acts on the trailing (scale, time) axes of any rank >= 2 tensor.
RepResult left_regular_rep_tensor(const GroupElement& g, const Tensor& data, double grid_base,
                                  RepWeight weight = RepWeight::haar);

struct GroupMapRepResult {
    GroupFeatureMap map;
    bool scale_truncated = false;
    bool time_thinned = false;
};

GroupMapRepResult left_regular_rep_groupmap(const GroupElement& g, const GroupFeatureMap& f,
                                            RepWeight weight = RepWeight::haar);

}  // namespace scalewave
