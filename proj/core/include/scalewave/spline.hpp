#pragma once

#include <cstdint>
#include <map>
#include <random>

#include "scalewave/tape.hpp"
#include "scalewave/tensor.hpp"

namespace scalewave {

// Centered cardinal B-spline B^n: B^0 is the indicator of [-1/2, 1/2),
// B^n = B^{n-1} * B^0. Symmetric, supported on [-(n+1)/2, (n+1)/2],
// partition of unity over integer shifts. Orders 0..3.
double bspline_basis(double x, int order);

// Knot layout of a continuously parametrized filter: K centers uniformly
// spaced by `knot_spacing` and centered on 0, spanning a nominal support of
// `nominal_width` samples at scale 1.
struct SplineGeometry {
    std::int64_t nominal_width = 1;  // N_psi, odd
    std::int64_t num_knots = 1;      // K, defaults to N_psi
    int order = 2;
    double knot_spacing = 1.0;

    double knot(std::int64_t k) const {
        return (static_cast<double>(k) - static_cast<double>(num_knots - 1) / 2.0) * knot_spacing;
    }
};

SplineGeometry make_spline_geometry(std::int64_t nominal_width, int order = 2);

// Half width of the sampled filter at scale s: floor(s * N_psi / 2); the
// sampled grid is [-hw, hw].
std::int64_t sampled_half_width(double s, std::int64_t nominal_width);

// Dense evaluation matrix [width x K] with M[z + hw, k] = B^n((z/s - x_k)/sigma).
// Depends only on geometry and scale, never on coefficients.
Tensor spline_basis_matrix(const SplineGeometry& geom, double s);

// Continuous evaluation psi(x) = sum_k c_k B^n((x - x_k)/sigma) for one
// (cout, cin[, offset]) coefficient row.
double spline_eval(const SplineGeometry& geom, std::span<const double> coeff_row, double x);

// Continuous B-spline parametrized filter bank psi: R -> R^{cout x cin}.
struct SplineFilter1D {
    SplineGeometry geometry;
    Tensor coefficients;  // [cout, cin, K]

    SplineFilter1D(std::int64_t cout, std::int64_t cin, std::int64_t nominal_width, int order = 2);

    std::int64_t cout() const { return coefficients.dim(0); }
    std::int64_t cin() const { return coefficients.dim(1); }

    // Kaiming-style fan-in uniform init computed at nominal scale 1.
    void init_kaiming(std::mt19937_64& rng);
    // Exact projection of each filter row onto the zero-tap-mean subspace
    // (sampled at scale 1), the starting point the wavelet penalty maintains.
    void project_zero_mean();
};

// Filter bank on the group: continuous in x, discrete in the scale offset
// (K_s slots indexing s^{-1} s_bar = base^j, j = 0..K_s-1, upward).
struct SplineFilterGroup {
    SplineGeometry geometry;
    std::int64_t scale_extent = 1;  // K_s
    Tensor coefficients;            // [cout, cin, K_s, K]

    SplineFilterGroup(std::int64_t cout, std::int64_t cin, std::int64_t nominal_width,
                      std::int64_t scale_extent_, int order = 2);

    std::int64_t cout() const { return coefficients.dim(0); }
    std::int64_t cin() const { return coefficients.dim(1); }

    void init_kaiming(std::mt19937_64& rng);
    void project_zero_mean();
};

// Samples the filter on the integer grid at scale s >= 1: entry at z equals
// psi(z/s). Returns [cout, cin, 2*hw+1] (or [cout, cin, K_s, 2*hw+1]).
Tensor sample_filter(const SplineFilter1D& filter, double s);
Tensor sample_filter(const SplineFilterGroup& filter, double s);

// Arithmetic mean over the tap axis of a sampled filter.
Tensor filter_mean(const Tensor& sampled);

// Caches basis matrices per scale for one geometry.
class SplineBasisCache {
public:
    explicit SplineBasisCache(SplineGeometry geom) : geom_(geom) {}
    const Tensor& at_scale(double s);
    const SplineGeometry& geometry() const { return geom_; }

private:
    SplineGeometry geom_;
    std::map<double, Tensor> cache_;
};

// Tape op: taps = coefficients x basis^T along the trailing axis.
// coefficients [..., K] -> taps [..., width].
Value spline_sample_op(Tape& tape, Value coefficients, const Tensor& basis);

// Zero-mean wavelet penalty of one coefficient tensor: sum over leading axes
// of (mean of taps at scale 1)^2. Differentiable into the coefficients.
Value wavelet_penalty_term(Tape& tape, Value coefficients, SplineBasisCache& cache);

}  // namespace scalewave
