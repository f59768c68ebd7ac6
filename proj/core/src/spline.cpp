#include "scalewave/spline.hpp"

#include <cmath>
#include <memory>

#include "scalewave/ops.hpp"

namespace scalewave {

double bspline_basis(double x, int order) {
    const double a = std::fabs(x);
    switch (order) {
        case 0:
            return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
        case 1:
            return a < 1.0 ? 1.0 - a : 0.0;
        case 2:
            if (a <= 0.5) return 0.75 - a * a;
            if (a < 1.5) return 0.5 * (1.5 - a) * (1.5 - a);
            return 0.0;
        case 3:
            if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
            if (a < 2.0) {
                const double b = 2.0 - a;
                return b * b * b / 6.0;
            }
            return 0.0;
        default:
            fail(ErrorCode::contract_violation, "B-spline order must be in {0,1,2,3}, got " + std::to_string(order));
    }
}

SplineGeometry make_spline_geometry(std::int64_t nominal_width, int order) {
    check_contract(nominal_width >= 1, "filter nominal width must be >= 1");
    check_contract(nominal_width % 2 == 1, "filter nominal width must be odd, got " + std::to_string(nominal_width));
    SplineGeometry g;
    g.nominal_width = nominal_width;
    g.num_knots = nominal_width;  // one knot per nominal tap
    g.order = order;
    g.knot_spacing = 1.0;
    return g;
}

std::int64_t sampled_half_width(double s, std::int64_t nominal_width) {
    return static_cast<std::int64_t>(std::floor(s * static_cast<double>(nominal_width) / 2.0));
}

Tensor spline_basis_matrix(const SplineGeometry& geom, double s) {
    check_contract(s >= 1.0, "filters are sampled at scales >= 1, got s=" + std::to_string(s));
    const std::int64_t hw = sampled_half_width(s, geom.nominal_width);
    const std::int64_t width = 2 * hw + 1;
    Tensor m(Shape{width, geom.num_knots});
    for (std::int64_t z = -hw; z <= hw; ++z) {
        const double x = static_cast<double>(z) / s;
        for (std::int64_t k = 0; k < geom.num_knots; ++k) {
            m[(z + hw) * geom.num_knots + k] = bspline_basis((x - geom.knot(k)) / geom.knot_spacing, geom.order);
        }
    }
    return m;
}

double spline_eval(const SplineGeometry& geom, std::span<const double> coeff_row, double x) {
    check_shape(static_cast<std::int64_t>(coeff_row.size()) == geom.num_knots, "coefficient row length != K");
    double acc = 0.0;
    for (std::int64_t k = 0; k < geom.num_knots; ++k) {
        acc += coeff_row[k] * bspline_basis((x - geom.knot(k)) / geom.knot_spacing, geom.order);
    }
    return acc;
}

SplineFilter1D::SplineFilter1D(std::int64_t cout, std::int64_t cin, std::int64_t nominal_width, int order)
    : geometry(make_spline_geometry(nominal_width, order)), coefficients(Shape{cout, cin, geometry.num_knots}) {}

void SplineFilter1D::init_kaiming(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(cin() * geometry.nominal_width);
    const double bound = std::sqrt(6.0 / fan_in);
    coefficients.fill_uniform(rng, -bound, bound);
}

namespace {
// Removes the component of each coefficient row that produces a nonzero
// tap mean at scale 1: c <- c - (mean(c) / |m|^2) m with m_k the per-knot
// column means of the basis matrix.
void project_rows_zero_mean(Tensor& coefficients, const SplineGeometry& geom) {
    const Tensor basis = spline_basis_matrix(geom, 1.0);
    const std::int64_t width = basis.dim(0);
    const std::int64_t K = basis.dim(1);
    std::vector<double> m(static_cast<std::size_t>(K), 0.0);
    double m_norm_sq = 0.0;
    for (std::int64_t k = 0; k < K; ++k) {
        for (std::int64_t z = 0; z < width; ++z) m[k] += basis[z * K + k];
        m[k] /= static_cast<double>(width);
        m_norm_sq += m[k] * m[k];
    }
    const std::int64_t rows = coefficients.numel() / K;
    for (std::int64_t r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (std::int64_t k = 0; k < K; ++k) mean += coefficients[r * K + k] * m[k];
        const double alpha = mean / m_norm_sq;
        for (std::int64_t k = 0; k < K; ++k) coefficients[r * K + k] -= alpha * m[k];
    }
}

}  // namespace

void SplineFilter1D::project_zero_mean() { project_rows_zero_mean(coefficients, geometry); }

SplineFilterGroup::SplineFilterGroup(std::int64_t cout, std::int64_t cin, std::int64_t nominal_width,
                                     std::int64_t scale_extent_, int order)
    : geometry(make_spline_geometry(nominal_width, order)),
      scale_extent(scale_extent_),
      coefficients(Shape{cout, cin, scale_extent_, geometry.num_knots}) {
    check_contract(scale_extent >= 1, "group filter scale extent must be >= 1");
}

void SplineFilterGroup::init_kaiming(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(cin() * scale_extent * geometry.nominal_width);
    const double bound = std::sqrt(6.0 / fan_in);
    coefficients.fill_uniform(rng, -bound, bound);
}

namespace {

Tensor sample_rows(const Tensor& coefficients, const SplineGeometry& geom, double s) {
    const Tensor basis = spline_basis_matrix(geom, s);
    const std::int64_t width = basis.dim(0);
    const std::int64_t K = basis.dim(1);
    const std::int64_t rows = coefficients.numel() / K;
    Shape out_shape = coefficients.shape();
    out_shape.back() = width;
    Tensor taps(out_shape);
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t z = 0; z < width; ++z) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < K; ++k) acc += coefficients[r * K + k] * basis[z * K + k];
            taps[r * width + z] = acc;
        }
    }
    return taps;
}

}  // namespace

Tensor sample_filter(const SplineFilter1D& filter, double s) { return sample_rows(filter.coefficients, filter.geometry, s); }

Tensor sample_filter(const SplineFilterGroup& filter, double s) {
    return sample_rows(filter.coefficients, filter.geometry, s);
}

Tensor filter_mean(const Tensor& sampled) {
    check_shape(sampled.rank() >= 1, "filter_mean needs a tap axis");
    const std::int64_t W = sampled.dim(-1);
    const std::int64_t rows = sampled.numel() / W;
    Shape out_shape(sampled.shape().begin(), sampled.shape().end() - 1);
    Tensor mean(out_shape);
    for (std::int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::int64_t z = 0; z < W; ++z) acc += sampled[r * W + z];
        mean[r] = acc / static_cast<double>(W);
    }
    return mean;
}

void SplineFilterGroup::project_zero_mean() { project_rows_zero_mean(coefficients, geometry); }

const Tensor& SplineBasisCache::at_scale(double s) {
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(s, spline_basis_matrix(geom_, s)).first->second;
}

Value spline_sample_op(Tape& tape, Value coefficients, const Tensor& basis) {
    const Tensor& cv = tape.value(coefficients);
    const std::int64_t K = basis.dim(1);
    check_shape(cv.dim(-1) == K, "coefficient tap axis " + std::to_string(cv.dim(-1)) + " != basis K " + std::to_string(K));
    const std::int64_t width = basis.dim(0);
    const std::int64_t rows = cv.numel() / K;
    Shape out_shape = cv.shape();
    out_shape.back() = width;
    Tensor taps(out_shape);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t z = 0; z < width; ++z) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < K; ++k) acc += cv[r * K + k] * basis[z * K + k];
            taps[r * width + z] = acc;
        }
    auto basis_copy = std::make_shared<Tensor>(basis);
    return tape.emit("spline_sample", {coefficients}, std::move(taps),
                     [coefficients, basis_copy, rows, width, K](Tape& t, const Tape::Node& n) {
                         Tensor gc(t.value(coefficients).shape());
                         for (std::int64_t r = 0; r < rows; ++r)
                             for (std::int64_t z = 0; z < width; ++z) {
                                 const double g = n.grad[r * width + z];
                                 if (g == 0.0) continue;
                                 for (std::int64_t k = 0; k < K; ++k) gc[r * K + k] += g * (*basis_copy)[z * K + k];
                             }
                         t.accumulate_grad(coefficients, gc);
                     });
}

Value wavelet_penalty_term(Tape& tape, Value coefficients, SplineBasisCache& cache) {
    Value taps = spline_sample_op(tape, coefficients, cache.at_scale(1.0));
    Value mean = mean_over_last(tape, taps);
    Value sq = mul(tape, mean, mean);
    return reduce_sum(tape, sq);
}

}  // namespace scalewave
