#include "scalewave/group.hpp"

#include <algorithm>
#include <cmath>

namespace scalewave {

GroupElement group_product(const GroupElement& g1, const GroupElement& g2) {
    return GroupElement(g1.u + g1.s * g2.u, g1.s * g2.s);
}

GroupElement group_inverse(const GroupElement& g) { return GroupElement(-g.u / g.s, 1.0 / g.s); }

double act_on_point(const GroupElement& g, double x) { return g.s * x + g.u; }

ScaleGrid ScaleGrid::exponential(double base, int j_min, int j_max) {
    check_contract(base > 1.0, "scale grid base must be > 1");
    check_contract(j_min <= j_max, "scale grid needs j_min <= j_max");
    ScaleGrid grid;
    grid.exponential_ = true;
    grid.base_ = base;
    grid.j_min_ = j_min;
    grid.j_max_ = j_max;
    grid.scales_.reserve(static_cast<std::size_t>(j_max - j_min + 1));
    for (int j = j_min; j <= j_max; ++j) grid.scales_.push_back(std::pow(base, j));
    // Exponential bin widths are proportional to the scale, so the 1/s Haar
    // factor cancels and integration over scale is a plain sum.
    grid.haar_weights_.assign(grid.scales_.size(), 1.0);
    return grid;
}

ScaleGrid ScaleGrid::linear(std::vector<double> scales) {
    check_contract(!scales.empty(), "linear scale grid needs at least one scale");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        check_contract(scales[i] > 0.0, "scales must be positive");
        if (i) check_contract(scales[i] > scales[i - 1], "scales must be strictly increasing");
    }
    ScaleGrid grid;
    grid.exponential_ = false;
    grid.scales_ = std::move(scales);
    grid.haar_weights_.resize(grid.scales_.size());
    const std::size_t n = grid.scales_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = n == 1 ? grid.scales_[0]
                            : i + 1 < n ? grid.scales_[i + 1] - grid.scales_[i]
                                        : grid.scales_[n - 1] - grid.scales_[n - 2];
        grid.haar_weights_[i] = delta / grid.scales_[i];
    }
    return grid;
}

std::optional<std::int64_t> ScaleGrid::index_of(double s) const {
    for (std::size_t i = 0; i < scales_.size(); ++i) {
        if (std::fabs(scales_[i] - s) <= 1e-9 * std::max(1.0, std::fabs(s))) return static_cast<std::int64_t>(i);
    }
    return std::nullopt;
}

std::optional<int> ScaleGrid::log_base_of(double s) const {
    if (!exponential_ || s <= 0.0) return std::nullopt;
    const double k_real = std::log(s) / std::log(base_);
    const double k_round = std::round(k_real);
    if (std::fabs(k_real - k_round) > 1e-9) return std::nullopt;
    return static_cast<int>(k_round);
}

ScaleGrid ScaleGrid::dropped_top(std::int64_t drop) const {
    drop = std::clamp<std::int64_t>(drop, 0, size() - 1);
    if (drop == 0) return *this;
    if (exponential_) return exponential(base_, j_min_, j_max_ - static_cast<int>(drop));
    return linear(std::vector<double>(scales_.begin(), scales_.end() - drop));
}

ScaleGrid build_scale_grid(double base, int j_min, int j_max) {
    return ScaleGrid::exponential(base, j_min, j_max);
}

RepResult left_regular_rep_tensor(const GroupElement& g, const Tensor& data, double grid_base,
                                  RepWeight weight) {
    check_shape(data.rank() >= 2, "rep needs trailing [scales, time] axes");
    const double u_round = std::round(g.u);
    check_contract(std::fabs(g.u - u_round) <= 1e-9, "rep translation must be an integer number of samples");
    const double k_real = std::log(g.s) / std::log(grid_base);
    const double k_round = std::round(k_real);
    check_contract(std::fabs(k_real - k_round) <= 1e-9, "rep scale must be an integer power of the grid base");

    const std::int64_t u = static_cast<std::int64_t>(u_round);
    const int k = static_cast<int>(k_round);
    const std::int64_t S = data.dim(-2);
    const std::int64_t T = data.dim(-1);
    const std::int64_t outer = data.numel() / (S * T);
    const std::int64_t bk = static_cast<std::int64_t>(std::llround(std::pow(grid_base, std::abs(k))));
    check_contract(std::fabs(std::pow(grid_base, std::abs(k)) - static_cast<double>(bk)) <= 1e-9,
                   "grid base powers must be integers for the discrete rep");

    const double w = weight == RepWeight::haar ? std::pow(grid_base, k) : 1.0;

    RepResult res{Tensor(data.shape()), k != 0 && S > 0, k != 0};
    res.scale_truncated = k != 0;
    const double* in = data.raw();
    double* out = res.data.raw();

    for (std::int64_t o = 0; o < outer; ++o) {
        const double* iplane = in + o * S * T;
        double* oplane = out + o * S * T;
        for (std::int64_t j = 0; j < S; ++j) {
            const std::int64_t src_j = j - k;
            if (src_j < 0 || src_j >= S) continue;  // vacated slot stays zero
            const double* irow = iplane + src_j * T;
            double* orow = oplane + j * T;
            for (std::int64_t t = 0; t < T; ++t) {
                std::int64_t r = (t - u) % T;
                if (r < 0) r += T;
                if (k >= 0) {
                    if (r % bk != 0) continue;
                    orow[t] = w * irow[r / bk];
                } else {
                    const std::int64_t pos = (r * bk) % T;
                    orow[t] = w * irow[pos];
                }
            }
        }
    }
    if (k == 0) res.scale_truncated = false;
    return res;
}

GroupMapRepResult left_regular_rep_groupmap(const GroupElement& g, const GroupFeatureMap& f, RepWeight weight) {
    if (f.grid.is_exponential()) {
        check_contract(f.grid.log_base_of(g.s).has_value(),
                       "group map rep is only defined on the grid's scale lattice");
    } else {
        check_contract(g.s == 1.0, "scale actions on linear grids are not on the exactness domain");
    }
    RepResult r = left_regular_rep_tensor(g, f.data, f.grid.is_exponential() ? f.grid.base() : 2.0, weight);
    return GroupMapRepResult{GroupFeatureMap(std::move(r.data), f.grid, f.sample_rate), r.scale_truncated,
                             r.time_thinned};
}

}  // namespace scalewave
