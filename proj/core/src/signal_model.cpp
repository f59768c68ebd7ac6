#include "scalewave/signal_model.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace scalewave {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double GaborAtom::eval(double x) const {
    const double d = x - center;
    double env = 1.0;
    if (std::isfinite(width)) {
        const double z = d / width;
        env = std::exp(-0.5 * z * z);
    }
    return amplitude * env * std::cos(kTwoPi * frequency * d + phase);
}

GaborAtom GaborAtom::transformed(const GroupElement& g) const {
    GaborAtom out = *this;
    out.center = g.u + g.s * center;
    out.width = std::isfinite(width) ? g.s * width : width;
    out.frequency = frequency / g.s;
    return out;
}

double SignalModel::eval(double x) const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.eval(x);
    return acc;
}

double SignalModel::eval_periodized(double x, std::int64_t n) const {
    double acc = 0.0;
    const double period = static_cast<double>(n);
    for (int r = -2; r <= 2; ++r) acc += eval(x + static_cast<double>(r) * period);
    return acc;
}

double SignalModel::max_frequency() const {
    double f = 0.0;
    for (const auto& a : atoms_) f = std::max(f, std::fabs(a.frequency));
    return f;
}

SignalModel SignalModel::transformed(const GroupElement& g) const {
    std::vector<GaborAtom> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) out.push_back(a.transformed(g));
    return SignalModel(std::move(out));
}

std::vector<double> SignalModel::sample(std::int64_t n) const {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (std::int64_t z = 0; z < n; ++z) s[z] = eval(static_cast<double>(z));
    return s;
}

std::vector<double> SignalModel::sample_periodized(std::int64_t n) const {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (std::int64_t z = 0; z < n; ++z) s[z] = eval_periodized(static_cast<double>(z), n);
    return s;
}

Signal sample_signal(const SignalModel& model, std::int64_t n, double rate, bool periodize) {
    check_contract(model.max_frequency() <= 0.4 * rate,
                   "signal model violates the band limit (max frequency above 0.4 x rate)");
    Tensor data(Shape{1, n});
    for (std::int64_t z = 0; z < n; ++z) {
        data[z] = periodize ? model.eval_periodized(static_cast<double>(z), n) : model.eval(static_cast<double>(z));
    }
    return Signal{std::move(data), rate};
}

SignalModel random_band_limited_model(std::uint64_t seed, std::int64_t n, int atom_count, double max_frequency,
                                      double center_lo, double center_hi, double width_lo, double width_hi) {
    if (width_lo <= 0.0) width_lo = static_cast<double>(n) / 64.0;
    if (width_hi <= 0.0) width_hi = static_cast<double>(n) / 24.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    std::uniform_real_distribution<double> pos(center_lo, center_hi);
    std::uniform_real_distribution<double> wid(width_lo, width_hi);
    std::uniform_real_distribution<double> freq(0.2 * max_frequency, max_frequency);
    std::uniform_real_distribution<double> ph(0.0, kTwoPi);
    SignalModel model;
    for (int i = 0; i < atom_count; ++i) {
        GaborAtom a;
        a.amplitude = amp(rng);
        a.center = pos(rng) * static_cast<double>(n);
        a.width = wid(rng);
        a.frequency = freq(rng);
        a.phase = ph(rng);
        model.add(a);
    }
    return model;
}

}  // namespace scalewave
