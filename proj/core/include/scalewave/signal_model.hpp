#pragma once

#include <cstdint>
#include <vector>

#include "scalewave/group.hpp"
#include "scalewave/tensor.hpp"

namespace scalewave {

// Sampled multichannel waveform.
struct Signal {
    Tensor samples;  // [channels, time]
    double sample_rate = 1.0;

    std::int64_t channels() const { return samples.dim(0); }
    std::int64_t length() const { return samples.dim(1); }
};

// Gabor atom a(x) = A * exp(-(x-c)^2 / (2 w^2)) * cos(2 pi f (x-c) + phi).
// width = +inf drops the envelope (pure sinusoid). Closed under the group
// action: a((x-u)/s) is again an atom with center u + s c, width s w and
// frequency f / s.
struct GaborAtom {
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;      // gaussian sigma in samples, or +inf
    double frequency = 0.0;  // cycles per sample
    double phase = 0.0;

    double eval(double x) const;
    GaborAtom transformed(const GroupElement& g) const;
};

// Analytically evaluable signal: a finite sum of Gabor atoms. Exact under
// the left-regular representation, which is what makes equivariance tests
// oracle-grade (no interpolation anywhere).
class SignalModel {
public:
    SignalModel() = default;
    explicit SignalModel(std::vector<GaborAtom> atoms) : atoms_(std::move(atoms)) {}

    const std::vector<GaborAtom>& atoms() const { return atoms_; }
    void add(GaborAtom atom) { atoms_.push_back(atom); }

    double eval(double x) const;
    // Circularly periodized evaluation with period n (envelope replicas
    // summed over a few neighboring periods).
    double eval_periodized(double x, std::int64_t n) const;

    double max_frequency() const;

    // L_g[f](x) = f(g^{-1} . x) = f((x - u) / s), exact on the atom family.
    SignalModel transformed(const GroupElement& g) const;

    std::vector<double> sample(std::int64_t n) const;
    std::vector<double> sample_periodized(std::int64_t n) const;

private:
    std::vector<GaborAtom> atoms_;
};

// Left-regular representation on the continuous signal model; satisfies
// L_{g1} L_{g2} = L_{g1 g2} exactly.
inline SignalModel left_regular_rep_signal(const GroupElement& g, const SignalModel& f) {
    return f.transformed(g);
}

// sample_signal with the band-limit contract: max atom frequency must stay
// below 0.4 * rate so a dilation by 1/2 keeps content below Nyquist.
Signal sample_signal(const SignalModel& model, std::int64_t n, double rate = 1.0, bool periodize = true);

// Deterministic band-limited random model: `atom_count` atoms with centers
// in [center_lo, center_hi] * n, widths and frequencies below the band
// limit. Scale tests use a low center range so dilated atoms stay interior.
// width_lo/width_hi (samples) default to n/64 and n/24.
SignalModel random_band_limited_model(std::uint64_t seed, std::int64_t n, int atom_count = 3,
                                      double max_frequency = 0.1, double center_lo = 0.3,
                                      double center_hi = 0.7, double width_lo = 0.0, double width_hi = 0.0);

}  // namespace scalewave
