#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "scalewave/group.hpp"
#include "scalewave/signal_model.hpp"
#include "scalewave/tensor.hpp"

namespace scalewave {

using cplx = std::complex<double>;

// --- Fourier -----------------------------------------------------------

// Radix-2 FFT, N must be a power of two (the error message points callers to
// the naive dft() fallback). Convention: X[k] = sum_t x[t] exp(-2 pi i k t / N).
std::vector<cplx> fft(const std::vector<cplx>& x);
std::vector<cplx> inverse_fft(const std::vector<cplx>& x);
std::vector<cplx> fft_real(const std::vector<double>& x);

// Naive O(N^2) DFT for arbitrary N.
std::vector<cplx> dft(const std::vector<double>& x);

bool is_power_of_two(std::int64_t n);

// sum |x|^2 and (1/N) sum |X|^2 agree for exact transforms (Parseval).
double signal_energy(const std::vector<double>& x);
double spectrum_energy(const std::vector<cplx>& X);

// --- STFT --------------------------------------------------------------

// Windowed Fourier transform with a centered, unit-L2-norm Hann window and
// circular boundary. values[m * bins + k] = S[f](u = m hop, xi_k = 2 pi k / L),
// with the absolute-phase convention S(u, xi) = sum_t f(t) w(t - u) e^{-i xi t}.
struct StftMap {
    std::int64_t win_len = 0;
    std::int64_t hop = 0;
    std::int64_t frames = 0;
    std::int64_t bins = 0;
    std::vector<cplx> values;

    cplx at(std::int64_t frame, std::int64_t bin) const { return values[frame * bins + bin]; }
    Tensor power() const;  // |.|^2, [frames, bins]
};

std::vector<double> hann_window_centered(std::int64_t win_len);
StftMap stft(const std::vector<double>& f, std::int64_t win_len, std::int64_t hop);

// --- CWT ---------------------------------------------------------------

// Closed-form mother wavelets: zero average and unit L2 norm analytically.
class MotherWavelet {
public:
    enum class Kind { mexican_hat, gaussian_derivative_1 };

    static MotherWavelet mexican_hat();
    static MotherWavelet gaussian_derivative_1();

    double operator()(double x) const;
    Kind kind() const { return kind_; }
    double support_radius() const { return support_radius_; }

    // Taps psi(z / s) on the centered integer grid, half width ceil(s * R).
    // No interpolation: the closed form is evaluated at z / s directly.
    std::vector<double> sample(double s) const;

private:
    MotherWavelet(Kind kind, double norm, double support) : kind_(kind), norm_(norm), support_radius_(support) {}
    Kind kind_;
    double norm_;
    double support_radius_;
};

// W[f](u, s) = [f * (1/sqrt(s)) L_s psi](u), circular; values[i * T + u] for
// grid scale i. Real-valued for the real mother wavelets above.
struct CwtMap {
    ScaleGrid grid;
    std::int64_t time = 0;
    Tensor values;  // [scales, time]

    Tensor power() const;  // scalogram |.|^2
};

CwtMap cwt(const std::vector<double>& f, const MotherWavelet& mother, const ScaleGrid& grid);

// --- Theorem-1 verification ---------------------------------------------

enum class TfProperty {
    fourier_shift_phase,
    fourier_spectrum_shift_invariance,
    fourier_scale,
    stft_shift,
    stft_scale_approx,
    cwt_shift,
    cwt_scale_sqrt_factor,
    scalogram_scale_exact,
};

const char* tf_property_name(TfProperty p);
TfProperty tf_property_from_name(const std::string& name);
std::vector<TfProperty> all_tf_properties();

struct TheoremCheck {
    TfProperty property;
    int trials = 0;
    double max_rel_err = 0.0;
    double aux = 0.0;       // property-specific (e.g. fitted sqrt-factor)
    bool hard_assert = false;
    bool pass = true;
    std::string note;
};

// Synthesizes band-limited signal models analytically at both original and
// transformed parameters, computes both sides of the cited relation per
// trial, and reports the max relative error over the interior region.
TheoremCheck verify_theorem1(TfProperty property, int trials, std::int64_t n, std::uint64_t seed = 7);

}  // namespace scalewave
