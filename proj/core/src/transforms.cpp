#include "scalewave/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace scalewave {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::int64_t wrap(std::int64_t x, std::int64_t n) {
    x %= n;
    return x < 0 ? x + n : x;
}

std::vector<cplx> fft_core(std::vector<cplx> a, bool inverse) {
    const std::int64_t n = static_cast<std::int64_t>(a.size());
    check_contract(is_power_of_two(n),
                   "fft requires a power-of-two length (use the naive dft fallback for N=" + std::to_string(n) + ")");
    // Bit-reversal permutation.
    for (std::int64_t i = 1, j = 0; i < n; ++i) {
        std::int64_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::int64_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / static_cast<double>(len);
        for (std::int64_t i = 0; i < n; i += len) {
            for (std::int64_t j = 0; j < len / 2; ++j) {
                const cplx w = std::polar(1.0, ang * static_cast<double>(j));
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
    return a;
}

}  // namespace

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<cplx> fft(const std::vector<cplx>& x) { return fft_core(x, false); }

std::vector<cplx> inverse_fft(const std::vector<cplx>& x) { return fft_core(x, true); }

std::vector<cplx> fft_real(const std::vector<double>& x) {
    std::vector<cplx> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = cplx(x[i], 0.0);
    return fft_core(std::move(a), false);
}

std::vector<cplx> dft(const std::vector<double>& x) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    std::vector<cplx> out(x.size());
    for (std::int64_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::int64_t t = 0; t < n; ++t) {
            const double phase = -kTwoPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::polar(1.0, phase);
        }
        out[k] = acc;
    }
    return out;
}

double signal_energy(const std::vector<double>& x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

double spectrum_energy(const std::vector<cplx>& X) {
    double e = 0.0;
    for (const auto& v : X) e += std::norm(v);
    return e / static_cast<double>(X.size());
}

// --- STFT --------------------------------------------------------------

std::vector<double> hann_window_centered(std::int64_t win_len) {
    check_contract(win_len >= 2, "window length must be >= 2");
    std::vector<double> w(static_cast<std::size_t>(win_len));
    const std::int64_t half = win_len / 2;
    double energy = 0.0;
    for (std::int64_t j = 0; j < win_len; ++j) {
        const double z = static_cast<double>(j - half);
        const double c = std::cos(M_PI * z / static_cast<double>(win_len));
        w[j] = c * c;
        energy += w[j] * w[j];
    }
    const double inv_norm = 1.0 / std::sqrt(energy);
    for (auto& v : w) v *= inv_norm;
    return w;
}

Tensor StftMap::power() const {
    Tensor p(Shape{frames, bins});
    for (std::int64_t i = 0; i < frames * bins; ++i) p[i] = std::norm(values[i]);
    return p;
}

StftMap stft(const std::vector<double>& f, std::int64_t win_len, std::int64_t hop) {
    const std::int64_t n = static_cast<std::int64_t>(f.size());
    check_contract(win_len <= n, "stft window length exceeds signal length");
    check_contract(hop >= 1, "stft hop must be >= 1");
    check_contract(n % win_len == 0, "stft on the circle needs win_len dividing N");
    check_contract(n % hop == 0, "stft frame grid needs hop dividing N");

    const std::vector<double> w = hann_window_centered(win_len);
    const std::int64_t half = win_len / 2;

    StftMap map;
    map.win_len = win_len;
    map.hop = hop;
    map.frames = n / hop;
    map.bins = win_len;
    map.values.resize(static_cast<std::size_t>(map.frames * map.bins));

    for (std::int64_t m = 0; m < map.frames; ++m) {
        const std::int64_t u = m * hop;
        for (std::int64_t k = 0; k < map.bins; ++k) {
            cplx acc(0.0, 0.0);
            for (std::int64_t j = 0; j < win_len; ++j) {
                const std::int64_t t = wrap(u + j - half, n);
                // xi_k * t reduced exactly modulo the window period.
                const double phase = -kTwoPi * static_cast<double>((k * t) % win_len) / static_cast<double>(win_len);
                acc += f[t] * w[j] * std::polar(1.0, phase);
            }
            map.values[m * map.bins + k] = acc;
        }
    }
    return map;
}

// --- CWT ---------------------------------------------------------------

namespace {
// Unit-L2-norm constants: mexican hat 2 / (sqrt(3) pi^{1/4}),
// first Gaussian derivative sqrt(2) / pi^{1/4}.
const double kPiQuarter = std::pow(M_PI, 0.25);
}  // namespace

MotherWavelet MotherWavelet::mexican_hat() {
    return MotherWavelet(Kind::mexican_hat, 2.0 / (std::sqrt(3.0) * kPiQuarter), 10.0);
}

MotherWavelet MotherWavelet::gaussian_derivative_1() {
    return MotherWavelet(Kind::gaussian_derivative_1, std::sqrt(2.0) / kPiQuarter, 10.0);
}

double MotherWavelet::operator()(double x) const {
    const double g = std::exp(-0.5 * x * x);
    switch (kind_) {
        case Kind::mexican_hat: return norm_ * (1.0 - x * x) * g;
        case Kind::gaussian_derivative_1: return norm_ * x * g;
    }
    return 0.0;
}

std::vector<double> MotherWavelet::sample(double s) const {
    check_contract(s > 0.0, "wavelet scale must be positive");
    const std::int64_t hw = static_cast<std::int64_t>(std::ceil(s * support_radius_));
    check_contract(hw >= 1, "scaled wavelet support below two samples (Nyquist floor)");
    std::vector<double> taps(static_cast<std::size_t>(2 * hw + 1));
    for (std::int64_t z = -hw; z <= hw; ++z) taps[z + hw] = (*this)(static_cast<double>(z) / s);
    return taps;
}

Tensor CwtMap::power() const {
    Tensor p(values.shape());
    for (std::int64_t i = 0; i < values.numel(); ++i) p[i] = values[i] * values[i];
    return p;
}

CwtMap cwt(const std::vector<double>& f, const MotherWavelet& mother, const ScaleGrid& grid) {
    const std::int64_t n = static_cast<std::int64_t>(f.size());
    CwtMap map{grid, n, Tensor(Shape{grid.size(), n})};
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        const double s = grid.scale(i);
        const std::vector<double> taps = mother.sample(s);
        const std::int64_t hw = static_cast<std::int64_t>(taps.size()) / 2;
        const double inv_sqrt_s = 1.0 / std::sqrt(s);
        for (std::int64_t u = 0; u < n; ++u) {
            double acc = 0.0;
            for (std::int64_t z = -hw; z <= hw; ++z) acc += f[wrap(u + z, n)] * taps[z + hw];
            map.values[i * n + u] = inv_sqrt_s * acc;
        }
    }
    return map;
}

// --- Theorem-1 verification ----------------------------------------------

const char* tf_property_name(TfProperty p) {
    switch (p) {
        case TfProperty::fourier_shift_phase: return "fourier-shift-phase";
        case TfProperty::fourier_spectrum_shift_invariance: return "fourier-spectrum-shift-invariance";
        case TfProperty::fourier_scale: return "fourier-scale";
        case TfProperty::stft_shift: return "stft-shift";
        case TfProperty::stft_scale_approx: return "stft-scale-approx";
        case TfProperty::cwt_shift: return "cwt-shift";
        case TfProperty::cwt_scale_sqrt_factor: return "cwt-scale-sqrt-factor";
        case TfProperty::scalogram_scale_exact: return "scalogram-scale-exact";
    }
    return "unknown";
}

TfProperty tf_property_from_name(const std::string& name) {
    for (TfProperty p : all_tf_properties()) {
        if (name == tf_property_name(p)) return p;
    }
    fail(ErrorCode::invalid_argument, "unknown theorem property id '" + name + "'");
}

std::vector<TfProperty> all_tf_properties() {
    return {TfProperty::fourier_shift_phase,
            TfProperty::fourier_spectrum_shift_invariance,
            TfProperty::fourier_scale,
            TfProperty::stft_shift,
            TfProperty::stft_scale_approx,
            TfProperty::cwt_shift,
            TfProperty::cwt_scale_sqrt_factor,
            TfProperty::scalogram_scale_exact};
    }

namespace {

std::vector<double> rotated(const std::vector<double>& f, std::int64_t t0) {
    const std::int64_t n = static_cast<std::int64_t>(f.size());
    std::vector<double> g(f.size());
    for (std::int64_t t = 0; t < n; ++t) g[t] = f[wrap(t - t0, n)];
    return g;
}

double max_abs_c(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

struct ScaleTrial {
    std::vector<double> f;   // original samples
    std::vector<double> fd;  // analytic dilation by s0, sampled
};

ScaleTrial make_scale_trial(std::uint64_t seed, std::int64_t n, double s0, double width_lo = 0.0,
                            double width_hi = 0.0) {
    // Low center range keeps dilated atoms inside the window.
    SignalModel model = random_band_limited_model(seed, n, 3, 0.1, 0.12, 0.35, width_lo, width_hi);
    SignalModel dilated = left_regular_rep_signal(GroupElement(0.0, s0), model);
    return ScaleTrial{model.sample_periodized(n), dilated.sample_periodized(n)};
}

}  // namespace

TheoremCheck verify_theorem1(TfProperty property, int trials, std::int64_t n, std::uint64_t seed) {
    TheoremCheck out;
    out.property = property;
    out.trials = trials;
    std::mt19937_64 rng(seed * 1315423911ull + 17);

    switch (property) {
        case TfProperty::fourier_shift_phase: {
            out.hard_assert = true;
            double max_mag_dev = 0.0;
            // Ratio-magnitude check on an impulse: its spectrum is flat, so
            // every bin is well conditioned for the division.
            {
                std::vector<double> imp(static_cast<std::size_t>(n), 0.0);
                imp[0] = 1.0;
                const std::int64_t t0 = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n - 1));
                auto F0 = fft_real(imp);
                auto F1 = fft_real(rotated(imp, t0));
                for (std::int64_t k = 0; k < n; ++k) {
                    max_mag_dev = std::max(max_mag_dev, std::fabs(std::abs(F1[k]) / std::abs(F0[k]) - 1.0));
                }
            }
            for (int tr = 0; tr < trials; ++tr) {
                SignalModel model = random_band_limited_model(seed + tr, n);
                std::vector<double> f = model.sample_periodized(n);
                const std::int64_t t0 = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n - 1));
                auto F0 = fft_real(f);
                auto F1 = fft_real(rotated(f, t0));
                const double ref = max_abs_c(F0);
                for (std::int64_t k = 0; k < n; ++k) {
                    const double phase = -kTwoPi * static_cast<double>((k * t0) % n) / static_cast<double>(n);
                    const cplx expect = std::polar(1.0, phase) * F0[k];
                    out.max_rel_err = std::max(out.max_rel_err, std::abs(F1[k] - expect) / ref);
                    if (std::abs(F0[k]) > 0.1 * ref) {
                        max_mag_dev = std::max(max_mag_dev, std::fabs(std::abs(F1[k]) / std::abs(F0[k]) - 1.0));
                    }
                }
            }
            out.aux = max_mag_dev;
            out.pass = max_mag_dev <= 1e-10 && out.max_rel_err <= 1e-10;
            out.note = "ratio magnitude deviation " + std::to_string(max_mag_dev);
            break;
        }
        case TfProperty::fourier_spectrum_shift_invariance: {
            out.hard_assert = true;
            for (int tr = 0; tr < trials; ++tr) {
                SignalModel model = random_band_limited_model(seed + tr, n);
                std::vector<double> f = model.sample_periodized(n);
                const std::int64_t t0 = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n - 1));
                auto F0 = fft_real(f);
                auto F1 = fft_real(rotated(f, t0));
                double ref = 0.0;
                for (std::int64_t k = 0; k < n; ++k) ref = std::max(ref, std::norm(F0[k]));
                for (std::int64_t k = 0; k < n; ++k) {
                    out.max_rel_err = std::max(out.max_rel_err, std::fabs(std::norm(F1[k]) - std::norm(F0[k])) / ref);
                }
            }
            out.pass = out.max_rel_err <= 1e-10;
            break;
        }
        case TfProperty::fourier_scale: {
            const double s0 = 2.0;
            for (int tr = 0; tr < trials; ++tr) {
                ScaleTrial trial = make_scale_trial(seed + tr, n, s0);
                auto F0 = fft_real(trial.f);
                auto F1 = fft_real(trial.fd);
                const double ref = std::max(max_abs_c(F0), max_abs_c(F1));
                const std::int64_t kmax = n / 4 - 1;  // |s0 * k| below Nyquist
                for (std::int64_t k = 1; k <= kmax; ++k) {
                    const cplx lhs_pos = F1[k];
                    const cplx rhs_pos = s0 * F0[2 * k];
                    const cplx lhs_neg = F1[n - k];
                    const cplx rhs_neg = s0 * F0[n - 2 * k];
                    out.max_rel_err = std::max(out.max_rel_err, std::abs(lhs_pos - rhs_pos) / ref);
                    out.max_rel_err = std::max(out.max_rel_err, std::abs(lhs_neg - rhs_neg) / ref);
                }
            }
            out.pass = out.max_rel_err <= 1e-6;
            out.note = "reported; F[L_s0 f](w) = s0 F[f](s0 w) on analytic resynthesis";
            break;
        }
        case TfProperty::stft_shift: {
            out.hard_assert = true;
            const std::int64_t win = 128, hop = 8;
            double max_pow_dev = 0.0;
            for (int tr = 0; tr < trials; ++tr) {
                SignalModel model = random_band_limited_model(seed + tr, n);
                std::vector<double> f = model.sample_periodized(n);
                const std::int64_t frames = n / hop;
                const std::int64_t m0 = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(frames - 1));
                const std::int64_t t0 = m0 * hop;
                StftMap S0 = stft(f, win, hop);
                StftMap S1 = stft(rotated(f, t0), win, hop);
                const double ref = max_abs_c(S0.values);
                for (std::int64_t m = 0; m < frames; ++m) {
                    const std::int64_t msrc = wrap(m - m0, frames);
                    for (std::int64_t k = 0; k < win; ++k) {
                        const double phase = -kTwoPi * static_cast<double>((k * (t0 % win)) % win) / static_cast<double>(win);
                        const cplx expect = std::polar(1.0, phase) * S0.at(msrc, k);
                        out.max_rel_err = std::max(out.max_rel_err, std::abs(S1.at(m, k) - expect) / ref);
                        max_pow_dev = std::max(max_pow_dev,
                                               std::fabs(std::norm(S1.at(m, k)) - std::norm(S0.at(msrc, k))) / (ref * ref));
                    }
                }
            }
            out.aux = max_pow_dev;
            out.pass = out.max_rel_err <= 1e-10 && max_pow_dev <= 1e-10;
            out.note = "spectrogram column deviation " + std::to_string(max_pow_dev);
            break;
        }
        case TfProperty::stft_scale_approx: {
            out.hard_assert = true;  // monotone improvement only
            const double s0 = 2.0;
            const std::int64_t hop = 8;
            const std::vector<std::int64_t> wins{64, 128, 256};
            std::vector<double> errs;
            for (std::int64_t win : wins) {
                double num = 0.0, den = 0.0;
                for (int tr = 0; tr < trials; ++tr) {
                    // One narrow atom per trial. The approximation only
                    // claims anything where the window covers all spectral
                    // components, so the comparison is restricted to frames
                    // whose windows contain the content on both sides.
                    std::mt19937_64 trng(seed + 31 * tr);
                    std::uniform_real_distribution<double> uw(2.0, 2.5), ufq(0.04, 0.1), uph(0.0, kTwoPi);
                    GaborAtom a;
                    a.amplitude = 1.0;
                    a.center = 0.25 * static_cast<double>(n);
                    a.width = uw(trng);
                    a.frequency = ufq(trng);
                    a.phase = uph(trng);
                    SignalModel model(std::vector<GaborAtom>{a});
                    SignalModel dilated = left_regular_rep_signal(GroupElement(0.0, s0), model);
                    std::vector<double> f = model.sample_periodized(n);
                    std::vector<double> fd = dilated.sample_periodized(n);

                    StftMap S0 = stft(f, win, hop);
                    StftMap S1 = stft(fd, win, hop);
                    const double cd = a.center * s0;
                    for (std::int64_t m = 0; m < S1.frames; m += 2) {
                        const double u = static_cast<double>(m * hop);
                        // Fixed absolute neighborhood of the content: bigger
                        // windows then see the same event at smaller relative
                        // displacement, which is where the approximation
                        // gains accuracy.
                        if (std::fabs(u - cd) > 16.0) continue;
                        for (std::int64_t k = 1; k < win / 4; ++k) {
                            const cplx lhs = S1.at(m, k);
                            const cplx rhs = s0 * S0.at(m / 2, 2 * k);
                            num += std::norm(lhs - rhs);
                            den += std::norm(rhs);
                        }
                    }
                }
                errs.push_back(std::sqrt(num / std::max(den, 1e-300)));
            }
            out.max_rel_err = errs.back();
            out.pass = errs[0] > errs[1] && errs[1] > errs[2];
            std::ostringstream os;
            os << "rms rel err per window {64,128,256}: " << errs[0] << ", " << errs[1] << ", " << errs[2];
            out.note = os.str();
            break;
        }
        case TfProperty::cwt_shift: {
            out.hard_assert = true;
            const MotherWavelet psi = MotherWavelet::mexican_hat();
            const ScaleGrid grid = ScaleGrid::exponential(2.0, 0, 6);
            for (int tr = 0; tr < trials; ++tr) {
                SignalModel model = random_band_limited_model(seed + tr, n);
                std::vector<double> f = model.sample_periodized(n);
                const std::int64_t t0 = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n - 1));
                CwtMap W0 = cwt(f, psi, grid);
                CwtMap W1 = cwt(rotated(f, t0), psi, grid);
                const double ref = W0.values.max_abs();
                for (std::int64_t i = 0; i < grid.size(); ++i) {
                    for (std::int64_t t = 0; t < n; ++t) {
                        const double expect = W0.values[i * n + wrap(t - t0, n)];
                        out.max_rel_err =
                            std::max(out.max_rel_err, std::fabs(W1.values[i * n + t] - expect) / ref);
                    }
                }
            }
            out.pass = out.max_rel_err <= 1e-10;
            break;
        }
        case TfProperty::cwt_scale_sqrt_factor:
        case TfProperty::scalogram_scale_exact: {
            out.hard_assert = true;
            const bool power = property == TfProperty::scalogram_scale_exact;
            const double s0 = 2.0;
            const MotherWavelet psi = MotherWavelet::mexican_hat();
            const ScaleGrid grid = ScaleGrid::exponential(2.0, 0, 6);
            const std::int64_t S = grid.size();
            double fit_num = 0.0, fit_den = 0.0;
            for (int tr = 0; tr < trials; ++tr) {
                ScaleTrial trial = make_scale_trial(seed + tr, n, s0);
                CwtMap W0 = cwt(trial.f, psi, grid);
                CwtMap W1 = cwt(trial.fd, psi, grid);
                double ref = 0.0;
                for (std::int64_t i = 0; i < W0.values.numel(); ++i)
                    ref = std::max(ref, power ? W0.values[i] * W0.values[i] : std::fabs(W0.values[i]));
                // Interior region: 10% time margins on both maps, outermost
                // scale rows excluded on each end of both maps.
                for (std::int64_t i = 2; i <= S - 2; ++i) {
                    for (std::int64_t tp = n / 10; tp < (9 * n) / 20; ++tp) {
                        const double w1 = W1.values[i * n + 2 * tp];
                        const double w0 = W0.values[(i - 1) * n + tp];
                        if (power) {
                            // Squared form of the Appx-B.3 amplitude relation:
                            // |W[L_s0 f]|^2 = s0 |W[f](u/s0, s/s0)|^2, i.e. the
                            // per-unit-scale density |W|^2 / s is strictly
                            // scale equivariant.
                            out.max_rel_err = std::max(out.max_rel_err, std::fabs(w1 * w1 - s0 * w0 * w0) / (s0 * ref));
                        } else {
                            out.max_rel_err = std::max(out.max_rel_err, std::fabs(w1 - std::sqrt(s0) * w0) / ref);
                            fit_num += w1 * w0;
                            fit_den += w0 * w0;
                        }
                    }
                }
            }
            if (power) {
                out.pass = out.max_rel_err <= 1e-2;
                out.note = "squared amplitude relation; |W|^2/s is the invariant density";
            } else {
                out.aux = fit_num / std::max(fit_den, 1e-300);
                out.pass = std::fabs(out.aux - std::sqrt(s0)) <= 1e-2 && out.max_rel_err <= 1e-2;
                out.note = "fitted factor " + std::to_string(out.aux) + " vs sqrt(s0) " + std::to_string(std::sqrt(s0));
            }
            break;
        }
    }
    return out;
}

}  // namespace scalewave
