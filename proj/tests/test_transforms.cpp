#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "scalewave/transforms.hpp"

using namespace scalewave;

namespace {

// Independent O(N^2) direct-sum oracle, kept separate from the library's
// dft() fallback.
std::vector<cplx> direct_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0, 0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
            acc += x[t] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> random_signal(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("fft: impulse has a flat spectrum") {
    std::vector<double> x(8, 0.0);
    x[0] = 1.0;
    auto X = fft_real(x);
    for (const auto& v : X) {
        CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::fabs(v.imag()) <= 1e-12);
    }
}

TEST_CASE("fft: single tone concentrates in two bins") {
    const std::size_t n = 16;
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2.0 * M_PI * 3.0 * t / n);
    auto X = fft_real(x);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 3 || k == 13) {
            CHECK(std::abs(X[k]) == doctest::Approx(8.0).epsilon(1e-10));
        } else {
            CHECK(std::abs(X[k]) <= 1e-10);
        }
    }
}

TEST_CASE("fft matches the naive oracle at 1e-10 for N in {8..4096}") {
    for (std::size_t n : {8u, 16u, 64u, 256u, 1024u, 4096u}) {
        auto x = random_signal(n, n);
        auto X = fft_real(x);
        auto Y = direct_dft(x);
        const double ref = max_abs(Y);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(X[k] - Y[k]) / ref);
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("inverse fft round trip and Parseval") {
    auto x = random_signal(42, 512);
    auto X = fft_real(x);
    auto back = inverse_fft(X);
    double worst = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) worst = std::max(worst, std::abs(back[t] - cplx(x[t], 0.0)));
    CHECK(worst <= 1e-10);

    CHECK(signal_energy(x) == doctest::Approx(spectrum_energy(X)).epsilon(1e-10));
}

TEST_CASE("fft rejects non-powers-of-two, dft fallback covers them") {
    std::vector<cplx> bad(12, cplx(1.0, 0.0));
    CHECK_THROWS_WITH_AS(fft(bad), doctest::Contains("dft fallback"), Error);

    auto x = random_signal(3, 12);
    auto X = dft(x);
    auto Y = direct_dft(x);
    double worst = 0.0;
    for (std::size_t k = 0; k < 12; ++k) worst = std::max(worst, std::abs(X[k] - Y[k]) / max_abs(Y));
    CHECK(worst <= 1e-12);
}

TEST_CASE("real-input spectra are conjugate symmetric") {
    auto x = random_signal(77, 128);
    auto X = fft_real(x);
    for (std::size_t k = 1; k < 128; ++k) {
        CHECK(std::abs(X[k] - std::conj(X[128 - k])) <= 1e-10 * max_abs(X));
    }
}

TEST_CASE("stft basics") {
    const std::int64_t n = 512;

    SUBCASE("constant signal concentrates in the window mainlobe around zero frequency") {
        // The Hann window is 1/2 + cos(2 pi z / L) / 2, so a constant signal
        // occupies bins {0, 1, L-1}; everything else must vanish.
        std::vector<double> x(n, 1.0);
        StftMap s = stft(x, 64, 16);
        for (std::int64_t m = 0; m < s.frames; ++m) {
            const double dc = std::abs(s.at(m, 0));
            CHECK(dc > 0.0);
            for (std::int64_t k = 2; k < s.bins - 1; ++k) CHECK(std::abs(s.at(m, k)) <= 1e-10 * dc);
        }
    }

    SUBCASE("pure tone row is maximal at its bin") {
        const std::int64_t L = 64;
        std::vector<double> x(n);
        for (std::int64_t t = 0; t < n; ++t) x[t] = std::cos(2.0 * M_PI * 5.0 * t / L);
        StftMap s = stft(x, L, 16);
        Tensor p = s.power();
        for (std::int64_t m = 0; m < s.frames; ++m) {
            std::int64_t best = 0;
            for (std::int64_t k = 1; k < L / 2; ++k)
                if (p[m * s.bins + k] > p[m * s.bins + best]) best = k;
            CHECK(best == 5);
        }
    }

    SUBCASE("window violates length contract") {
        std::vector<double> x(32, 0.0);
        CHECK_THROWS_AS(stft(x, 64, 8), Error);
    }
}

TEST_CASE("verify_theorem1: hard assertions hold at spec tolerances") {
    const std::int64_t n = 1024;
    const int trials = 5;  // acceptance runs 20; unit test keeps it quick

    SUBCASE("fourier shift phase") {
        auto r = verify_theorem1(TfProperty::fourier_shift_phase, trials, n);
        CHECK(r.pass);
        CHECK(r.aux <= 1e-10);
        CHECK(r.max_rel_err <= 1e-10);
    }
    SUBCASE("fourier spectrum shift invariance") {
        auto r = verify_theorem1(TfProperty::fourier_spectrum_shift_invariance, trials, n);
        CHECK(r.pass);
        CHECK(r.max_rel_err <= 1e-10);
    }
    SUBCASE("fourier scale (reported)") {
        auto r = verify_theorem1(TfProperty::fourier_scale, trials, n);
        CHECK(r.max_rel_err <= 1e-6);
    }
    SUBCASE("stft shift") {
        auto r = verify_theorem1(TfProperty::stft_shift, trials, n);
        CHECK(r.pass);
        CHECK(r.max_rel_err <= 1e-10);
    }
    SUBCASE("stft scale approximation improves with window length") {
        auto r = verify_theorem1(TfProperty::stft_scale_approx, trials, n);
        CHECK(r.pass);
        INFO(r.note);
    }
    SUBCASE("cwt shift") {
        auto r = verify_theorem1(TfProperty::cwt_shift, trials, n);
        CHECK(r.pass);
        CHECK(r.max_rel_err <= 1e-10);
    }
    SUBCASE("cwt scale sqrt factor") {
        auto r = verify_theorem1(TfProperty::cwt_scale_sqrt_factor, trials, n);
        CHECK(r.pass);
        CHECK(std::fabs(r.aux - std::sqrt(2.0)) <= 1e-2);
    }
    SUBCASE("scalogram scale exact") {
        auto r = verify_theorem1(TfProperty::scalogram_scale_exact, trials, n);
        CHECK(r.pass);
        CHECK(r.max_rel_err <= 1e-2);
    }
}

TEST_CASE("fourier shift phase on an impulse has unit-magnitude ratio") {
    const std::size_t n = 64;
    std::vector<double> x(n, 0.0);
    x[0] = 1.0;
    std::vector<double> shifted(n, 0.0);
    const std::size_t t0 = 9;
    shifted[t0] = 1.0;
    auto X0 = fft_real(x);
    auto X1 = fft_real(shifted);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx ratio = X1[k] / X0[k];
        CHECK(std::abs(ratio) == doctest::Approx(1.0).epsilon(1e-12));
        const double expect = -2.0 * M_PI * static_cast<double>(k * t0 % n) / static_cast<double>(n);
        const cplx want = std::polar(1.0, expect);
        CHECK(std::abs(ratio - want) <= 1e-10);
    }
}

TEST_CASE("mother wavelets: zero mean, unit norm within quadrature tolerance") {
    for (auto mother : {MotherWavelet::mexican_hat(), MotherWavelet::gaussian_derivative_1()}) {
        const double h = 1e-3;
        double mean = 0.0, norm = 0.0;
        for (double x = -12.0; x <= 12.0; x += h) {
            const double v = mother(x);
            mean += v * h;
            norm += v * v * h;
        }
        CHECK(std::fabs(mean) <= 1e-10);
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("cwt: matched filter peaks at the generating scale and shift 0") {
    const std::int64_t n = 1024;
    const MotherWavelet psi = MotherWavelet::mexican_hat();
    const ScaleGrid grid = ScaleGrid::exponential(2.0, 0, 5);
    const double s0 = 4.0;
    std::vector<double> f(n, 0.0);
    const std::int64_t u0 = 512;
    for (std::int64_t t = 0; t < n; ++t) f[t] = psi((static_cast<double>(t - u0)) / s0);

    CwtMap W = cwt(f, psi, grid);
    double best = -1.0;
    std::int64_t best_scale = -1, best_u = -1;
    for (std::int64_t i = 0; i < grid.size(); ++i)
        for (std::int64_t u = 0; u < n; ++u) {
            const double v = std::fabs(W.values[i * n + u]);
            if (v > best) {
                best = v;
                best_scale = i;
                best_u = u;
            }
        }
    CHECK(grid.scale(best_scale) == doctest::Approx(s0));
    CHECK(best_u == u0);
}

TEST_CASE("cwt: zero signal maps to zero; linearity at 1e-12") {
    const std::int64_t n = 256;
    const MotherWavelet psi = MotherWavelet::mexican_hat();
    const ScaleGrid grid = ScaleGrid::exponential(2.0, 0, 3);

    std::vector<double> zero(n, 0.0);
    CwtMap Wz = cwt(zero, psi, grid);
    CHECK(Wz.values.max_abs() == 0.0);

    auto f = random_signal(5, n);
    auto g = random_signal(6, n);
    const double a = 0.7, b = -1.3;
    std::vector<double> combo(n);
    for (std::int64_t i = 0; i < n; ++i) combo[i] = a * f[i] + b * g[i];
    CwtMap Wf = cwt(f, psi, grid);
    CwtMap Wg = cwt(g, psi, grid);
    CwtMap Wc = cwt(combo, psi, grid);
    double worst = 0.0;
    for (std::int64_t i = 0; i < Wc.values.numel(); ++i)
        worst = std::max(worst, std::fabs(Wc.values[i] - (a * Wf.values[i] + b * Wg.values[i])));
    CHECK(worst / Wc.values.max_abs() <= 1e-12);
}

TEST_CASE("scalogram and spectrogram are nonnegative") {
    auto f = random_signal(11, 256);
    CwtMap W = cwt(f, MotherWavelet::mexican_hat(), ScaleGrid::exponential(2.0, 0, 3));
    Tensor p = W.power();
    for (std::int64_t i = 0; i < p.numel(); ++i) CHECK(p[i] >= 0.0);

    StftMap S = stft(f, 64, 16);
    Tensor sp = S.power();
    for (std::int64_t i = 0; i < sp.numel(); ++i) CHECK(sp[i] >= 0.0);
}

TEST_CASE("property name round trip") {
    for (TfProperty p : all_tf_properties()) {
        CHECK(tf_property_from_name(tf_property_name(p)) == p);
    }
    CHECK_THROWS_AS(tf_property_from_name("nope"), Error);
}
