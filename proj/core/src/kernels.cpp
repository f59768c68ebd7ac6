#include "scalewave/kernels.hpp"

#include <algorithm>

namespace scalewave {

namespace {

inline std::int64_t wrap(std::int64_t x, std::int64_t n) {
    x %= n;
    return x < 0 ? x + n : x;
}

void check_conv_args(const Tensor& input, const Tensor& kernel, const Conv1dSpec& spec) {
    check_shape(input.rank() == 3, "conv1d input must be [batch, cin, time], got " + shape_to_string(input.shape()));
    check_shape(kernel.rank() == 3, "conv1d kernel must be [cout, cin, k], got " + shape_to_string(kernel.shape()));
    check_shape(input.dim(1) == kernel.dim(1),
                "conv1d channel axis mismatch: input cin=" + std::to_string(input.dim(1)) +
                    " kernel cin=" + std::to_string(kernel.dim(1)));
    check_contract(spec.stride >= 1, "conv1d stride must be >= 1");
    if (spec.padding == Padding::circular) {
        check_contract(spec.stride == 1, "circular padding requires stride 1");
    } else {
        check_contract(kernel.dim(2) <= input.dim(2) + 2 * spec.pad,
                       "kernel width " + std::to_string(kernel.dim(2)) + " exceeds padded input length " +
                           std::to_string(input.dim(2) + 2 * spec.pad));
    }
}

}  // namespace

std::int64_t conv1d_out_len(std::int64_t time, std::int64_t k, const Conv1dSpec& spec) {
    if (spec.padding == Padding::circular) return time;
    return (time + 2 * spec.pad - k) / spec.stride + 1;
}

Tensor conv1d_forward(const Tensor& input, const Tensor& kernel, const Conv1dSpec& spec) {
    check_conv_args(input, kernel, spec);
    const std::int64_t B = input.dim(0), Cin = input.dim(1), T = input.dim(2);
    const std::int64_t Cout = kernel.dim(0), K = kernel.dim(2);
    const std::int64_t Tout = conv1d_out_len(T, K, spec);
    Tensor out(Shape{B, Cout, Tout});

    const double* in = input.raw();
    const double* kw = kernel.raw();
    double* o = out.raw();

    if (spec.padding == Padding::circular) {
        // Kernel taps are centered: tap index tau corresponds to offset
        // tau - K/2 so that identity kernels map to zero shift for odd K.
        const std::int64_t half = K / 2;
        for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t oc = 0; oc < Cout; ++oc) {
                double* orow = o + (b * Cout + oc) * Tout;
                for (std::int64_t c = 0; c < Cin; ++c) {
                    const double* irow = in + (b * Cin + c) * T;
                    const double* krow = kw + (oc * Cin + c) * K;
                    for (std::int64_t t = 0; t < Tout; ++t) {
                        double acc = 0.0;
                        for (std::int64_t tau = 0; tau < K; ++tau) {
                            acc += irow[wrap(t + tau - half, T)] * krow[tau];
                        }
                        orow[t] += acc;
                    }
                }
            }
        }
        return out;
    }

    const std::int64_t p = spec.pad;
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t oc = 0; oc < Cout; ++oc) {
            double* orow = o + (b * Cout + oc) * Tout;
            for (std::int64_t c = 0; c < Cin; ++c) {
                const double* irow = in + (b * Cin + c) * T;
                const double* krow = kw + (oc * Cin + c) * K;
                for (std::int64_t t = 0; t < Tout; ++t) {
                    const std::int64_t start = t * spec.stride - p;
                    const std::int64_t tau_lo = std::max<std::int64_t>(0, -start);
                    const std::int64_t tau_hi = std::min<std::int64_t>(K, T - start);
                    double acc = 0.0;
                    for (std::int64_t tau = tau_lo; tau < tau_hi; ++tau) acc += irow[start + tau] * krow[tau];
                    orow[t] += acc;
                }
            }
        }
    }
    return out;
}

Tensor conv1d_backward_input(const Tensor& grad_out, const Tensor& kernel, const Conv1dSpec& spec,
                             std::int64_t time_in) {
    const std::int64_t B = grad_out.dim(0), Cout = grad_out.dim(1), Tout = grad_out.dim(2);
    const std::int64_t Cin = kernel.dim(1), K = kernel.dim(2);
    Tensor gin(Shape{B, Cin, time_in});
    const double* go = grad_out.raw();
    const double* kw = kernel.raw();
    double* gi = gin.raw();

    const bool circ = spec.padding == Padding::circular;
    const std::int64_t half = circ ? K / 2 : 0;
    const std::int64_t p = circ ? 0 : spec.pad;

    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t oc = 0; oc < Cout; ++oc) {
            const double* gorow = go + (b * Cout + oc) * Tout;
            for (std::int64_t c = 0; c < Cin; ++c) {
                double* girow = gi + (b * Cin + c) * time_in;
                const double* krow = kw + (oc * Cin + c) * K;
                for (std::int64_t t = 0; t < Tout; ++t) {
                    const double g = gorow[t];
                    if (g == 0.0) continue;
                    const std::int64_t start = t * spec.stride - p - half;
                    if (circ) {
                        for (std::int64_t tau = 0; tau < K; ++tau) {
                            girow[wrap(start + tau, time_in)] += g * krow[tau];
                        }
                    } else {
                        const std::int64_t tau_lo = std::max<std::int64_t>(0, -start);
                        const std::int64_t tau_hi = std::min<std::int64_t>(K, time_in - start);
                        for (std::int64_t tau = tau_lo; tau < tau_hi; ++tau) girow[start + tau] += g * krow[tau];
                    }
                }
            }
        }
    }
    return gin;
}

Tensor conv1d_backward_kernel(const Tensor& grad_out, const Tensor& input, const Conv1dSpec& spec,
                              std::int64_t k) {
    const std::int64_t B = grad_out.dim(0), Cout = grad_out.dim(1), Tout = grad_out.dim(2);
    const std::int64_t Cin = input.dim(1), T = input.dim(2);
    Tensor gk(Shape{Cout, Cin, k});
    const double* go = grad_out.raw();
    const double* in = input.raw();
    double* g = gk.raw();

    const bool circ = spec.padding == Padding::circular;
    const std::int64_t half = circ ? k / 2 : 0;
    const std::int64_t p = circ ? 0 : spec.pad;

    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t oc = 0; oc < Cout; ++oc) {
            const double* gorow = go + (b * Cout + oc) * Tout;
            for (std::int64_t c = 0; c < Cin; ++c) {
                const double* irow = in + (b * Cin + c) * T;
                double* grow = g + (oc * Cin + c) * k;
                for (std::int64_t t = 0; t < Tout; ++t) {
                    const double gv = gorow[t];
                    if (gv == 0.0) continue;
                    const std::int64_t start = t * spec.stride - p - half;
                    if (circ) {
                        for (std::int64_t tau = 0; tau < k; ++tau) grow[tau] += gv * irow[wrap(start + tau, T)];
                    } else {
                        const std::int64_t tau_lo = std::max<std::int64_t>(0, -start);
                        const std::int64_t tau_hi = std::min<std::int64_t>(k, T - start);
                        for (std::int64_t tau = tau_lo; tau < tau_hi; ++tau) grow[tau] += gv * irow[start + tau];
                    }
                }
            }
        }
    }
    return gk;
}

std::vector<double> circular_correlate_centered(const std::vector<double>& signal,
                                                const std::vector<double>& taps) {
    const std::int64_t n = static_cast<std::int64_t>(signal.size());
    const std::int64_t w = static_cast<std::int64_t>(taps.size());
    check_contract(w % 2 == 1, "centered tap vector must have odd length");
    const std::int64_t half = w / 2;
    std::vector<double> out(signal.size(), 0.0);
    for (std::int64_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::int64_t z = -half; z <= half; ++z) {
            acc += signal[static_cast<std::size_t>(wrap(t + z, n))] * taps[static_cast<std::size_t>(z + half)];
        }
        out[static_cast<std::size_t>(t)] = acc;
    }
    return out;
}

MaxPoolResult maxpool1d_forward(const Tensor& input, std::int64_t window, std::int64_t stride) {
    check_contract(window >= 1 && stride >= 1, "maxpool window and stride must be >= 1");
    const std::int64_t T = input.dim(-1);
    check_contract(window <= T, "maxpool window exceeds time axis");
    const std::int64_t rows = input.numel() / T;
    const std::int64_t Tout = (T - window) / stride + 1;

    Shape out_shape = input.shape();
    out_shape.back() = Tout;
    MaxPoolResult res{Tensor(std::move(out_shape)), {}};
    res.argmax.resize(static_cast<std::size_t>(rows * Tout));

    const double* in = input.raw();
    double* out = res.output.raw();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* irow = in + r * T;
        double* orow = out + r * Tout;
        std::int64_t* arow = res.argmax.data() + r * Tout;
        for (std::int64_t t = 0; t < Tout; ++t) {
            const std::int64_t start = t * stride;
            std::int64_t best = start;
            double bv = irow[start];
            for (std::int64_t j = 1; j < window; ++j) {
                if (irow[start + j] > bv) {
                    bv = irow[start + j];
                    best = start + j;
                }
            }
            orow[t] = bv;
            arow[t] = best;
        }
    }
    return res;
}

}  // namespace scalewave
