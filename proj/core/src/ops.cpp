#include "scalewave/ops.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>

namespace scalewave {

Value add(Tape& tape, Value a, Value b) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    check_shape(av.same_shape(bv), "add shape mismatch " + shape_to_string(av.shape()) + " vs " + shape_to_string(bv.shape()));
    Tensor out(av.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] + bv[i];
    return tape.emit("add", {a, b}, std::move(out), [a, b](Tape& t, const Tape::Node& n) {
        if (t.node(a).requires_grad) t.accumulate_grad(a, n.grad);
        if (t.node(b).requires_grad) t.accumulate_grad(b, n.grad);
    });
}

Value mul(Tape& tape, Value a, Value b) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    check_shape(av.same_shape(bv), "mul shape mismatch " + shape_to_string(av.shape()) + " vs " + shape_to_string(bv.shape()));
    Tensor out(av.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] * bv[i];
    return tape.emit("mul", {a, b}, std::move(out), [a, b](Tape& t, const Tape::Node& n) {
        const Tensor& av2 = t.value(a);
        const Tensor& bv2 = t.value(b);
        if (t.node(a).requires_grad) {
            Tensor ga(av2.shape());
            for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = n.grad[i] * bv2[i];
            t.accumulate_grad(a, ga);
        }
        if (t.node(b).requires_grad) {
            Tensor gb(bv2.shape());
            for (std::int64_t i = 0; i < gb.numel(); ++i) gb[i] = n.grad[i] * av2[i];
            t.accumulate_grad(b, gb);
        }
    });
}

Value scale(Tape& tape, Value a, double c) {
    const Tensor& av = tape.value(a);
    Tensor out(av.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] * c;
    return tape.emit("scale", {a}, std::move(out), [a, c](Tape& t, const Tape::Node& n) {
        Tensor ga(n.grad.shape());
        for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = n.grad[i] * c;
        t.accumulate_grad(a, ga);
    });
}

Value relu(Tape& tape, Value a) {
    const Tensor& av = tape.value(a);
    Tensor out(av.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
    return tape.emit("relu", {a}, std::move(out), [a](Tape& t, const Tape::Node& n) {
        const Tensor& av2 = t.value(a);
        Tensor ga(av2.shape());
        // Subgradient 0 at the kink.
        for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = av2[i] > 0.0 ? n.grad[i] : 0.0;
        t.accumulate_grad(a, ga);
    });
}

Value reshape(Tape& tape, Value a, Shape new_shape) {
    Tensor out = tape.value(a).reshaped(new_shape);
    return tape.emit("reshape", {a}, std::move(out), [a](Tape& t, const Tape::Node& n) {
        t.accumulate_grad(a, n.grad.reshaped(t.value(a).shape()));
    });
}

Value reduce_sum(Tape& tape, Value a) {
    const Tensor& av = tape.value(a);
    Tensor out = Tensor::scalar(av.sum());
    return tape.emit("reduce_sum", {a}, std::move(out), [a](Tape& t, const Tape::Node& n) {
        Tensor ga(t.value(a).shape(), n.grad[0]);
        t.accumulate_grad(a, ga);
    });
}

Value reduce_mean(Tape& tape, Value a) {
    const Tensor& av = tape.value(a);
    check_contract(av.numel() > 0, "reduce_mean on empty tensor");
    const double inv_n = 1.0 / static_cast<double>(av.numel());
    Tensor out = Tensor::scalar(av.sum() * inv_n);
    return tape.emit("reduce_mean", {a}, std::move(out), [a, inv_n](Tape& t, const Tape::Node& n) {
        Tensor ga(t.value(a).shape(), n.grad[0] * inv_n);
        t.accumulate_grad(a, ga);
    });
}

Value mean_over_last(Tape& tape, Value a) {
    const Tensor& av = tape.value(a);
    check_shape(av.rank() >= 1, "mean_over_last needs rank >= 1");
    const std::int64_t T = av.dim(-1);
    check_contract(T > 0, "mean_over_last over empty axis");
    const std::int64_t rows = av.numel() / T;
    Shape out_shape(av.shape().begin(), av.shape().end() - 1);
    Tensor out(out_shape);
    for (std::int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::int64_t t = 0; t < T; ++t) acc += av[r * T + t];
        out[r] = acc / static_cast<double>(T);
    }
    return tape.emit("mean_over_last", {a}, std::move(out), [a, T](Tape& t, const Tape::Node& n) {
        Tensor ga(t.value(a).shape());
        const double inv_t = 1.0 / static_cast<double>(T);
        for (std::int64_t r = 0; r < n.grad.numel(); ++r) {
            const double g = n.grad[r] * inv_t;
            for (std::int64_t j = 0; j < T; ++j) ga[r * T + j] = g;
        }
        t.accumulate_grad(a, ga);
    });
}

Value dense(Tape& tape, Value x, Value w, Value b) {
    const Tensor& xv = tape.value(x);
    const Tensor& wv = tape.value(w);
    const Tensor& bv = tape.value(b);
    check_shape(xv.rank() == 2, "dense input must be [batch, in], got " + shape_to_string(xv.shape()));
    check_shape(wv.rank() == 2, "dense weight must be [out, in], got " + shape_to_string(wv.shape()));
    check_shape(xv.dim(1) == wv.dim(1),
                "dense feature axis mismatch: input " + std::to_string(xv.dim(1)) + " vs weight " + std::to_string(wv.dim(1)));
    check_shape(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "dense bias must be [out]");
    const std::int64_t B = xv.dim(0), In = xv.dim(1), Out = wv.dim(0);
    Tensor out(Shape{B, Out});
    for (std::int64_t i = 0; i < B; ++i) {
        for (std::int64_t o = 0; o < Out; ++o) {
            double acc = bv[o];
            for (std::int64_t j = 0; j < In; ++j) acc += xv[i * In + j] * wv[o * In + j];
            out[i * Out + o] = acc;
        }
    }
    return tape.emit("dense", {x, w, b}, std::move(out), [x, w, b, B, In, Out](Tape& t, const Tape::Node& n) {
        const Tensor& xv2 = t.value(x);
        const Tensor& wv2 = t.value(w);
        if (t.node(x).requires_grad) {
            Tensor gx(Shape{B, In});
            for (std::int64_t i = 0; i < B; ++i)
                for (std::int64_t o = 0; o < Out; ++o) {
                    const double g = n.grad[i * Out + o];
                    for (std::int64_t j = 0; j < In; ++j) gx[i * In + j] += g * wv2[o * In + j];
                }
            t.accumulate_grad(x, gx);
        }
        if (t.node(w).requires_grad) {
            Tensor gw(Shape{Out, In});
            for (std::int64_t i = 0; i < B; ++i)
                for (std::int64_t o = 0; o < Out; ++o) {
                    const double g = n.grad[i * Out + o];
                    for (std::int64_t j = 0; j < In; ++j) gw[o * In + j] += g * xv2[i * In + j];
                }
            t.accumulate_grad(w, gw);
        }
        if (t.node(b).requires_grad) {
            Tensor gb(Shape{Out});
            for (std::int64_t i = 0; i < B; ++i)
                for (std::int64_t o = 0; o < Out; ++o) gb[o] += n.grad[i * Out + o];
            t.accumulate_grad(b, gb);
        }
    });
}

Value conv1d(Tape& tape, Value input, Value kernel, const Conv1dSpec& spec) {
    Tensor out = conv1d_forward(tape.value(input), tape.value(kernel), spec);
    return tape.emit("conv1d", {input, kernel}, std::move(out), [input, kernel, spec](Tape& t, const Tape::Node& n) {
        const Tensor& in = t.value(input);
        const Tensor& k = t.value(kernel);
        if (t.node(input).requires_grad) {
            t.accumulate_grad(input, conv1d_backward_input(n.grad, k, spec, in.dim(2)));
        }
        if (t.node(kernel).requires_grad) {
            t.accumulate_grad(kernel, conv1d_backward_kernel(n.grad, in, spec, k.dim(2)));
        }
    });
}

Value maxpool1d(Tape& tape, Value input, std::int64_t window, std::int64_t stride) {
    MaxPoolResult res = maxpool1d_forward(tape.value(input), window, stride);
    auto argmax = std::make_shared<std::vector<std::int64_t>>(std::move(res.argmax));
    const std::int64_t T = tape.value(input).dim(-1);
    return tape.emit("maxpool1d", {input}, std::move(res.output), [input, argmax, T](Tape& t, const Tape::Node& n) {
        Tensor ga(t.value(input).shape());
        const std::int64_t Tout = n.value.dim(-1);
        const std::int64_t rows = n.value.numel() / Tout;
        for (std::int64_t r = 0; r < rows; ++r) {
            for (std::int64_t o = 0; o < Tout; ++o) {
                ga[r * T + (*argmax)[r * Tout + o]] += n.grad[r * Tout + o];
            }
        }
        t.accumulate_grad(input, ga);
    });
}

Value project_scales(Tape& tape, Value input, PoolKind kind) {
    const Tensor& xv = tape.value(input);
    check_shape(xv.rank() == 4, "project_scales expects [batch, ch, scales, time], got " + shape_to_string(xv.shape()));
    const std::int64_t B = xv.dim(0), C = xv.dim(1), S = xv.dim(2), T = xv.dim(3);
    check_contract(S >= 1, "project_scales needs at least one scale");
    Tensor out(Shape{B, C, T});

    if (kind == PoolKind::mean) {
        const double inv_s = 1.0 / static_cast<double>(S);
        for (std::int64_t bc = 0; bc < B * C; ++bc) {
            for (std::int64_t t = 0; t < T; ++t) {
                double acc = 0.0;
                for (std::int64_t s = 0; s < S; ++s) acc += xv[(bc * S + s) * T + t];
                out[bc * T + t] = acc * inv_s;
            }
        }
        return tape.emit("project_scales_mean", {input}, std::move(out), [input, S, T](Tape& t, const Tape::Node& n) {
            Tensor ga(t.value(input).shape());
            const double inv_s = 1.0 / static_cast<double>(S);
            for (std::int64_t bc = 0; bc < n.grad.numel() / T; ++bc)
                for (std::int64_t tt = 0; tt < T; ++tt) {
                    const double g = n.grad[bc * T + tt] * inv_s;
                    for (std::int64_t s = 0; s < S; ++s) ga[(bc * S + s) * T + tt] = g;
                }
            t.accumulate_grad(input, ga);
        });
    }

    auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(B * C * T));
    for (std::int64_t bc = 0; bc < B * C; ++bc) {
        for (std::int64_t t = 0; t < T; ++t) {
            std::int64_t best = 0;
            double bv = xv[(bc * S) * T + t];
            for (std::int64_t s = 1; s < S; ++s) {
                const double v = xv[(bc * S + s) * T + t];
                if (v > bv) {
                    bv = v;
                    best = s;
                }
            }
            out[bc * T + t] = bv;
            (*argmax)[bc * T + t] = best;
        }
    }
    return tape.emit("project_scales_max", {input}, std::move(out), [input, argmax, S, T](Tape& t, const Tape::Node& n) {
        Tensor ga(t.value(input).shape());
        for (std::int64_t bc = 0; bc < n.grad.numel() / T; ++bc)
            for (std::int64_t tt = 0; tt < T; ++tt)
                ga[(bc * S + (*argmax)[bc * T + tt]) * T + tt] += n.grad[bc * T + tt];
        t.accumulate_grad(input, ga);
    });
}

Value dropout(Tape& tape, Value input, double rate, std::mt19937_64& rng, bool train) {
    check(rate >= 0.0 && rate < 1.0, ErrorCode::invalid_argument, "dropout rate must be in [0, 1)");
    if (!train || rate == 0.0) return input;
    const Tensor& xv = tape.value(input);
    auto mask = std::make_shared<std::vector<double>>(static_cast<std::size_t>(xv.numel()));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor out(xv.shape());
    for (std::int64_t i = 0; i < xv.numel(); ++i) {
        const double m = u(rng) < rate ? 0.0 : keep_scale;
        (*mask)[i] = m;
        out[i] = xv[i] * m;
    }
    return tape.emit("dropout", {input}, std::move(out), [input, mask](Tape& t, const Tape::Node& n) {
        Tensor ga(n.grad.shape());
        for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = n.grad[i] * (*mask)[i];
        t.accumulate_grad(input, ga);
    });
}

Value batchnorm1d(Tape& tape, Value input, Value gamma, Value beta, BatchNormState& state, bool train) {
    const Tensor& xv = tape.value(input);
    check_shape(xv.rank() >= 2, "batchnorm input must be [batch, ch, ...], got " + shape_to_string(xv.shape()));
    const std::int64_t C = xv.dim(1);
    check_shape(tape.value(gamma).shape() == Shape{C} && tape.value(beta).shape() == Shape{C},
                "batchnorm gain/bias must be [channels]");
    check_shape(state.running_mean.dim(0) == C, "batchnorm running stats channel mismatch");

    const std::int64_t B = xv.dim(0);
    std::int64_t spatial = 1;
    for (std::int64_t ax = 2; ax < xv.rank(); ++ax) spatial *= xv.dim(ax);
    const std::int64_t m = B * spatial;

    Tensor mean(Shape{C});
    Tensor var(Shape{C});
    if (train) {
        check_contract(m > 1, "batchnorm train mode needs batch*spatial > 1");
        for (std::int64_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t s = 0; s < spatial; ++s) acc += xv[(b * C + c) * spatial + s];
            mean[c] = acc / static_cast<double>(m);
        }
        for (std::int64_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t s = 0; s < spatial; ++s) {
                    const double d = xv[(b * C + c) * spatial + s] - mean[c];
                    acc += d * d;
                }
            var[c] = acc / static_cast<double>(m);  // biased, used for normalization
        }
        // Running stats keep the unbiased variance, torch-style.
        const double mom = state.momentum;
        const double unbias = static_cast<double>(m) / static_cast<double>(m - 1);
        for (std::int64_t c = 0; c < C; ++c) {
            state.running_mean[c] = (1.0 - mom) * state.running_mean[c] + mom * mean[c];
            state.running_var[c] = (1.0 - mom) * state.running_var[c] + mom * var[c] * unbias;
        }
        state.steps++;
    } else {
        if (state.steps == 0) {
            std::cerr << "[scalewave] warning: batchnorm eval before any train step, using init stats\n";
        }
        mean = state.running_mean;
        var = state.running_var;
    }

    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) (*inv_std)[c] = 1.0 / std::sqrt(var[c] + state.epsilon);

    const Tensor& gv = tape.value(gamma);
    const Tensor& bv = tape.value(beta);
    auto xhat = std::make_shared<Tensor>(xv.shape());
    Tensor out(xv.shape());
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c) {
            const double mu = mean[c];
            const double is = (*inv_std)[c];
            for (std::int64_t s = 0; s < spatial; ++s) {
                const std::int64_t i = (b * C + c) * spatial + s;
                const double xh = (xv[i] - mu) * is;
                (*xhat)[i] = xh;
                out[i] = gv[c] * xh + bv[c];
            }
        }

    return tape.emit("batchnorm1d", {input, gamma, beta}, std::move(out),
                     [input, gamma, beta, xhat, inv_std, B, C, spatial, m, train](Tape& t, const Tape::Node& n) {
                         const Tensor& gv2 = t.value(gamma);
                         Tensor dgamma(Shape{C});
                         Tensor dbeta(Shape{C});
                         for (std::int64_t b = 0; b < B; ++b)
                             for (std::int64_t c = 0; c < C; ++c)
                                 for (std::int64_t s = 0; s < spatial; ++s) {
                                     const std::int64_t i = (b * C + c) * spatial + s;
                                     dgamma[c] += n.grad[i] * (*xhat)[i];
                                     dbeta[c] += n.grad[i];
                                 }
                         if (t.node(gamma).requires_grad) t.accumulate_grad(gamma, dgamma);
                         if (t.node(beta).requires_grad) t.accumulate_grad(beta, dbeta);
                         if (!t.node(input).requires_grad) return;

                         Tensor gx(t.value(input).shape());
                         if (train) {
                             const double inv_m = 1.0 / static_cast<double>(m);
                             for (std::int64_t b = 0; b < B; ++b)
                                 for (std::int64_t c = 0; c < C; ++c) {
                                     const double k = gv2[c] * (*inv_std)[c];
                                     for (std::int64_t s = 0; s < spatial; ++s) {
                                         const std::int64_t i = (b * C + c) * spatial + s;
                                         gx[i] = k * (n.grad[i] - dbeta[c] * inv_m - (*xhat)[i] * dgamma[c] * inv_m);
                                     }
                                 }
                         } else {
                             for (std::int64_t b = 0; b < B; ++b)
                                 for (std::int64_t c = 0; c < C; ++c) {
                                     const double k = gv2[c] * (*inv_std)[c];
                                     for (std::int64_t s = 0; s < spatial; ++s) {
                                         const std::int64_t i = (b * C + c) * spatial + s;
                                         gx[i] = k * n.grad[i];
                                     }
                                 }
                         }
                         t.accumulate_grad(input, gx);
                     });
}

Tensor softmax_rows(const Tensor& logits) {
    check_shape(logits.rank() == 2, "softmax_rows expects [batch, classes]");
    const std::int64_t B = logits.dim(0), K = logits.dim(1);
    Tensor probs(logits.shape());
    for (std::int64_t b = 0; b < B; ++b) {
        double mx = logits[b * K];
        for (std::int64_t k = 1; k < K; ++k) mx = std::max(mx, logits[b * K + k]);
        double z = 0.0;
        for (std::int64_t k = 0; k < K; ++k) {
            probs[b * K + k] = std::exp(logits[b * K + k] - mx);
            z += probs[b * K + k];
        }
        for (std::int64_t k = 0; k < K; ++k) probs[b * K + k] /= z;
    }
    return probs;
}

Value softmax_cross_entropy(Tape& tape, Value logits, const std::vector<std::int64_t>& labels) {
    const Tensor& zv = tape.value(logits);
    check_shape(zv.rank() == 2, "softmax_cross_entropy expects logits [batch, classes]");
    const std::int64_t B = zv.dim(0), K = zv.dim(1);
    check_shape(static_cast<std::int64_t>(labels.size()) == B, "labels length must match batch");
    for (auto y : labels) check(y >= 0 && y < K, ErrorCode::invalid_argument, "label out of range");

    auto probs = std::make_shared<Tensor>(softmax_rows(zv));
    double loss = 0.0;
    for (std::int64_t b = 0; b < B; ++b) {
        // log p_y via the stabilized form: log p = z_y - max - log sum exp
        double mx = zv[b * K];
        for (std::int64_t k = 1; k < K; ++k) mx = std::max(mx, zv[b * K + k]);
        double lse = 0.0;
        for (std::int64_t k = 0; k < K; ++k) lse += std::exp(zv[b * K + k] - mx);
        loss += mx + std::log(lse) - zv[b * K + labels[b]];
    }
    loss /= static_cast<double>(B);

    auto labels_copy = std::make_shared<std::vector<std::int64_t>>(labels);
    return tape.emit("softmax_xent", {logits}, Tensor::scalar(loss),
                     [logits, probs, labels_copy, B, K](Tape& t, const Tape::Node& n) {
                         Tensor gz(t.value(logits).shape());
                         const double g = n.grad[0] / static_cast<double>(B);
                         for (std::int64_t b = 0; b < B; ++b)
                             for (std::int64_t k = 0; k < K; ++k) {
                                 const double onehot = k == (*labels_copy)[b] ? 1.0 : 0.0;
                                 gz[b * K + k] = g * ((*probs)[b * K + k] - onehot);
                             }
                         t.accumulate_grad(logits, gz);
                     });
}

Value sigmoid_binary_cross_entropy(Tape& tape, Value logits, const Tensor& targets) {
    const Tensor& zv = tape.value(logits);
    check_shape(zv.same_shape(targets), "sigmoid_bce target shape mismatch");
    const std::int64_t n_el = zv.numel();
    double loss = 0.0;
    for (std::int64_t i = 0; i < n_el; ++i) {
        const double z = zv[i], t = targets[i];
        // max(z,0) - z*t + log(1 + exp(-|z|))
        loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
    }
    loss /= static_cast<double>(n_el);
    auto targets_copy = std::make_shared<Tensor>(targets);
    return tape.emit("sigmoid_bce", {logits}, Tensor::scalar(loss),
                     [logits, targets_copy, n_el](Tape& t, const Tape::Node& n) {
                         const Tensor& zv2 = t.value(logits);
                         Tensor gz(zv2.shape());
                         const double g = n.grad[0] / static_cast<double>(n_el);
                         for (std::int64_t i = 0; i < n_el; ++i) {
                             const double sig = 1.0 / (1.0 + std::exp(-zv2[i]));
                             gz[i] = g * (sig - (*targets_copy)[i]);
                         }
                         t.accumulate_grad(logits, gz);
                     });
}

}  // namespace scalewave
