#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "frontal/rng.hpp"
#include "frontal/tensor.hpp"

// Forward ops for the five layer types the models need, plus elementwise
// arithmetic and the L1 mean loss. Every op optionally records its backward
// rule on a Tape; pass nullptr for plain inference. Backward rules
// accumulate (+=) so fan-out just works.

namespace frontal {

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
    }
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.shape().size() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(t.shape()));
    }
}

} // namespace detail

// Deterministic uniform fill in [lo,hi). Not recorded on any tape.
inline Tensor seeded_uniform(const Shape& shape, double lo, double hi, std::uint64_t seed) {
    if (!(lo < hi)) throw ContractError("seeded_uniform: requires lo < hi");
    Tensor out = Tensor::zeros(shape); // rejects empty shapes and zero extents
    SplitMix64 rng(seed);
    for (double& v : out.values_mut()) v = rng.uniform(lo, hi);
    return out;
}

namespace detail {

template <typename Fwd, typename Bwd>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, Tape* tape, const char* name,
                          Fwd fwd, Bwd bwd) {
    require_same_shape(a, b, name);
    Tensor out = make_op_output(a.shape(), tape);
    const auto av = a.values();
    const auto bv = b.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(av[i], bv[i]);
    if (tape) {
        auto ai = a.impl();
        auto bi = b.impl();
        auto oi = out.impl();
        tape->record({ai, bi}, oi, [ai, bi, oi, bwd] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                bwd(oi->grad[i], ai->values[i], bi->values[i], ai->grad[i], bi->grad[i]);
            }
        });
    }
    return out;
}

} // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    return detail::elementwise_binary(
        a, b, tape, "add", [](double x, double y) { return x + y; },
        [](double g, double, double, double& ga, double& gb) {
            ga += g;
            gb += g;
        });
}

inline Tensor sub(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    return detail::elementwise_binary(
        a, b, tape, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double, double& ga, double& gb) {
            ga += g;
            gb -= g;
        });
}

inline Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    return detail::elementwise_binary(
        a, b, tape, "mul", [](double x, double y) { return x * y; },
        [](double g, double x, double y, double& ga, double& gb) {
            ga += g * y;
            gb += g * x;
        });
}

inline Tensor scale(const Tensor& a, double s, Tape* tape = nullptr) {
    Tensor out = make_op_output(a.shape(), tape);
    const auto av = a.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * s;
    if (tape) {
        auto ai = a.impl();
        auto oi = out.impl();
        tape->record({ai}, oi, [ai, oi, s] {
            ai->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * s;
        });
    }
    return out;
}

// elu(x) = x for x >= 0, exp(x) - 1 otherwise (alpha = 1).
inline Tensor elu(const Tensor& x, Tape* tape = nullptr) {
    Tensor out = make_op_output(x.shape(), tape);
    const auto xv = x.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        ov[i] = xv[i] >= 0.0 ? xv[i] : std::expm1(xv[i]);
    }
    if (tape) {
        auto xi = x.impl();
        auto oi = out.impl();
        tape->record({xi}, oi, [xi, oi] {
            xi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                double d = xi->values[i] >= 0.0 ? 1.0 : oi->values[i] + 1.0;
                xi->grad[i] += oi->grad[i] * d;
            }
        });
    }
    return out;
}

inline Tensor tanh(const Tensor& x, Tape* tape = nullptr) {
    Tensor out = make_op_output(x.shape(), tape);
    const auto xv = x.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(xv[i]);
    if (tape) {
        auto xi = x.impl();
        auto oi = out.impl();
        tape->record({xi}, oi, [xi, oi] {
            xi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                double y = oi->values[i];
                xi->grad[i] += oi->grad[i] * (1.0 - y * y);
            }
        });
    }
    return out;
}

// y = x W + b with x [N,in], W [in,out], b [out].
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b, Tape* tape = nullptr) {
    detail::require_rank(x, 2, "linear");
    detail::require_rank(w, 2, "linear");
    detail::require_rank(b, 1, "linear");
    const std::int64_t n = x.shape()[0], in = x.shape()[1];
    const std::int64_t out_dim = w.shape()[1];
    if (w.shape()[0] != in) {
        throw ShapeError("linear: input width " + std::to_string(in) + " does not match weight " +
                         shape_str(w.shape()));
    }
    if (b.shape()[0] != out_dim) {
        throw ShapeError("linear: bias " + shape_str(b.shape()) + " does not match weight " +
                         shape_str(w.shape()));
    }
    Tensor y = make_op_output({n, out_dim}, tape);
    const double* xv = x.values().data();
    const double* wv = w.values().data();
    const double* bv = b.values().data();
    double* yv = y.values_mut().data();
    for (std::int64_t r = 0; r < n; ++r) {
        for (std::int64_t o = 0; o < out_dim; ++o) yv[r * out_dim + o] = bv[o];
        for (std::int64_t i = 0; i < in; ++i) {
            const double xi = xv[r * in + i];
            const double* wrow = wv + i * out_dim;
            double* yrow = yv + r * out_dim;
            for (std::int64_t o = 0; o < out_dim; ++o) yrow[o] += xi * wrow[o];
        }
    }
    if (tape) {
        auto xi = x.impl();
        auto wi = w.impl();
        auto bi = b.impl();
        auto yi = y.impl();
        tape->record({xi, wi, bi}, yi, [xi, wi, bi, yi, n, in, out_dim] {
            xi->ensure_grad();
            wi->ensure_grad();
            bi->ensure_grad();
            const double* gy = yi->grad.data();
            for (std::int64_t r = 0; r < n; ++r) {
                const double* gyrow = gy + r * out_dim;
                for (std::int64_t o = 0; o < out_dim; ++o) bi->grad[o] += gyrow[o];
                for (std::int64_t i = 0; i < in; ++i) {
                    const double xval = xi->values[r * in + i];
                    const double* wrow = wi->values.data() + i * out_dim;
                    double* gwrow = wi->grad.data() + i * out_dim;
                    double acc = 0.0;
                    for (std::int64_t o = 0; o < out_dim; ++o) {
                        acc += gyrow[o] * wrow[o];
                        gwrow[o] += gyrow[o] * xval;
                    }
                    xi->grad[r * in + i] += acc;
                }
            }
        });
    }
    return y;
}

// Mean absolute difference over all elements. Subgradient 0 at ties.
inline Tensor l1_mean(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    detail::require_same_shape(a, b, "l1_mean");
    Tensor out = make_op_output({1}, tape);
    const auto av = a.values();
    const auto bv = b.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(av[i] - bv[i]);
    const double inv_n = 1.0 / static_cast<double>(av.size());
    out.values_mut()[0] = acc * inv_n;
    if (tape) {
        auto ai = a.impl();
        auto bi = b.impl();
        auto oi = out.impl();
        tape->record({ai, bi}, oi, [ai, bi, oi, inv_n] {
            ai->ensure_grad();
            bi->ensure_grad();
            const double g = oi->grad[0] * inv_n;
            for (std::size_t i = 0; i < ai->values.size(); ++i) {
                const double d = ai->values[i] - bi->values[i];
                const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                ai->grad[i] += g * s;
                bi->grad[i] -= g * s;
            }
        });
    }
    return out;
}

// Same data, new shape. Copies so the output has its own storage.
inline Tensor reshape(const Tensor& x, Shape target, Tape* tape = nullptr) {
    if (shape_numel(target) != x.numel()) {
        throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(target) +
                         " changes element count");
    }
    Tensor out = make_op_output(std::move(target), tape);
    std::copy(x.values().begin(), x.values().end(), out.values_mut().begin());
    if (tape) {
        auto xi = x.impl();
        auto oi = out.impl();
        tape->record({xi}, oi, [xi, oi] {
            xi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
        });
    }
    return out;
}

// x [N,C,H,W] conv kernel [F,C,kh,kw], zero padding. Output spatial extent
// must divide exactly: H' = (H + 2p - kh)/stride + 1.
inline Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad,
                     Tape* tape = nullptr) {
    detail::require_rank(x, 4, "conv2d");
    detail::require_rank(k, 4, "conv2d");
    if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
    if (pad < 0) throw ContractError("conv2d: pad must be >= 0");
    const std::int64_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    const std::int64_t f = k.shape()[0], kc = k.shape()[1], kh = k.shape()[2], kw = k.shape()[3];
    if (kc != c) {
        throw ShapeError("conv2d: kernel channels " + shape_str(k.shape()) +
                         " do not match input " + shape_str(x.shape()));
    }
    const std::int64_t num_h = h + 2 * pad - kh;
    const std::int64_t num_w = w + 2 * pad - kw;
    if (num_h < 0 || num_w < 0 || num_h % stride != 0 || num_w % stride != 0) {
        throw ShapeError("conv2d: input " + shape_str(x.shape()) + ", kernel " +
                         shape_str(k.shape()) + ", stride " + std::to_string(stride) + ", pad " +
                         std::to_string(pad) + " has no exact output extent");
    }
    const std::int64_t oh = num_h / stride + 1;
    const std::int64_t ow = num_w / stride + 1;

    Tensor y = make_op_output({n, f, oh, ow}, tape);
    const double* xv = x.values().data();
    const double* kv = k.values().data();
    double* yv = y.values_mut().data();
    for (std::int64_t in = 0; in < n; ++in) {
        for (std::int64_t of = 0; of < f; ++of) {
            double* yplane = yv + (in * f + of) * oh * ow;
            for (std::int64_t ic = 0; ic < c; ++ic) {
                const double* xplane = xv + (in * c + ic) * h * w;
                const double* kplane = kv + (of * c + ic) * kh * kw;
                for (std::int64_t r = 0; r < oh; ++r) {
                    for (std::int64_t ki = 0; ki < kh; ++ki) {
                        const std::int64_t ih = r * stride - pad + ki;
                        if (ih < 0 || ih >= h) continue;
                        const double* xrow = xplane + ih * w;
                        const double* krow = kplane + ki * kw;
                        double* yrow = yplane + r * ow;
                        for (std::int64_t q = 0; q < ow; ++q) {
                            double acc = 0.0;
                            const std::int64_t iw0 = q * stride - pad;
                            for (std::int64_t kj = 0; kj < kw; ++kj) {
                                const std::int64_t iw = iw0 + kj;
                                if (iw < 0 || iw >= w) continue;
                                acc += xrow[iw] * krow[kj];
                            }
                            yrow[q] += acc;
                        }
                    }
                }
            }
        }
    }
    if (tape) {
        auto xi = x.impl();
        auto ki = k.impl();
        auto yi = y.impl();
        const int s = stride, p = pad;
        tape->record({xi, ki}, yi, [xi, ki, yi, n, c, h, w, f, kh, kw, oh, ow, s, p] {
            xi->ensure_grad();
            ki->ensure_grad();
            const double* gy = yi->grad.data();
            const double* xv = xi->values.data();
            const double* kv = ki->values.data();
            double* gx = xi->grad.data();
            double* gk = ki->grad.data();
            for (std::int64_t in = 0; in < n; ++in) {
                for (std::int64_t of = 0; of < f; ++of) {
                    const double* gyplane = gy + (in * f + of) * oh * ow;
                    for (std::int64_t ic = 0; ic < c; ++ic) {
                        const double* xplane = xv + (in * c + ic) * h * w;
                        double* gxplane = gx + (in * c + ic) * h * w;
                        const double* kplane = kv + (of * c + ic) * kh * kw;
                        double* gkplane = gk + (of * c + ic) * kh * kw;
                        for (std::int64_t r = 0; r < oh; ++r) {
                            for (std::int64_t ki2 = 0; ki2 < kh; ++ki2) {
                                const std::int64_t ih = r * s - p + ki2;
                                if (ih < 0 || ih >= h) continue;
                                const double* gyrow = gyplane + r * ow;
                                for (std::int64_t q = 0; q < ow; ++q) {
                                    const double g = gyrow[q];
                                    if (g == 0.0) continue;
                                    const std::int64_t iw0 = q * s - p;
                                    for (std::int64_t kj = 0; kj < kw; ++kj) {
                                        const std::int64_t iw = iw0 + kj;
                                        if (iw < 0 || iw >= w) continue;
                                        gxplane[ih * w + iw] += g * kplane[ki2 * kw + kj];
                                        gkplane[ki2 * kw + kj] += g * xplane[ih * w + iw];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return y;
}

// Transposed convolution: x [N,C,H,W], kernel [C,F,kh,kw],
// H' = (H - 1)*stride - 2*pad + kh. Adjoint of conv2d with the same kernel
// storage: <conv2d(x;K), y> == <x, deconv2d(y;K)>.
inline Tensor deconv2d(const Tensor& x, const Tensor& k, int stride, int pad,
                       Tape* tape = nullptr) {
    detail::require_rank(x, 4, "deconv2d");
    detail::require_rank(k, 4, "deconv2d");
    if (stride < 1) throw ContractError("deconv2d: stride must be >= 1");
    if (pad < 0) throw ContractError("deconv2d: pad must be >= 0");
    const std::int64_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    const std::int64_t kc = k.shape()[0], f = k.shape()[1], kh = k.shape()[2], kw = k.shape()[3];
    if (kc != c) {
        throw ShapeError("deconv2d: kernel channels " + shape_str(k.shape()) +
                         " do not match input " + shape_str(x.shape()));
    }
    const std::int64_t oh = (h - 1) * stride - 2 * pad + kh;
    const std::int64_t ow = (w - 1) * stride - 2 * pad + kw;
    if (oh < 1 || ow < 1) {
        throw ShapeError("deconv2d: input " + shape_str(x.shape()) + ", kernel " +
                         shape_str(k.shape()) + ", stride " + std::to_string(stride) + ", pad " +
                         std::to_string(pad) + " yields an empty output");
    }

    Tensor y = make_op_output({n, f, oh, ow}, tape);
    const double* xv = x.values().data();
    const double* kv = k.values().data();
    double* yv = y.values_mut().data();
    for (std::int64_t in = 0; in < n; ++in) {
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const double* xplane = xv + (in * c + ic) * h * w;
            for (std::int64_t of = 0; of < f; ++of) {
                double* yplane = yv + (in * f + of) * oh * ow;
                const double* kplane = kv + (ic * f + of) * kh * kw;
                for (std::int64_t r = 0; r < h; ++r) {
                    for (std::int64_t ki = 0; ki < kh; ++ki) {
                        const std::int64_t out_r = r * stride - pad + ki;
                        if (out_r < 0 || out_r >= oh) continue;
                        const double* xrow = xplane + r * w;
                        const double* krow = kplane + ki * kw;
                        double* yrow = yplane + out_r * ow;
                        for (std::int64_t q = 0; q < w; ++q) {
                            const double v = xrow[q];
                            if (v == 0.0) continue;
                            const std::int64_t ow0 = q * stride - pad;
                            for (std::int64_t kj = 0; kj < kw; ++kj) {
                                const std::int64_t out_c = ow0 + kj;
                                if (out_c < 0 || out_c >= ow) continue;
                                yrow[out_c] += v * krow[kj];
                            }
                        }
                    }
                }
            }
        }
    }
    if (tape) {
        auto xi = x.impl();
        auto ki = k.impl();
        auto yi = y.impl();
        const int s = stride, p = pad;
        tape->record({xi, ki}, yi, [xi, ki, yi, n, c, h, w, f, kh, kw, oh, ow, s, p] {
            xi->ensure_grad();
            ki->ensure_grad();
            const double* gy = yi->grad.data();
            const double* xv = xi->values.data();
            const double* kv = ki->values.data();
            double* gx = xi->grad.data();
            double* gk = ki->grad.data();
            for (std::int64_t in = 0; in < n; ++in) {
                for (std::int64_t ic = 0; ic < c; ++ic) {
                    const double* xplane = xv + (in * c + ic) * h * w;
                    double* gxplane = gx + (in * c + ic) * h * w;
                    for (std::int64_t of = 0; of < f; ++of) {
                        const double* gyplane = gy + (in * f + of) * oh * ow;
                        const double* kplane = kv + (ic * f + of) * kh * kw;
                        double* gkplane = gk + (ic * f + of) * kh * kw;
                        for (std::int64_t r = 0; r < h; ++r) {
                            for (std::int64_t ki2 = 0; ki2 < kh; ++ki2) {
                                const std::int64_t out_r = r * s - p + ki2;
                                if (out_r < 0 || out_r >= oh) continue;
                                const double* gyrow = gyplane + out_r * ow;
                                for (std::int64_t q = 0; q < w; ++q) {
                                    const std::int64_t ow0 = q * s - p;
                                    double acc = 0.0;
                                    for (std::int64_t kj = 0; kj < kw; ++kj) {
                                        const std::int64_t out_c = ow0 + kj;
                                        if (out_c < 0 || out_c >= ow) continue;
                                        const double g = gyrow[out_c];
                                        acc += g * kplane[ki2 * kw + kj];
                                        gkplane[ki2 * kw + kj] += g * xplane[r * w + q];
                                    }
                                    gxplane[r * w + q] += acc;
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return y;
}

// Nearest-neighbour x2 upsampling of [N,C,H,W].
inline Tensor upsample2x(const Tensor& x, Tape* tape = nullptr) {
    detail::require_rank(x, 4, "upsample2x");
    const std::int64_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    Tensor y = make_op_output({n, c, 2 * h, 2 * w}, tape);
    const double* xv = x.values().data();
    double* yv = y.values_mut().data();
    const std::int64_t planes = n * c;
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const double* xp = xv + pl * h * w;
        double* yp = yv + pl * 4 * h * w;
        for (std::int64_t r = 0; r < h; ++r) {
            for (std::int64_t q = 0; q < w; ++q) {
                const double v = xp[r * w + q];
                double* base = yp + (2 * r) * (2 * w) + 2 * q;
                base[0] = v;
                base[1] = v;
                base[2 * w] = v;
                base[2 * w + 1] = v;
            }
        }
    }
    if (tape) {
        auto xi = x.impl();
        auto yi = y.impl();
        tape->record({xi}, yi, [xi, yi, planes, h, w] {
            xi->ensure_grad();
            const double* gy = yi->grad.data();
            double* gx = xi->grad.data();
            for (std::int64_t pl = 0; pl < planes; ++pl) {
                const double* gyp = gy + pl * 4 * h * w;
                double* gxp = gx + pl * h * w;
                for (std::int64_t r = 0; r < h; ++r) {
                    for (std::int64_t q = 0; q < w; ++q) {
                        const double* base = gyp + (2 * r) * (2 * w) + 2 * q;
                        gxp[r * w + q] += base[0] + base[1] + base[2 * w] + base[2 * w + 1];
                    }
                }
            }
        });
    }
    return y;
}

// Adds a per-channel bias [C] to x [N,C,H,W].
inline Tensor bias_add(const Tensor& x, const Tensor& b, Tape* tape = nullptr) {
    detail::require_rank(x, 4, "bias_add");
    detail::require_rank(b, 1, "bias_add");
    const std::int64_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    if (b.shape()[0] != c) {
        throw ShapeError("bias_add: bias " + shape_str(b.shape()) + " does not match channels of " +
                         shape_str(x.shape()));
    }
    Tensor y = make_op_output(x.shape(), tape);
    const double* xv = x.values().data();
    const double* bv = b.values().data();
    double* yv = y.values_mut().data();
    const std::int64_t hw = h * w;
    for (std::int64_t in = 0; in < n; ++in) {
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const double bias = bv[ic];
            const double* xp = xv + (in * c + ic) * hw;
            double* yp = yv + (in * c + ic) * hw;
            for (std::int64_t i = 0; i < hw; ++i) yp[i] = xp[i] + bias;
        }
    }
    if (tape) {
        auto xi = x.impl();
        auto bi = b.impl();
        auto yi = y.impl();
        tape->record({xi, bi}, yi, [xi, bi, yi, n, c, hw] {
            xi->ensure_grad();
            bi->ensure_grad();
            const double* gy = yi->grad.data();
            for (std::int64_t in = 0; in < n; ++in) {
                for (std::int64_t ic = 0; ic < c; ++ic) {
                    const double* gyp = gy + (in * c + ic) * hw;
                    double* gxp = xi->grad.data() + (in * c + ic) * hw;
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < hw; ++i) {
                        gxp[i] += gyp[i];
                        acc += gyp[i];
                    }
                    bi->grad[ic] += acc;
                }
            }
        });
    }
    return y;
}

// Left-right flip of [N,C,H,W]: column order reversed, rows untouched.
// Data-side transform, never recorded on a tape.
inline Tensor mirror(const Tensor& x) {
    detail::require_rank(x, 4, "mirror");
    const std::int64_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    Tensor y = Tensor::zeros(x.shape());
    const double* xv = x.values().data();
    double* yv = y.values_mut().data();
    for (std::int64_t pl = 0; pl < n * c; ++pl) {
        for (std::int64_t r = 0; r < h; ++r) {
            const double* xrow = xv + (pl * h + r) * w;
            double* yrow = yv + (pl * h + r) * w;
            for (std::int64_t q = 0; q < w; ++q) yrow[q] = xrow[w - 1 - q];
        }
    }
    return y;
}

} // namespace frontal
