#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <utility>

#include "ifc/tensor.hpp"

namespace ifc {

enum class PadMode { same, valid };
enum class Mode { train, infer };

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using RowMatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
    int out_h = 0, out_w = 0, pad_top = 0, pad_left = 0;
};

// "Same" keeps out = ceil(in / stride) with the extra pad row/column at the
// bottom/right; "valid" is the standard shrink.
inline ConvGeometry conv_geometry(int h, int w, int kh, int kw, int stride, PadMode mode) {
    if (stride < 1 || kh < 1 || kw < 1) fail("kernel and stride must be >= 1");
    ConvGeometry g;
    if (mode == PadMode::same) {
        g.out_h = (h + stride - 1) / stride;
        g.out_w = (w + stride - 1) / stride;
        int pad_h = std::max((g.out_h - 1) * stride + kh - h, 0);
        int pad_w = std::max((g.out_w - 1) * stride + kw - w, 0);
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    } else {
        if (h < kh || w < kw) fail("input smaller than kernel");
        g.out_h = (h - kh) / stride + 1;
        g.out_w = (w - kw) / stride + 1;
    }
    return g;
}

// Patch matrix: row (c*kh + ky)*kw + kx, column oy*out_w + ox. Row order
// matches the row-major flattening of (filters, c, kh, kw) weights.
template <class S>
void im2col(const S* x, int c, int h, int w, int kh, int kw, int stride, const ConvGeometry& g,
            MatX<S>& col) {
    col.resize(c * kh * kw, g.out_h * g.out_w);
    for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
            S* dst = col.data() + size_t(oy * g.out_w + ox) * col.rows();
            int iy0 = oy * stride - g.pad_top;
            int ix0 = ox * stride - g.pad_left;
            for (int ic = 0; ic < c; ++ic) {
                const S* plane = x + size_t(ic) * h * w;
                for (int ky = 0; ky < kh; ++ky) {
                    int iy = iy0 + ky;
                    if (iy < 0 || iy >= h) {
                        for (int kx = 0; kx < kw; ++kx) *dst++ = S(0);
                        continue;
                    }
                    const S* row = plane + size_t(iy) * w;
                    for (int kx = 0; kx < kw; ++kx) {
                        int ix = ix0 + kx;
                        *dst++ = (ix >= 0 && ix < w) ? row[ix] : S(0);
                    }
                }
            }
        }
}

// Adjoint of im2col: scatter-adds patch columns back into the image.
template <class S>
void col2im_add(const MatX<S>& col, int c, int h, int w, int kh, int kw, int stride,
                const ConvGeometry& g, S* x) {
    for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
            const S* src = col.data() + size_t(oy * g.out_w + ox) * col.rows();
            int iy0 = oy * stride - g.pad_top;
            int ix0 = ox * stride - g.pad_left;
            for (int ic = 0; ic < c; ++ic) {
                S* plane = x + size_t(ic) * h * w;
                for (int ky = 0; ky < kh; ++ky) {
                    int iy = iy0 + ky;
                    if (iy < 0 || iy >= h) {
                        src += kw;
                        continue;
                    }
                    S* row = plane + size_t(iy) * w;
                    for (int kx = 0; kx < kw; ++kx) {
                        int ix = ix0 + kx;
                        if (ix >= 0 && ix < w) row[ix] += *src;
                        ++src;
                    }
                }
            }
        }
}

// ---------------------------------------------------------------------------
// Convolution (cross-correlation), weights (filters, in_c, kh, kw), bias (1, filters, 1, 1).

template <class S>
Tensor4<S> conv2d_forward(const Tensor4<S>& x, const Tensor4<S>& weights, const Tensor4<S>& bias,
                          int stride, PadMode pad) {
    if (weights.c != x.c) fail("conv weight channels do not match input");
    if (int(bias.size()) != weights.n) fail("bias length does not match filter count");
    ConvGeometry g = conv_geometry(x.h, x.w, weights.h, weights.w, stride, pad);
    int f = weights.n;
    int k = weights.c * weights.h * weights.w;
    Tensor4<S> out(x.n, f, g.out_h, g.out_w);
    Eigen::Map<const RowMatX<S>> wmat(weights.v.data(), f, k);
    MatX<S> col;
    for (int in = 0; in < x.n; ++in) {
        im2col(x.batch(in), x.c, x.h, x.w, weights.h, weights.w, stride, g, col);
        Eigen::Map<RowMatX<S>> omat(out.batch(in), f, g.out_h * g.out_w);
        omat.noalias() = wmat * col;
        for (int oc = 0; oc < f; ++oc) omat.row(oc).array() += bias.v[oc];
    }
    return out;
}

template <class S>
struct ConvGrads {
    Tensor4<S> x, w, b;
};

template <class S>
ConvGrads<S> conv2d_backward(const Tensor4<S>& x, const Tensor4<S>& weights,
                             const Tensor4<S>& grad_out, int stride, PadMode pad) {
    ConvGeometry g = conv_geometry(x.h, x.w, weights.h, weights.w, stride, pad);
    int f = weights.n;
    int k = weights.c * weights.h * weights.w;
    if (grad_out.n != x.n || grad_out.c != f || grad_out.h != g.out_h || grad_out.w != g.out_w)
        fail("grad shape does not match conv output");
    ConvGrads<S> grads{Tensor4<S>(x.n, x.c, x.h, x.w), Tensor4<S>(f, weights.c, weights.h, weights.w),
                       Tensor4<S>(1, f, 1, 1)};
    Eigen::Map<const RowMatX<S>> wmat(weights.v.data(), f, k);
    Eigen::Map<RowMatX<S>> gwmat(grads.w.v.data(), f, k);
    MatX<S> col, colg;
    for (int in = 0; in < x.n; ++in) {
        Eigen::Map<const RowMatX<S>> gout(grad_out.batch(in), f, g.out_h * g.out_w);
        im2col(x.batch(in), x.c, x.h, x.w, weights.h, weights.w, stride, g, col);
        gwmat.noalias() += gout * col.transpose();
        colg.noalias() = wmat.transpose() * gout;
        col2im_add(colg, x.c, x.h, x.w, weights.h, weights.w, stride, g, grads.x.batch(in));
        // scalar accumulation: Eigen's redux groups lanes by heap alignment, which
        // varies run to run and breaks bitwise reproducibility of training
        for (int oc = 0; oc < f; ++oc) {
            const S* gp = grad_out.batch(in) + size_t(oc) * g.out_h * g.out_w;
            S s = S(0);
            for (int i = 0; i < g.out_h * g.out_w; ++i) s += gp[i];
            grads.b.v[oc] += s;
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Batch normalization, per-channel parameters shaped (1, c, 1, 1).

template <class S>
struct BatchNormCache {
    Tensor4<S> xhat;
    std::vector<S> inv_std;
};

template <class S>
Tensor4<S> batchnorm_forward(const Tensor4<S>& x, const Tensor4<S>& scale, const Tensor4<S>& shift,
                             Tensor4<S>& running_mean, Tensor4<S>& running_var, Mode mode,
                             BatchNormCache<S>* cache = nullptr, double momentum = 0.9997,
                             double eps = 0.001) {
    if (int(scale.size()) != x.c || int(shift.size()) != x.c || int(running_mean.size()) != x.c ||
        int(running_var.size()) != x.c)
        fail("batchnorm parameter channels do not match input");
    Tensor4<S> out(x.n, x.c, x.h, x.w);
    size_t plane = size_t(x.h) * x.w;
    size_t m = size_t(x.n) * plane;
    if (cache) {
        cache->xhat = Tensor4<S>(x.n, x.c, x.h, x.w);
        cache->inv_std.assign(x.c, S(0));
    }
    for (int ic = 0; ic < x.c; ++ic) {
        double mean, var;
        if (mode == Mode::train) {
            double sum = 0, sq = 0;
            for (int in = 0; in < x.n; ++in) {
                const S* p = x.batch(in) + size_t(ic) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    sum += p[i];
                    sq += double(p[i]) * p[i];
                }
            }
            mean = sum / double(m);
            var = sq / double(m) - mean * mean;
            if (var < 0) var = 0;
            running_mean.v[ic] = S(momentum * running_mean.v[ic] + (1 - momentum) * mean);
            running_var.v[ic] = S(momentum * running_var.v[ic] + (1 - momentum) * var);
        } else {
            mean = running_mean.v[ic];
            var = running_var.v[ic];
        }
        S inv = S(1.0 / std::sqrt(var + eps));
        S sc = scale.v[ic], sh = shift.v[ic], mu = S(mean);
        if (cache) cache->inv_std[ic] = inv;
        for (int in = 0; in < x.n; ++in) {
            const S* p = x.batch(in) + size_t(ic) * plane;
            S* o = out.batch(in) + size_t(ic) * plane;
            S* xh = cache ? cache->xhat.batch(in) + size_t(ic) * plane : nullptr;
            for (size_t i = 0; i < plane; ++i) {
                S h = (p[i] - mu) * inv;
                if (xh) xh[i] = h;
                o[i] = sc * h + sh;
            }
        }
    }
    return out;
}

template <class S>
struct BatchNormGrads {
    Tensor4<S> x, scale, shift;
};

// Train-mode gradient through the batch statistics.
template <class S>
BatchNormGrads<S> batchnorm_backward(const Tensor4<S>& grad_out, const BatchNormCache<S>& cache,
                                     const Tensor4<S>& scale) {
    const Tensor4<S>& xhat = cache.xhat;
    if (!grad_out.same_shape(xhat)) fail("grad shape does not match batchnorm output");
    BatchNormGrads<S> grads{Tensor4<S>(xhat.n, xhat.c, xhat.h, xhat.w), Tensor4<S>(1, xhat.c, 1, 1),
                            Tensor4<S>(1, xhat.c, 1, 1)};
    size_t plane = size_t(xhat.h) * xhat.w;
    double m = double(xhat.n) * plane;
    for (int ic = 0; ic < xhat.c; ++ic) {
        double sum_g = 0, sum_gx = 0;
        for (int in = 0; in < xhat.n; ++in) {
            const S* g = grad_out.batch(in) + size_t(ic) * plane;
            const S* xh = xhat.batch(in) + size_t(ic) * plane;
            for (size_t i = 0; i < plane; ++i) {
                sum_g += g[i];
                sum_gx += double(g[i]) * xh[i];
            }
        }
        grads.shift.v[ic] = S(sum_g);
        grads.scale.v[ic] = S(sum_gx);
        S k = S(scale.v[ic] * cache.inv_std[ic] / m);
        for (int in = 0; in < xhat.n; ++in) {
            const S* g = grad_out.batch(in) + size_t(ic) * plane;
            const S* xh = xhat.batch(in) + size_t(ic) * plane;
            S* gx = grads.x.batch(in) + size_t(ic) * plane;
            for (size_t i = 0; i < plane; ++i)
                gx[i] = k * S(m * g[i] - sum_g - double(xh[i]) * sum_gx);
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Pointwise and structural layers.

template <class S>
Tensor4<S> relu_forward(const Tensor4<S>& x) {
    Tensor4<S> out = x;
    for (S& v : out.v)
        if (v < S(0)) v = S(0);
    return out;
}

template <class S>
Tensor4<S> relu_backward(const Tensor4<S>& x, const Tensor4<S>& grad_out) {
    if (!x.same_shape(grad_out)) fail("grad shape does not match relu input");
    Tensor4<S> grad = grad_out;
    for (size_t i = 0; i < x.size(); ++i)
        if (x.v[i] <= S(0)) grad.v[i] = S(0);
    return grad;
}

template <class S>
struct MaxPoolResult {
    Tensor4<S> out;
    std::vector<int64_t> argmax;  // flat input index per output element
};

template <class S>
MaxPoolResult<S> maxpool_forward(const Tensor4<S>& x, int kernel = 3, int stride = 2) {
    ConvGeometry g = conv_geometry(x.h, x.w, kernel, kernel, stride, PadMode::same);
    MaxPoolResult<S> r{Tensor4<S>(x.n, x.c, g.out_h, g.out_w), {}};
    r.argmax.resize(r.out.size());
    size_t o = 0;
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int oy = 0; oy < g.out_h; ++oy)
                for (int ox = 0; ox < g.out_w; ++ox) {
                    int iy0 = oy * stride - g.pad_top;
                    int ix0 = ox * stride - g.pad_left;
                    S best = -std::numeric_limits<S>::infinity();
                    int64_t bi = -1;
                    for (int ky = 0; ky < kernel; ++ky) {
                        int iy = iy0 + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int kx = 0; kx < kernel; ++kx) {
                            int ix = ix0 + kx;
                            if (ix < 0 || ix >= x.w) continue;
                            S v = x.at(in, ic, iy, ix);
                            if (v > best) {
                                best = v;
                                bi = ((int64_t(in) * x.c + ic) * x.h + iy) * x.w + ix;
                            }
                        }
                    }
                    r.out.v[o] = best;
                    r.argmax[o] = bi;
                    ++o;
                }
    return r;
}

template <class S>
Tensor4<S> maxpool_backward(const Tensor4<S>& x, const MaxPoolResult<S>& fwd,
                            const Tensor4<S>& grad_out) {
    if (!grad_out.same_shape(fwd.out)) fail("grad shape does not match pool output");
    Tensor4<S> grad(x.n, x.c, x.h, x.w);
    for (size_t o = 0; o < grad_out.size(); ++o) grad.v[size_t(fwd.argmax[o])] += grad_out.v[o];
    return grad;
}

// ---------------------------------------------------------------------------
// Transpose convolution, weights (in_c, out_c, kh, kw), bias (1, out_c, 1, 1).
// The full upsampled extent is (in-1)*stride + k; the result is center-cropped
// (or zero-padded) to the requested target size so decoder outputs can hit
// encoder skip sizes exactly.

template <class S>
Tensor4<S> transpose_conv_forward(const Tensor4<S>& x, const Tensor4<S>& weights,
                                  const Tensor4<S>& bias, int stride, int target_h, int target_w) {
    if (weights.n != x.c) fail("transpose conv weight channels do not match input");
    int oc = weights.c, kh = weights.h, kw = weights.w;
    if (int(bias.size()) != oc) fail("bias length does not match filter count");
    if (target_h < 1 || target_w < 1) fail("target size must be >= 1");
    int full_h = (x.h - 1) * stride + kh;
    int full_w = (x.w - 1) * stride + kw;
    ConvGeometry g{x.h, x.w, 0, 0};
    int k = oc * kh * kw;
    Eigen::Map<const RowMatX<S>> w2(weights.v.data(), x.c, k);
    Tensor4<S> out(x.n, oc, target_h, target_w);
    int off_y = (full_h - target_h) / 2;
    int off_x = (full_w - target_w) / 2;
    std::vector<S> full(size_t(oc) * full_h * full_w);
    MatX<S> col;
    for (int in = 0; in < x.n; ++in) {
        Eigen::Map<const RowMatX<S>> xmat(x.batch(in), x.c, size_t(x.h) * x.w);
        col.noalias() = w2.transpose() * xmat;
        std::fill(full.begin(), full.end(), S(0));
        col2im_add(col, oc, full_h, full_w, kh, kw, stride, g, full.data());
        for (int c = 0; c < oc; ++c) {
            const S* fp = full.data() + size_t(c) * full_h * full_w;
            S b = bias.v[c];
            for (int ty = 0; ty < target_h; ++ty) {
                int fy = ty + off_y;
                for (int tx = 0; tx < target_w; ++tx) {
                    int fx = tx + off_x;
                    S v = (fy >= 0 && fy < full_h && fx >= 0 && fx < full_w)
                              ? fp[size_t(fy) * full_w + fx]
                              : S(0);
                    out.at(in, c, ty, tx) = v + b;
                }
            }
        }
    }
    return out;
}

template <class S>
ConvGrads<S> transpose_conv_backward(const Tensor4<S>& x, const Tensor4<S>& weights,
                                     const Tensor4<S>& grad_out, int stride) {
    int oc = weights.c, kh = weights.h, kw = weights.w;
    if (weights.n != x.c) fail("transpose conv weight channels do not match input");
    if (grad_out.n != x.n || grad_out.c != oc) fail("grad shape does not match output");
    int full_h = (x.h - 1) * stride + kh;
    int full_w = (x.w - 1) * stride + kw;
    int target_h = grad_out.h, target_w = grad_out.w;
    int off_y = (full_h - target_h) / 2;
    int off_x = (full_w - target_w) / 2;
    ConvGeometry g{x.h, x.w, 0, 0};
    int k = oc * kh * kw;
    ConvGrads<S> grads{Tensor4<S>(x.n, x.c, x.h, x.w),
                       Tensor4<S>(weights.n, weights.c, weights.h, weights.w),
                       Tensor4<S>(1, oc, 1, 1)};
    Eigen::Map<const RowMatX<S>> w2(weights.v.data(), x.c, k);
    Eigen::Map<RowMatX<S>> gw2(grads.w.v.data(), x.c, k);
    std::vector<S> gfull(size_t(oc) * full_h * full_w);
    MatX<S> col;
    for (int in = 0; in < x.n; ++in) {
        std::fill(gfull.begin(), gfull.end(), S(0));
        for (int c = 0; c < oc; ++c) {
            S* fp = gfull.data() + size_t(c) * full_h * full_w;
            for (int ty = 0; ty < target_h; ++ty)
                for (int tx = 0; tx < target_w; ++tx) {
                    S gv = grad_out.at(in, c, ty, tx);
                    grads.b.v[c] += gv;
                    int fy = ty + off_y, fx = tx + off_x;
                    if (fy >= 0 && fy < full_h && fx >= 0 && fx < full_w)
                        fp[size_t(fy) * full_w + fx] = gv;
                }
        }
        im2col(gfull.data(), oc, full_h, full_w, kh, kw, stride, g, col);
        Eigen::Map<const RowMatX<S>> xmat(x.batch(in), x.c, size_t(x.h) * x.w);
        Eigen::Map<RowMatX<S>> gxmat(grads.x.batch(in), x.c, size_t(x.h) * x.w);
        gxmat.noalias() = w2 * col;
        gw2.noalias() += xmat * col.transpose();
    }
    return grads;
}

// ---------------------------------------------------------------------------

template <class S>
Tensor4<S> concat_channels(const Tensor4<S>& a, const Tensor4<S>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) fail("concat spatial dims disagree");
    Tensor4<S> out(a.n, a.c + b.c, a.h, a.w);
    size_t pa = size_t(a.c) * a.h * a.w, pb = size_t(b.c) * b.h * b.w;
    for (int in = 0; in < a.n; ++in) {
        std::copy(a.batch(in), a.batch(in) + pa, out.batch(in));
        std::copy(b.batch(in), b.batch(in) + pb, out.batch(in) + pa);
    }
    return out;
}

template <class S>
std::pair<Tensor4<S>, Tensor4<S>> split_channels(const Tensor4<S>& x, int first_c) {
    if (first_c < 1 || first_c >= x.c) fail("split channel count out of range");
    Tensor4<S> a(x.n, first_c, x.h, x.w), b(x.n, x.c - first_c, x.h, x.w);
    size_t pa = size_t(first_c) * x.h * x.w, pb = size_t(x.c - first_c) * x.h * x.w;
    for (int in = 0; in < x.n; ++in) {
        std::copy(x.batch(in), x.batch(in) + pa, a.batch(in));
        std::copy(x.batch(in) + pa, x.batch(in) + pa + pb, b.batch(in));
    }
    return {std::move(a), std::move(b)};
}

template <class S>
Tensor4<S> add(const Tensor4<S>& a, const Tensor4<S>& b) {
    if (!a.same_shape(b)) fail("add shapes disagree");
    Tensor4<S> out = a;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += b.v[i];
    return out;
}

template <class S>
Tensor4<S> subtract(const Tensor4<S>& a, const Tensor4<S>& b) {
    if (!a.same_shape(b)) fail("subtract shapes disagree");
    Tensor4<S> out = a;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] -= b.v[i];
    return out;
}

template <class S>
struct LossResult {
    double loss = 0;
    Tensor4<S> grad;
};

// Mean over every element; grad = 2*(pred - target)/count.
template <class S>
LossResult<S> mse_loss(const Tensor4<S>& pred, const Tensor4<S>& target) {
    if (!pred.same_shape(target)) fail("loss shapes disagree");
    LossResult<S> r;
    r.grad = Tensor4<S>(pred.n, pred.c, pred.h, pred.w);
    double nf = double(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = double(pred.v[i]) - double(target.v[i]);
        r.loss += d * d;
        r.grad.v[i] = S(2.0 * d / nf);
    }
    r.loss /= nf;
    return r;
}

// ---------------------------------------------------------------------------
// Adam with bias correction.

template <class S>
struct AdamState {
    double lr = 0.001, beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
    long step = 0;
    std::vector<S> m, v;
};

template <class S>
void adam_step(Tensor4<S>& param, const Tensor4<S>& grad, AdamState<S>& state) {
    if (!param.same_shape(grad)) fail("gradient shape does not match parameter");
    if (state.m.empty()) {
        state.m.assign(param.size(), S(0));
        state.v.assign(param.size(), S(0));
    }
    if (state.m.size() != param.size()) fail("optimizer state does not match parameter");
    ++state.step;
    double c1 = 1.0 - std::pow(state.beta1, double(state.step));
    double c2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (size_t i = 0; i < param.size(); ++i) {
        double g = grad.v[i];
        double m = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        double v = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        state.m[i] = S(m);
        state.v[i] = S(v);
        param.v[i] -= S(state.lr * (m / c1) / (std::sqrt(v / c2) + state.eps));
    }
}

// Zero-mean normal with variance 2/fan_in, fan_in = c*h*w of the weight shape.
template <class S>
void he_init(Tensor4<S>& weights, Rng& rng) {
    double sd = std::sqrt(2.0 / (double(weights.c) * weights.h * weights.w));
    for (S& v : weights.v) v = S(rng.normal(0.0, sd));
}

}  // namespace ifc
