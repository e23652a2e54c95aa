#pragma once

// Differentiable neural-net primitives on top of the tensor engine:
// softmax, layer norm, blocked multi-head attention, im2col convolution
// support, patch extraction and cosine similarities.

#include <cmath>
#include <vector>

#include "fatformer/tensor.hpp"

namespace ftf {

// ---------------------------------------------------------------------------
// softmax along an arbitrary axis with temperature, max-subtracted.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> softmax(const TensorT<T>& x, int axis, T temperature) {
    if (temperature <= T(0))
        throw ParamError("softmax: temperature must be positive, got " +
                         std::to_string(static_cast<double>(temperature)));
    if (axis < 0) axis += x.rank();
    if (axis < 0 || axis >= x.rank())
        throw ShapeError("softmax: axis out of range for " + shape_str(x.shape));

    const int len = x.dim(axis);
    int outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);

    TensorT<T> out = TensorT<T>::zeros(x.shape);
    const T* xv = x.ptr();
    T* yv = out.ptr();
    const T inv_t = T(1) / temperature;
    for (int o = 0; o < outer; ++o) {
        for (int in = 0; in < inner; ++in) {
            const long base = static_cast<long>(o) * len * inner + in;
            T mx = xv[base];
            for (int l = 1; l < len; ++l) mx = std::max(mx, xv[base + static_cast<long>(l) * inner]);
            T z = 0;
            for (int l = 0; l < len; ++l) {
                const T e = std::exp((xv[base + static_cast<long>(l) * inner] - mx) * inv_t);
                yv[base + static_cast<long>(l) * inner] = e;
                z += e;
            }
            const T iz = T(1) / z;
            for (int l = 0; l < len; ++l) yv[base + static_cast<long>(l) * inner] *= iz;
        }
    }

    if (detail::track_any<T>({x})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x},
                          [x, od = out.data, og = out.grad, outer, inner, len, inv_t]() {
            T* dx = x.grad->data();
            const T* y = od->data();
            const T* g = og->data();
            for (int o = 0; o < outer; ++o) {
                for (int in = 0; in < inner; ++in) {
                    const long base = static_cast<long>(o) * len * inner + in;
                    T dotv = 0;
                    for (int l = 0; l < len; ++l) {
                        const long idx = base + static_cast<long>(l) * inner;
                        dotv += g[idx] * y[idx];
                    }
                    for (int l = 0; l < len; ++l) {
                        const long idx = base + static_cast<long>(l) * inner;
                        dx[idx] += inv_t * y[idx] * (g[idx] - dotv);
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// layer norm over the last dimension, then affine.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gain, const TensorT<T>& bias,
                      T eps = T(1e-5)) {
    const int d = x.dim(x.rank() - 1);
    if (gain.numel() != d || bias.numel() != d)
        throw ShapeError("layer_norm: feature dim " + std::to_string(d) + " vs gain " +
                         shape_str(gain.shape) + " / bias " + shape_str(bias.shape));
    const int rows = x.numel() / d;

    TensorT<T> out = TensorT<T>::zeros(x.shape);
    // normalized activations and reciprocal stddevs are kept for backward
    auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(x.numel()));
    auto rstd = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));

    const T* xv = x.ptr();
    T* yv = out.ptr();
    const T* gv = gain.ptr();
    const T* bv = bias.ptr();
    for (int r = 0; r < rows; ++r) {
        const T* xr = xv + static_cast<long>(r) * d;
        T mu = 0;
        for (int i = 0; i < d; ++i) mu += xr[i];
        mu /= static_cast<T>(d);
        T var = 0;
        for (int i = 0; i < d; ++i) {
            const T c = xr[i] - mu;
            var += c * c;
        }
        var /= static_cast<T>(d);
        const T rs = T(1) / std::sqrt(var + eps);
        (*rstd)[static_cast<size_t>(r)] = rs;
        T* xh = xhat->data() + static_cast<long>(r) * d;
        T* yr = yv + static_cast<long>(r) * d;
        for (int i = 0; i < d; ++i) {
            xh[i] = (xr[i] - mu) * rs;
            yr[i] = xh[i] * gv[i] + bv[i];
        }
    }

    if (detail::track_any<T>({x, gain, bias})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x, gain, bias}, [x, gain, bias, xhat, rstd, rows, d,
                                                 og = out.grad]() {
            const T* g = og->data();
            const T* gv2 = gain.ptr();
            for (int r = 0; r < rows; ++r) {
                const T* gr = g + static_cast<long>(r) * d;
                const T* xh = xhat->data() + static_cast<long>(r) * d;
                if (gain.requires_grad) {
                    T* dg = gain.grad->data();
                    for (int i = 0; i < d; ++i) dg[i] += gr[i] * xh[i];
                }
                if (bias.requires_grad) {
                    T* db = bias.grad->data();
                    for (int i = 0; i < d; ++i) db[i] += gr[i];
                }
                if (x.requires_grad) {
                    const T rs = (*rstd)[static_cast<size_t>(r)];
                    T sum_dxh = 0, sum_dxh_xh = 0;
                    for (int i = 0; i < d; ++i) {
                        const T dxh = gr[i] * gv2[i];
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * xh[i];
                    }
                    const T inv_d = T(1) / static_cast<T>(d);
                    T* dx = x.grad->data() + static_cast<long>(r) * d;
                    for (int i = 0; i < d; ++i) {
                        const T dxh = gr[i] * gv2[i];
                        dx[i] += rs * (dxh - inv_d * sum_dxh - xh[i] * inv_d * sum_dxh_xh);
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Blocked scaled dot-product attention core.
//
// q, k, v are [L x D] with L a multiple of block_len. Attention runs
// independently within each block of rows, per head, with scale
// 1/sqrt(D/heads). This one primitive covers full-sequence self-attention
// (block_len == L), per-position attention over the four wavelet bands
// (block_len == 4) and per-band spatial attention.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> sdpa_blocks(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v, int heads,
                       int block_len, std::vector<std::vector<T>>* weights_out = nullptr) {
    if (q.rank() != 2 || !q.same_shape(k) || !q.same_shape(v))
        throw ShapeError("sdpa: q/k/v must share [LxD], got " + shape_str(q.shape) + ", " +
                         shape_str(k.shape) + ", " + shape_str(v.shape));
    const int L = q.dim(0), D = q.dim(1);
    if (heads <= 0 || D % heads != 0)
        throw ConfigError("sdpa: embed dim " + std::to_string(D) + " not divisible by " +
                          std::to_string(heads) + " heads");
    if (block_len <= 0 || L % block_len != 0)
        throw ShapeError("sdpa: sequence " + std::to_string(L) + " not a multiple of block " +
                         std::to_string(block_len));
    const int dh = D / heads;
    const int nblocks = L / block_len;
    const T alpha = T(1) / std::sqrt(static_cast<T>(dh));

    TensorT<T> out = TensorT<T>::zeros({L, D});
    // softmax weights per (block, head): block_len x block_len each
    auto weights = std::make_shared<std::vector<std::vector<T>>>();
    weights->resize(static_cast<size_t>(nblocks) * heads);

    const auto& K = kernels::active<T>();
    std::vector<T> qh(static_cast<size_t>(block_len) * dh);
    std::vector<T> kh(static_cast<size_t>(block_len) * dh);
    std::vector<T> vh(static_cast<size_t>(block_len) * dh);
    std::vector<T> oh(static_cast<size_t>(block_len) * dh);

    auto gather_head = [dh, D](std::vector<T>& dst, const T* src, int row0, int rows, int h) {
        for (int r = 0; r < rows; ++r) {
            const T* s = src + static_cast<long>(row0 + r) * D + h * dh;
            std::copy(s, s + dh, dst.data() + static_cast<long>(r) * dh);
        }
    };

    for (int b = 0; b < nblocks; ++b) {
        const int row0 = b * block_len;
        for (int h = 0; h < heads; ++h) {
            gather_head(qh, q.ptr(), row0, block_len, h);
            gather_head(kh, k.ptr(), row0, block_len, h);
            gather_head(vh, v.ptr(), row0, block_len, h);

            std::vector<T>& w = (*weights)[static_cast<size_t>(b) * heads + h];
            w.assign(static_cast<size_t>(block_len) * block_len, T(0));
            K.matmul_nt(w.data(), qh.data(), kh.data(), block_len, dh, block_len);
            // row softmax of alpha-scaled scores
            for (int r = 0; r < block_len; ++r) {
                T* wr = w.data() + static_cast<long>(r) * block_len;
                T mx = wr[0] * alpha;
                for (int c = 1; c < block_len; ++c) mx = std::max(mx, wr[c] * alpha);
                T z = 0;
                for (int c = 0; c < block_len; ++c) {
                    wr[c] = std::exp(wr[c] * alpha - mx);
                    z += wr[c];
                }
                const T iz = T(1) / z;
                for (int c = 0; c < block_len; ++c) wr[c] *= iz;
            }
            std::fill(oh.begin(), oh.end(), T(0));
            K.matmul_nn(oh.data(), w.data(), vh.data(), block_len, block_len, dh);
            for (int r = 0; r < block_len; ++r)
                std::copy(oh.data() + static_cast<long>(r) * dh,
                          oh.data() + static_cast<long>(r + 1) * dh,
                          out.ptr() + static_cast<long>(row0 + r) * D + h * dh);
        }
    }
    if (weights_out) *weights_out = *weights;

    if (detail::track_any<T>({q, k, v})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {q, k, v}, [q, k, v, weights, heads, dh, D, block_len, nblocks,
                                           alpha, og = out.grad]() {
            const auto& K2 = kernels::active<T>();
            std::vector<T> qh2(static_cast<size_t>(block_len) * dh);
            std::vector<T> kh2(static_cast<size_t>(block_len) * dh);
            std::vector<T> vh2(static_cast<size_t>(block_len) * dh);
            std::vector<T> goh(static_cast<size_t>(block_len) * dh);
            std::vector<T> dW(static_cast<size_t>(block_len) * block_len);
            std::vector<T> dS(static_cast<size_t>(block_len) * block_len);
            std::vector<T> dtmp(static_cast<size_t>(block_len) * dh);

            auto gather = [dh, D](std::vector<T>& dst, const T* src, int row0, int rows, int h) {
                for (int r = 0; r < rows; ++r) {
                    const T* s = src + static_cast<long>(row0 + r) * D + h * dh;
                    std::copy(s, s + dh, dst.data() + static_cast<long>(r) * dh);
                }
            };
            auto scatter_add = [dh, D](T* dst, const std::vector<T>& src, int row0, int rows,
                                       int h) {
                for (int r = 0; r < rows; ++r) {
                    T* d = dst + static_cast<long>(row0 + r) * D + h * dh;
                    const T* s = src.data() + static_cast<long>(r) * dh;
                    for (int i = 0; i < dh; ++i) d[i] += s[i];
                }
            };

            for (int b = 0; b < nblocks; ++b) {
                const int row0 = b * block_len;
                for (int h = 0; h < heads; ++h) {
                    const std::vector<T>& w = (*weights)[static_cast<size_t>(b) * heads + h];
                    gather(qh2, q.ptr(), row0, block_len, h);
                    gather(kh2, k.ptr(), row0, block_len, h);
                    gather(vh2, v.ptr(), row0, block_len, h);
                    gather(goh, og->data(), row0, block_len, h);

                    if (v.requires_grad) {
                        // dV = W^T * dO
                        std::fill(dtmp.begin(), dtmp.end(), T(0));
                        K2.matmul_tn(dtmp.data(), w.data(), goh.data(), block_len, block_len, dh);
                        scatter_add(v.grad->data(), dtmp, row0, block_len, h);
                    }
                    // dW = dO * V^T
                    std::fill(dW.begin(), dW.end(), T(0));
                    K2.matmul_nt(dW.data(), goh.data(), vh2.data(), block_len, dh, block_len);
                    // softmax backward per row: dS = W .* (dW - rowdot(dW, W))
                    for (int r = 0; r < block_len; ++r) {
                        const T* wr = w.data() + static_cast<long>(r) * block_len;
                        const T* dwr = dW.data() + static_cast<long>(r) * block_len;
                        T* dsr = dS.data() + static_cast<long>(r) * block_len;
                        T dotv = 0;
                        for (int c = 0; c < block_len; ++c) dotv += dwr[c] * wr[c];
                        for (int c = 0; c < block_len; ++c)
                            dsr[c] = wr[c] * (dwr[c] - dotv) * alpha;
                    }
                    if (q.requires_grad) {
                        // dQ = dS * K
                        std::fill(dtmp.begin(), dtmp.end(), T(0));
                        K2.matmul_nn(dtmp.data(), dS.data(), kh2.data(), block_len, block_len, dh);
                        scatter_add(q.grad->data(), dtmp, row0, block_len, h);
                    }
                    if (k.requires_grad) {
                        // dK = dS^T * Q
                        std::fill(dtmp.begin(), dtmp.end(), T(0));
                        K2.matmul_tn(dtmp.data(), dS.data(), qh2.data(), block_len, block_len, dh);
                        scatter_add(k.grad->data(), dtmp, row0, block_len, h);
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// im2col with same-padding for odd square kernels over an [h x w x C] grid.
// Output row (y*w + x) holds the kernel window flattened as (ky, kx, c).
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> im2col(const TensorT<T>& x, int ksize) {
    if (x.rank() != 3) throw ShapeError("im2col: expected [h x w x C], got " + shape_str(x.shape));
    if (ksize < 1 || ksize % 2 == 0)
        throw ParamError("im2col: kernel size must be odd and positive, got " +
                         std::to_string(ksize));
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int pad = ksize / 2;
    const int patch = ksize * ksize * c;
    TensorT<T> out = TensorT<T>::zeros({h * w, patch});
    const T* xv = x.ptr();
    T* yv = out.ptr();
    for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
            T* row = yv + (static_cast<long>(y) * w + xx) * patch;
            int o = 0;
            for (int ky = 0; ky < ksize; ++ky) {
                const int sy = y + ky - pad;
                for (int kx = 0; kx < ksize; ++kx) {
                    const int sx = xx + kx - pad;
                    if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                        const T* src = xv + (static_cast<long>(sy) * w + sx) * c;
                        std::copy(src, src + c, row + o);
                    }
                    o += c;
                }
            }
        }
    }
    if (detail::track_any<T>({x})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x}, [x, h, w, c, ksize, pad, patch, og = out.grad]() {
            T* dx = x.grad->data();
            const T* g = og->data();
            for (int y = 0; y < h; ++y) {
                for (int xx = 0; xx < w; ++xx) {
                    const T* row = g + (static_cast<long>(y) * w + xx) * patch;
                    int o = 0;
                    for (int ky = 0; ky < ksize; ++ky) {
                        const int sy = y + ky - pad;
                        for (int kx = 0; kx < ksize; ++kx) {
                            const int sx = xx + kx - pad;
                            if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                                T* dst = dx + (static_cast<long>(sy) * w + sx) * c;
                                for (int i = 0; i < c; ++i) dst[i] += row[o + i];
                            }
                            o += c;
                        }
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Non-overlapping patch extraction: [C x H x W] -> [N x C*P*P] with
// N = (H/P)*(W/P), rows ordered row-major over the patch grid.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> patchify(const TensorT<T>& x, int p) {
    if (x.rank() != 3) throw ShapeError("patchify: expected [C x H x W], got " + shape_str(x.shape));
    const int c = x.dim(0), hh = x.dim(1), ww = x.dim(2);
    if (hh % p != 0 || ww % p != 0)
        throw ShapeError("patchify: image " + shape_str(x.shape) + " not divisible by patch " +
                         std::to_string(p));
    const int gh = hh / p, gw = ww / p;
    const int n = gh * gw, psz = c * p * p;
    TensorT<T> out = TensorT<T>::zeros({n, psz});
    const T* xv = x.ptr();
    T* yv = out.ptr();
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            T* row = yv + (static_cast<long>(gy) * gw + gx) * psz;
            int o = 0;
            for (int ch = 0; ch < c; ++ch)
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px)
                        row[o++] = xv[(static_cast<long>(ch) * hh + gy * p + py) * ww + gx * p + px];
        }
    if (detail::track_any<T>({x})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x}, [x, c, hh, ww, p, gh, gw, psz, og = out.grad]() {
            T* dx = x.grad->data();
            const T* g = og->data();
            for (int gy = 0; gy < gh; ++gy)
                for (int gx = 0; gx < gw; ++gx) {
                    const T* row = g + (static_cast<long>(gy) * gw + gx) * psz;
                    int o = 0;
                    for (int ch = 0; ch < c; ++ch)
                        for (int py = 0; py < p; ++py)
                            for (int px = 0; px < p; ++px)
                                dx[(static_cast<long>(ch) * hh + gy * p + py) * ww + gx * p + px] +=
                                    row[o++];
                }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cosine similarities
// ---------------------------------------------------------------------------

namespace detail {
constexpr double kNormFloor = 1e-12;
}

// cos(u, v) as a scalar tensor; rejects near-zero vectors.
template <typename T>
TensorT<T> cosine_similarity(const TensorT<T>& u, const TensorT<T>& v) {
    if (u.numel() != v.numel())
        throw ShapeError("cosine_similarity: " + shape_str(u.shape) + " vs " + shape_str(v.shape));
    const auto& K = kernels::active<T>();
    const int n = u.numel();
    const T nu = std::sqrt(K.dot(u.ptr(), u.ptr(), n));
    const T nv = std::sqrt(K.dot(v.ptr(), v.ptr(), n));
    if (nu <= T(detail::kNormFloor) || nv <= T(detail::kNormFloor))
        throw DegenerateVectorError("cosine_similarity: vector norm below 1e-12");
    const T d = K.dot(u.ptr(), v.ptr(), n);
    const T cosv = d / (nu * nv);
    TensorT<T> out = TensorT<T>::scalar(cosv);
    if (detail::track_any<T>({u, v})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {u, v}, [u, v, nu, nv, cosv, n, og = out.grad]() {
            const T g = (*og)[0];
            if (u.requires_grad) {
                T* du = u.grad->data();
                const T* uv = u.ptr();
                const T* vv = v.ptr();
                const T a = g / (nu * nv), b = g * cosv / (nu * nu);
                for (int i = 0; i < n; ++i) du[i] += a * vv[i] - b * uv[i];
            }
            if (v.requires_grad) {
                T* dv = v.grad->data();
                const T* uv = u.ptr();
                const T* vv = v.ptr();
                const T a = g / (nu * nv), b = g * cosv / (nv * nv);
                for (int i = 0; i < n; ++i) dv[i] += a * uv[i] - b * vv[i];
            }
        });
    }
    return out;
}

// All pairwise cosines between rows of a [N x D] and rows of b [M x D].
template <typename T>
TensorT<T> row_cosines(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("row_cosines: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const int n = a.dim(0), m = b.dim(0), d = a.dim(1);
    const auto& K = kernels::active<T>();
    std::vector<T> na(static_cast<size_t>(n)), nb(static_cast<size_t>(m));
    for (int i = 0; i < n; ++i) {
        na[static_cast<size_t>(i)] =
            std::sqrt(K.dot(a.ptr() + static_cast<long>(i) * d, a.ptr() + static_cast<long>(i) * d, d));
        if (na[static_cast<size_t>(i)] <= T(detail::kNormFloor))
            throw DegenerateVectorError("row_cosines: row " + std::to_string(i) +
                                        " of first input has norm below 1e-12");
    }
    for (int j = 0; j < m; ++j) {
        nb[static_cast<size_t>(j)] =
            std::sqrt(K.dot(b.ptr() + static_cast<long>(j) * d, b.ptr() + static_cast<long>(j) * d, d));
        if (nb[static_cast<size_t>(j)] <= T(detail::kNormFloor))
            throw DegenerateVectorError("row_cosines: row " + std::to_string(j) +
                                        " of second input has norm below 1e-12");
    }
    TensorT<T> out = TensorT<T>::zeros({n, m});
    T* yv = out.ptr();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            yv[static_cast<long>(i) * m + j] =
                K.dot(a.ptr() + static_cast<long>(i) * d, b.ptr() + static_cast<long>(j) * d, d) /
                (na[static_cast<size_t>(i)] * nb[static_cast<size_t>(j)]);

    if (detail::track_any<T>({a, b})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a, b}, [a, b, na, nb, n, m, d, od = out.data, og = out.grad]() {
            const T* g = og->data();
            const T* cosm = od->data();
            for (int i = 0; i < n; ++i) {
                const T* ai = a.ptr() + static_cast<long>(i) * d;
                for (int j = 0; j < m; ++j) {
                    const T gij = g[static_cast<long>(i) * m + j];
                    if (gij == T(0)) continue;
                    const T* bj = b.ptr() + static_cast<long>(j) * d;
                    const T cij = cosm[static_cast<long>(i) * m + j];
                    const T ni = na[static_cast<size_t>(i)], nj = nb[static_cast<size_t>(j)];
                    if (a.requires_grad) {
                        T* da = a.grad->data() + static_cast<long>(i) * d;
                        const T s = gij / (ni * nj), t = gij * cij / (ni * ni);
                        for (int x = 0; x < d; ++x) da[x] += s * bj[x] - t * ai[x];
                    }
                    if (b.requires_grad) {
                        T* db = b.grad->data() + static_cast<long>(j) * d;
                        const T s = gij / (ni * nj), t = gij * cij / (nj * nj);
                        for (int x = 0; x < d; ++x) db[x] += s * ai[x] - t * bj[x];
                    }
                }
            }
        });
    }
    return out;
}

// Column means of [N x M] -> [M].
template <typename T>
TensorT<T> mean_rows(const TensorT<T>& x) {
    if (x.rank() != 2) throw ShapeError("mean_rows: expected matrix, got " + shape_str(x.shape));
    const int n = x.dim(0), m = x.dim(1);
    TensorT<T> out = TensorT<T>::zeros({m});
    const T* xv = x.ptr();
    T* yv = out.ptr();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) yv[j] += xv[static_cast<long>(i) * m + j];
    const T inv = T(1) / static_cast<T>(n);
    for (int j = 0; j < m; ++j) yv[j] *= inv;
    if (detail::track_any<T>({x})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x}, [x, n, m, inv, og = out.grad]() {
            T* dx = x.grad->data();
            const T* g = og->data();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) dx[static_cast<long>(i) * m + j] += g[j] * inv;
        });
    }
    return out;
}

// Fan-based init scale for projection weights; embeddings keep their own
// smaller scale. Training from scratch needs activations that actually
// propagate through depth.
template <typename T>
T fan_stddev(int fan_in, int fan_out) {
    return static_cast<T>(std::sqrt(2.0 / (fan_in + fan_out)));
}

// ---------------------------------------------------------------------------
// Multi-head attention with learned q/k/v/output projections.
// ---------------------------------------------------------------------------
template <typename T>
struct MultiHeadAttentionT {
    TensorT<T> wq, bq, wk, bk, wv, bv, wo, bo;
    int heads = 1;

    void init(Rng& rng, int dim, int n_heads) {
        if (n_heads <= 0 || dim % n_heads != 0)
            throw ConfigError("attention: dim " + std::to_string(dim) + " not divisible by " +
                              std::to_string(n_heads) + " heads");
        heads = n_heads;
        const T stddev = fan_stddev<T>(dim, dim);
        wq = TensorT<T>::randn(rng, {dim, dim}, T(0), stddev, true);
        wk = TensorT<T>::randn(rng, {dim, dim}, T(0), stddev, true);
        wv = TensorT<T>::randn(rng, {dim, dim}, T(0), stddev, true);
        wo = TensorT<T>::randn(rng, {dim, dim}, T(0), stddev, true);
        bq = TensorT<T>::zeros({dim}, true);
        bk = TensorT<T>::zeros({dim}, true);
        bv = TensorT<T>::zeros({dim}, true);
        bo = TensorT<T>::zeros({dim}, true);
    }

    // block_len == 0 means attention over the whole sequence.
    TensorT<T> forward(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                       int block_len = 0, std::vector<std::vector<T>>* weights_out = nullptr) const {
        const int bl = block_len == 0 ? q.dim(0) : block_len;
        TensorT<T> qp = linear(q, wq, bq);
        TensorT<T> kp = linear(k, wk, bk);
        TensorT<T> vp = linear(v, wv, bv);
        TensorT<T> core = sdpa_blocks(qp, kp, vp, heads, bl, weights_out);
        return linear(core, wo, bo);
    }

    TensorT<T> self_attention(const TensorT<T>& x, int block_len = 0) const {
        return forward(x, x, x, block_len);
    }
};

}  // namespace ftf
