#pragma once

// Single-level 2-D orthonormal Haar transform over [h x w x D] grids,
// applied channelwise on non-overlapping 2x2 blocks so the sub-band
// coefficients keep the spatial layout of the grid. For a block
// [[a, b], [c, d]] the bands are
//
//   LL = (a + b + c + d) / 2      LH = (a - b + c - d) / 2
//   HL = (a + b - c - d) / 2      HH = (a - b - c + d) / 2
//
// (first letter: filter along rows, second: along columns). The analysis
// matrix is orthonormal, so synthesis is its transpose, reconstruction is
// exact on even grids and energy is conserved. Both directions are
// differentiable; the adjoint of analysis is synthesis and vice versa.
//
// Pure functions; safe to call concurrently on distinct tensors.

#include <array>

#include "fatformer/tensor.hpp"

namespace ftf {

enum class Band { LL = 0, LH = 1, HL = 2, HH = 3 };

template <typename T>
struct FrequencyBandsT {
    TensorT<T> ll, lh, hl, hh;
    int source_height = 0;
    int source_width = 0;

    const TensorT<T>& band(Band b) const {
        switch (b) {
            case Band::LL: return ll;
            case Band::LH: return lh;
            case Band::HL: return hl;
            default: return hh;
        }
    }
};

using FrequencyBands = FrequencyBandsT<float>;

namespace detail {

// +/- signs of the four block positions (a, b, c, d) per band.
inline const std::array<std::array<int, 4>, 4>& haar_signs() {
    static const std::array<std::array<int, 4>, 4> s = {{
        {{1, 1, 1, 1}},    // LL
        {{1, -1, 1, -1}},  // LH
        {{1, 1, -1, -1}},  // HL
        {{1, -1, -1, 1}},  // HH
    }};
    return s;
}

}  // namespace detail

template <typename T>
TensorT<T> dwt_band(const TensorT<T>& x, Band which) {
    if (x.rank() != 3)
        throw ShapeError("dwt2d: expected [h x w x D], got " + shape_str(x.shape));
    const int h = x.dim(0), w = x.dim(1), d = x.dim(2);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("dwt2d: grid " + shape_str(x.shape) + " has odd spatial dimension");
    const int hh = h / 2, hw = w / 2;
    const auto& sg = detail::haar_signs()[static_cast<size_t>(which)];
    const T s0 = T(sg[0]) / T(2), s1 = T(sg[1]) / T(2), s2 = T(sg[2]) / T(2), s3 = T(sg[3]) / T(2);

    TensorT<T> out = TensorT<T>::zeros({hh, hw, d});
    const T* xv = x.ptr();
    T* yv = out.ptr();
    for (int i = 0; i < hh; ++i) {
        for (int j = 0; j < hw; ++j) {
            const T* a = xv + ((static_cast<long>(2 * i) * w) + 2 * j) * d;
            const T* b = a + d;
            const T* c = xv + ((static_cast<long>(2 * i + 1) * w) + 2 * j) * d;
            const T* e = c + d;
            T* o = yv + (static_cast<long>(i) * hw + j) * d;
            for (int ch = 0; ch < d; ++ch)
                o[ch] = s0 * a[ch] + s1 * b[ch] + s2 * c[ch] + s3 * e[ch];
        }
    }
    if (detail::track_any<T>({x})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x}, [x, hh, hw, w, d, s0, s1, s2, s3, og = out.grad]() {
            T* dx = x.grad->data();
            const T* g = og->data();
            for (int i = 0; i < hh; ++i) {
                for (int j = 0; j < hw; ++j) {
                    const T* go = g + (static_cast<long>(i) * hw + j) * d;
                    T* a = dx + ((static_cast<long>(2 * i) * w) + 2 * j) * d;
                    T* b = a + d;
                    T* c = dx + ((static_cast<long>(2 * i + 1) * w) + 2 * j) * d;
                    T* e = c + d;
                    for (int ch = 0; ch < d; ++ch) {
                        a[ch] += s0 * go[ch];
                        b[ch] += s1 * go[ch];
                        c[ch] += s2 * go[ch];
                        e[ch] += s3 * go[ch];
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
FrequencyBandsT<T> dwt2d(const TensorT<T>& x) {
    FrequencyBandsT<T> bands;
    bands.ll = dwt_band(x, Band::LL);
    bands.lh = dwt_band(x, Band::LH);
    bands.hl = dwt_band(x, Band::HL);
    bands.hh = dwt_band(x, Band::HH);
    bands.source_height = x.dim(0);
    bands.source_width = x.dim(1);
    return bands;
}

template <typename T>
TensorT<T> idwt2d(const FrequencyBandsT<T>& bands) {
    const TensorT<T>& ll = bands.ll;
    if (ll.rank() != 3)
        throw ShapeError("idwt2d: expected [h x w x D] bands, got " + shape_str(ll.shape));
    if (!ll.same_shape(bands.lh) || !ll.same_shape(bands.hl) || !ll.same_shape(bands.hh))
        throw ShapeError("idwt2d: inconsistent band shapes " + shape_str(ll.shape) + ", " +
                         shape_str(bands.lh.shape) + ", " + shape_str(bands.hl.shape) + ", " +
                         shape_str(bands.hh.shape));
    const int hh = ll.dim(0), hw = ll.dim(1), d = ll.dim(2);
    const int h = hh * 2, w = hw * 2;

    TensorT<T> out = TensorT<T>::zeros({h, w, d});
    const auto& sgs = detail::haar_signs();
    T* yv = out.ptr();
    const std::array<const T*, 4> bv = {bands.ll.ptr(), bands.lh.ptr(), bands.hl.ptr(),
                                        bands.hh.ptr()};
    for (int i = 0; i < hh; ++i) {
        for (int j = 0; j < hw; ++j) {
            T* a = yv + ((static_cast<long>(2 * i) * w) + 2 * j) * d;
            T* b = a + d;
            T* c = yv + ((static_cast<long>(2 * i + 1) * w) + 2 * j) * d;
            T* e = c + d;
            for (int k = 0; k < 4; ++k) {
                const T* src = bv[static_cast<size_t>(k)] + (static_cast<long>(i) * hw + j) * d;
                const auto& sg = sgs[static_cast<size_t>(k)];
                const T s0 = T(sg[0]) / T(2), s1 = T(sg[1]) / T(2);
                const T s2 = T(sg[2]) / T(2), s3 = T(sg[3]) / T(2);
                for (int ch = 0; ch < d; ++ch) {
                    a[ch] += s0 * src[ch];
                    b[ch] += s1 * src[ch];
                    c[ch] += s2 * src[ch];
                    e[ch] += s3 * src[ch];
                }
            }
        }
    }
    std::vector<TensorT<T>> parents = {bands.ll, bands.lh, bands.hl, bands.hh};
    if (detail::track_any<T>(parents)) {
        detail::prepare<T>(out);
        detail::attach<T>(out, parents, [bands, hh, hw, w, d, og = out.grad]() {
            const auto& sgs2 = detail::haar_signs();
            const T* g = og->data();
            const std::array<TensorT<T>, 4> bt = {bands.ll, bands.lh, bands.hl, bands.hh};
            for (int k = 0; k < 4; ++k) {
                if (!bt[static_cast<size_t>(k)].requires_grad) continue;
                T* dst = bt[static_cast<size_t>(k)].grad->data();
                const auto& sg = sgs2[static_cast<size_t>(k)];
                const T s0 = T(sg[0]) / T(2), s1 = T(sg[1]) / T(2);
                const T s2 = T(sg[2]) / T(2), s3 = T(sg[3]) / T(2);
                for (int i = 0; i < hh; ++i) {
                    for (int j = 0; j < hw; ++j) {
                        const T* a = g + ((static_cast<long>(2 * i) * w) + 2 * j) * d;
                        const T* b = a + d;
                        const T* c = g + ((static_cast<long>(2 * i + 1) * w) + 2 * j) * d;
                        const T* e = c + d;
                        T* o = dst + (static_cast<long>(i) * hw + j) * d;
                        for (int ch = 0; ch < d; ++ch)
                            o[ch] += s0 * a[ch] + s1 * b[ch] + s2 * c[ch] + s3 * e[ch];
                    }
                }
            }
        });
    }
    return out;
}

// Plain sum of squares; handy for energy bookkeeping in tests and the
// dataset oracle.
template <typename T>
double energy(const TensorT<T>& t) {
    double e = 0;
    for (const T& v : *t.data) e += static_cast<double>(v) * static_cast<double>(v);
    return e;
}

}  // namespace ftf
