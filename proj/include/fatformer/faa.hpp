#pragma once

// Forgery-aware adapter: a convolutional image-domain extractor and a
// wavelet-domain extractor run in parallel on the stage's token grid and
// are fused by a learnable scale,
//
//   out = image_extract(g) + lambda * freq_extract(g)
//
// with no residual of the raw grid (the fusion is implemented literally).
// Stability at the start of training comes from the initialization instead:
// the image branch opens as an exact identity and lambda starts at zero, so
// a freshly inserted adapter leaves the encoder unchanged.
//
// The image branch is Conv(ReLU(Conv(g))) with k x k kernels (1x1 by
// default). A plain identity kernel would still clip negative activations
// through the ReLU, so the identity initialization shifts the first bias up
// and the second down by a fixed constant, making the branch the exact
// identity for activations above -kIdentityShift.
//
// The frequency branch decomposes the grid with the Haar DWT and runs
// pre-norm residual blocks over the sub-band coefficients: inter-band
// attention treats the four band vectors at each spatial position as a
// length-4 sequence; intra-band attention attends over the positions within
// each band; an FFN follows, and the synthesis transform maps the result
// back to the image domain. Zero-initialized output projections make each
// residual block start as a passthrough.

#include <vector>

#include "fatformer/nn.hpp"
#include "fatformer/wavelet.hpp"

namespace ftf {

enum class Interaction { Intra, Inter, Both };

inline const char* to_string(Interaction i) {
    switch (i) {
        case Interaction::Intra: return "intra";
        case Interaction::Inter: return "inter";
        default: return "both";
    }
}

// Gathers rows by index; backward scatters. Used to flip the band-stacked
// coefficient matrix between band-major and position-major layouts.
template <typename T>
TensorT<T> permute_rows(const TensorT<T>& x, const std::vector<int>& perm) {
    if (x.rank() < 1 || static_cast<int>(perm.size()) != x.dim(0))
        throw ShapeError("permute_rows: permutation of size " + std::to_string(perm.size()) +
                         " vs " + shape_str(x.shape));
    const int rowsz = x.numel() / x.dim(0);
    TensorT<T> out = TensorT<T>::zeros(x.shape);
    for (size_t i = 0; i < perm.size(); ++i)
        std::copy(x.data->begin() + static_cast<long>(perm[i]) * rowsz,
                  x.data->begin() + static_cast<long>(perm[i] + 1) * rowsz,
                  out.data->begin() + static_cast<long>(i) * rowsz);
    if (detail::track_any<T>({x})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x}, [x, perm, rowsz, og = out.grad]() {
            const auto& K = kernels::active<T>();
            for (size_t i = 0; i < perm.size(); ++i)
                K.axpy(x.grad->data() + static_cast<long>(perm[i]) * rowsz, T(1),
                       og->data() + static_cast<long>(i) * rowsz, rowsz);
        });
    }
    return out;
}

// Literal fusion of the two extractor outputs with the learnable scale.
template <typename T>
TensorT<T> fuse(const TensorT<T>& img, const TensorT<T>& freq, const TensorT<T>& lambda) {
    return add(img, scale_by(freq, lambda));
}

template <typename T>
struct ForgeryAwareAdapterT {
    // bias shift of the identity-start image branch; must clear the encoder's
    // initial activation range (about +-4 with depth-scaled init)
    static constexpr T kIdentityShift = T(8);

    int dim = 0;
    int ksize = 1;
    bool image_branch_enabled = true;
    bool freq_branch_enabled = true;
    Interaction interaction = Interaction::Both;

    // image branch
    TensorT<T> conv1_w, conv1_b, conv2_w, conv2_b;  // [(k*k*D) x D], [D]

    // frequency branch
    TensorT<T> ln_inter_g, ln_inter_b;
    MultiHeadAttentionT<T> inter_attn;
    TensorT<T> ln_intra_g, ln_intra_b;
    MultiHeadAttentionT<T> intra_attn;
    TensorT<T> ln_ffn_g, ln_ffn_b;
    TensorT<T> ffn_w1, ffn_b1, ffn_w2, ffn_b2;

    TensorT<T> fusion_scale;  // lambda, [1]

    void init(Rng& rng, int d, int heads, int kernel_size) {
        if (kernel_size < 1 || kernel_size % 2 == 0)
            throw ConfigError("adapter kernel size must be odd, got " +
                              std::to_string(kernel_size));
        dim = d;
        ksize = kernel_size;
        const int kin = ksize * ksize * d;
        const int center = (ksize / 2) * ksize + (ksize / 2);

        // shifted identity: Conv2(ReLU(Conv1(g))) == g for g > -kIdentityShift
        conv1_w = TensorT<T>::zeros({kin, d}, true);
        for (int c = 0; c < d; ++c) (*conv1_w.data)[static_cast<long>(center * d + c) * d + c] = T(1);
        conv1_b = TensorT<T>::full({d}, kIdentityShift, true);
        conv2_w = TensorT<T>::zeros({kin, d}, true);
        for (int c = 0; c < d; ++c) (*conv2_w.data)[static_cast<long>(center * d + c) * d + c] = T(1);
        conv2_b = TensorT<T>::full({d}, -kIdentityShift, true);

        ln_inter_g = TensorT<T>::full({d}, T(1), true);
        ln_inter_b = TensorT<T>::zeros({d}, true);
        inter_attn.init(rng, d, heads);
        ln_intra_g = TensorT<T>::full({d}, T(1), true);
        ln_intra_b = TensorT<T>::zeros({d}, true);
        intra_attn.init(rng, d, heads);
        ln_ffn_g = TensorT<T>::full({d}, T(1), true);
        ln_ffn_b = TensorT<T>::zeros({d}, true);
        ffn_w1 = TensorT<T>::randn(rng, {d, 2 * d}, T(0), fan_stddev<T>(d, 2 * d), true);
        ffn_b1 = TensorT<T>::zeros({2 * d}, true);
        ffn_w2 = TensorT<T>::randn(rng, {2 * d, d}, T(0), fan_stddev<T>(2 * d, d), true);
        ffn_b2 = TensorT<T>::zeros({d}, true);

        // residual sub-blocks start as passthroughs
        std::fill(inter_attn.wo.data->begin(), inter_attn.wo.data->end(), T(0));
        std::fill(intra_attn.wo.data->begin(), intra_attn.wo.data->end(), T(0));
        std::fill(ffn_w2.data->begin(), ffn_w2.data->end(), T(0));

        fusion_scale = TensorT<T>::zeros({1}, true);
    }

    // Conv(ReLU(Conv(g))), k x k same-padding, channelwise matmul per pixel.
    TensorT<T> image_extract(const TensorT<T>& grid) const {
        const int h = grid.dim(0), w = grid.dim(1);
        auto y = relu(linear(im2col(grid, ksize), conv1_w, conv1_b));
        auto z = linear(im2col(reshape(y, {h, w, dim}), ksize), conv2_w, conv2_b);
        return reshape(z, {h, w, dim});
    }

    TensorT<T> freq_extract(const TensorT<T>& grid) const {
        const int h = grid.dim(0), w = grid.dim(1);
        const int p = (h / 2) * (w / 2);
        auto bands = dwt2d(grid);

        // band-major stack: rows [band * p + position]
        TensorT<T> x = concat_rows<T>({reshape(bands.ll, {p, dim}), reshape(bands.lh, {p, dim}),
                                       reshape(bands.hl, {p, dim}), reshape(bands.hh, {p, dim})});

        if (interaction == Interaction::Inter || interaction == Interaction::Both) {
            // position-major: the 4 band vectors at one position form a block
            std::vector<int> to_pos(static_cast<size_t>(4 * p));
            std::vector<int> to_band(static_cast<size_t>(4 * p));
            for (int pos = 0; pos < p; ++pos)
                for (int b = 0; b < 4; ++b) {
                    to_pos[static_cast<size_t>(pos * 4 + b)] = b * p + pos;
                    to_band[static_cast<size_t>(b * p + pos)] = pos * 4 + b;
                }
            auto pm = permute_rows(x, to_pos);
            auto normed = layer_norm(pm, ln_inter_g, ln_inter_b);
            pm = add(pm, inter_attn.forward(normed, normed, normed, 4));
            x = permute_rows(pm, to_band);
        }
        if (interaction == Interaction::Intra || interaction == Interaction::Both) {
            auto normed = layer_norm(x, ln_intra_g, ln_intra_b);
            x = add(x, intra_attn.forward(normed, normed, normed, p));
        }
        auto normed = layer_norm(x, ln_ffn_g, ln_ffn_b);
        x = add(x, linear(relu(linear(normed, ffn_w1, ffn_b1)), ffn_w2, ffn_b2));

        FrequencyBandsT<T> out_bands;
        out_bands.ll = reshape(slice_rows(x, 0, p), {h / 2, w / 2, dim});
        out_bands.lh = reshape(slice_rows(x, p, 2 * p), {h / 2, w / 2, dim});
        out_bands.hl = reshape(slice_rows(x, 2 * p, 3 * p), {h / 2, w / 2, dim});
        out_bands.hh = reshape(slice_rows(x, 3 * p, 4 * p), {h / 2, w / 2, dim});
        out_bands.source_height = h;
        out_bands.source_width = w;
        return idwt2d(out_bands);
    }

    TensorT<T> forward(const TensorT<T>& grid) const {
        if (grid.rank() != 3 || grid.dim(2) != dim)
            throw ShapeError("adapter: expected [h x w x " + std::to_string(dim) + "], got " +
                             shape_str(grid.shape));
        if (!image_branch_enabled && !freq_branch_enabled)
            throw ConfigError("adapter: both branches disabled");
        if (!freq_branch_enabled) return image_extract(grid);
        if (!image_branch_enabled) return scale_by(freq_extract(grid), fusion_scale);
        return fuse(image_extract(grid), freq_extract(grid), fusion_scale);
    }

    template <typename Fn>
    void visit_params(const std::string& prefix, Fn&& fn) {
        fn(prefix + ".conv1_w", conv1_w);
        fn(prefix + ".conv1_b", conv1_b);
        fn(prefix + ".conv2_w", conv2_w);
        fn(prefix + ".conv2_b", conv2_b);
        fn(prefix + ".ln_inter_g", ln_inter_g);
        fn(prefix + ".ln_inter_b", ln_inter_b);
        fn(prefix + ".inter.wq", inter_attn.wq);
        fn(prefix + ".inter.bq", inter_attn.bq);
        fn(prefix + ".inter.wk", inter_attn.wk);
        fn(prefix + ".inter.bk", inter_attn.bk);
        fn(prefix + ".inter.wv", inter_attn.wv);
        fn(prefix + ".inter.bv", inter_attn.bv);
        fn(prefix + ".inter.wo", inter_attn.wo);
        fn(prefix + ".inter.bo", inter_attn.bo);
        fn(prefix + ".ln_intra_g", ln_intra_g);
        fn(prefix + ".ln_intra_b", ln_intra_b);
        fn(prefix + ".intra.wq", intra_attn.wq);
        fn(prefix + ".intra.bq", intra_attn.bq);
        fn(prefix + ".intra.wk", intra_attn.wk);
        fn(prefix + ".intra.bk", intra_attn.bk);
        fn(prefix + ".intra.wv", intra_attn.wv);
        fn(prefix + ".intra.bv", intra_attn.bv);
        fn(prefix + ".intra.wo", intra_attn.wo);
        fn(prefix + ".intra.bo", intra_attn.bo);
        fn(prefix + ".ln_ffn_g", ln_ffn_g);
        fn(prefix + ".ln_ffn_b", ln_ffn_b);
        fn(prefix + ".ffn_w1", ffn_w1);
        fn(prefix + ".ffn_b1", ffn_b1);
        fn(prefix + ".ffn_w2", ffn_w2);
        fn(prefix + ".ffn_b2", ffn_b2);
        fn(prefix + ".lambda", fusion_scale);
    }
};

}  // namespace ftf
