#pragma once

// Toy ViT image encoder split into stages with adapter attachment points
// between them, and a small bidirectional transformer text encoder that
// pools prompt embeddings from the EOS position.
//
// Forward passes over distinct inputs with shared frozen parameters may run
// concurrently; training steps mutate parameters and are exclusive.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fatformer/nn.hpp"

namespace ftf {

struct ImageEncoderConfig {
    int image_size = 32;  // H = W
    int patch_size = 4;
    int embed_dim = 64;
    int layers = 8;
    int stages = 4;
    int heads = 4;

    int grid_side() const { return image_size / patch_size; }
    int tokens() const { return grid_side() * grid_side(); }  // N
    int layers_per_stage() const { return layers / stages; }

    void validate() const {
        if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
            throw ConfigError("image size " + std::to_string(image_size) +
                              " not divisible by patch size " + std::to_string(patch_size));
        if (layers <= 0 || stages <= 0 || layers % stages != 0)
            throw ConfigError("layers " + std::to_string(layers) + " not divisible into " +
                              std::to_string(stages) + " stages");
        if (grid_side() % 2 != 0)
            throw ConfigError("token grid side " + std::to_string(grid_side()) +
                              " must be even for the wavelet transform");
        if (embed_dim % heads != 0)
            throw ConfigError("embed dim " + std::to_string(embed_dim) + " not divisible by " +
                              std::to_string(heads) + " heads");
    }
};

// Pre-norm transformer block shared by the image and text encoders.
template <typename T>
struct TransformerBlockT {
    TensorT<T> ln1_g, ln1_b, ln2_g, ln2_b;
    MultiHeadAttentionT<T> attn;
    TensorT<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;

    // residual_scale shrinks the two projections that write into the
    // residual stream (1/sqrt(2*depth)) so the stream stays O(1) at any
    // depth instead of growing with the block count.
    void init(Rng& rng, int dim, int heads, int hidden, T residual_scale = T(1)) {
        ln1_g = TensorT<T>::full({dim}, T(1), true);
        ln1_b = TensorT<T>::zeros({dim}, true);
        ln2_g = TensorT<T>::full({dim}, T(1), true);
        ln2_b = TensorT<T>::zeros({dim}, true);
        attn.init(rng, dim, heads);
        for (T& v : *attn.wo.data) v *= residual_scale;
        mlp_w1 = TensorT<T>::randn(rng, {dim, hidden}, T(0), fan_stddev<T>(dim, hidden), true);
        mlp_b1 = TensorT<T>::zeros({hidden}, true);
        mlp_w2 = TensorT<T>::randn(rng, {hidden, dim}, T(0),
                                   fan_stddev<T>(hidden, dim) * residual_scale, true);
        mlp_b2 = TensorT<T>::zeros({dim}, true);
    }

    TensorT<T> forward(const TensorT<T>& x) const {
        auto h = add(x, attn.self_attention(layer_norm(x, ln1_g, ln1_b)));
        auto m = linear(relu(linear(layer_norm(h, ln2_g, ln2_b), mlp_w1, mlp_b1)), mlp_w2, mlp_b2);
        return add(h, m);
    }

    template <typename Fn>
    void visit_params(const std::string& prefix, Fn&& fn) {
        fn(prefix + ".ln1_g", ln1_g);
        fn(prefix + ".ln1_b", ln1_b);
        fn(prefix + ".attn.wq", attn.wq);
        fn(prefix + ".attn.bq", attn.bq);
        fn(prefix + ".attn.wk", attn.wk);
        fn(prefix + ".attn.bk", attn.bk);
        fn(prefix + ".attn.wv", attn.wv);
        fn(prefix + ".attn.bv", attn.bv);
        fn(prefix + ".attn.wo", attn.wo);
        fn(prefix + ".attn.bo", attn.bo);
        fn(prefix + ".ln2_g", ln2_g);
        fn(prefix + ".ln2_b", ln2_b);
        fn(prefix + ".mlp_w1", mlp_w1);
        fn(prefix + ".mlp_b1", mlp_b1);
        fn(prefix + ".mlp_w2", mlp_w2);
        fn(prefix + ".mlp_b2", mlp_b2);
    }
};

template <typename T>
struct EncoderOutputT {
    TensorT<T> cls;                     // [D]
    TensorT<T> patches;                 // [N x D]
    std::vector<TensorT<T>> per_stage;  // stage outputs g^(j), [(1+N) x D] each
};

// Adapter hook: maps a [side x side x D] token grid to a same-shape grid.
// The CLS token bypasses the hook.
template <typename T>
using GridAdapterFn = std::function<TensorT<T>(const TensorT<T>&)>;

template <typename T>
struct ImageEncoderT {
    ImageEncoderConfig cfg;
    TensorT<T> patch_w;    // [3*P*P x D]
    TensorT<T> patch_b;    // [D]
    TensorT<T> cls_token;  // [1 x D]
    TensorT<T> pos_embed;  // [(1+N) x D]
    std::vector<TransformerBlockT<T>> blocks;
    TensorT<T> ln_final_g, ln_final_b;

    void init(Rng& rng, const ImageEncoderConfig& c) {
        cfg = c;
        cfg.validate();
        const int d = cfg.embed_dim;
        const int psz = 3 * cfg.patch_size * cfg.patch_size;
        patch_w = TensorT<T>::randn(rng, {psz, d}, T(0), fan_stddev<T>(psz, d), true);
        patch_b = TensorT<T>::zeros({d}, true);
        cls_token = TensorT<T>::randn(rng, {1, d}, T(0), T(0.02), true);
        pos_embed = TensorT<T>::randn(rng, {1 + cfg.tokens(), d}, T(0), T(0.02), true);
        blocks.resize(static_cast<size_t>(cfg.layers));
        const T rscale = T(1) / std::sqrt(static_cast<T>(2 * cfg.layers));
        for (auto& b : blocks) b.init(rng, d, cfg.heads, 2 * d, rscale);
        ln_final_g = TensorT<T>::full({d}, T(1), true);
        ln_final_b = TensorT<T>::zeros({d}, true);
    }

    // [3 x H x W] -> [(1+N) x D]: linear patch projection, CLS prepended,
    // learned positional embeddings added.
    TensorT<T> patch_embed(const TensorT<T>& image) const {
        if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != cfg.image_size ||
            image.dim(2) != cfg.image_size)
            throw ShapeError("patch_embed: expected [3x" + std::to_string(cfg.image_size) + "x" +
                             std::to_string(cfg.image_size) + "], got " + shape_str(image.shape));
        auto projected = linear(patchify(image, cfg.patch_size), patch_w, patch_b);
        auto tokens = concat_rows<T>({cls_token, projected});
        return add(tokens, pos_embed);
    }

    TensorT<T> run_stage(int stage, const TensorT<T>& tokens) const {
        const int per = cfg.layers_per_stage();
        TensorT<T> x = tokens;
        for (int l = stage * per; l < (stage + 1) * per; ++l)
            x = blocks[static_cast<size_t>(l)].forward(x);
        return x;
    }

    // Adapters bridge adjacent stages: between stage j and j+1 the patch
    // tokens (reshaped to the token grid) pass through adapters[j]; the CLS
    // token bypasses it.
    EncoderOutputT<T> run(const TensorT<T>& image,
                          const std::vector<GridAdapterFn<T>>& adapters = {}) const {
        if (!adapters.empty() && static_cast<int>(adapters.size()) != cfg.stages - 1)
            throw ConfigError("adapter count " + std::to_string(adapters.size()) +
                              " does not match stages-1 = " + std::to_string(cfg.stages - 1));
        const int n = cfg.tokens();
        const int side = cfg.grid_side();
        const int d = cfg.embed_dim;

        EncoderOutputT<T> out;
        TensorT<T> tokens = patch_embed(image);
        for (int s = 0; s < cfg.stages; ++s) {
            tokens = run_stage(s, tokens);
            out.per_stage.push_back(tokens);
            if (!adapters.empty() && s < cfg.stages - 1) {
                auto cls_row = slice_rows(tokens, 0, 1);
                auto grid = reshape(slice_rows(tokens, 1, 1 + n), {side, side, d});
                auto adapted = adapters[static_cast<size_t>(s)](grid);
                tokens = concat_rows<T>({cls_row, reshape(adapted, {n, d})});
            }
        }
        auto final_tokens = layer_norm(tokens, ln_final_g, ln_final_b);
        out.cls = reshape(slice_rows(final_tokens, 0, 1), {d});
        out.patches = slice_rows(final_tokens, 1, 1 + n);
        return out;
    }

    template <typename Fn>
    void visit_params(Fn&& fn) {
        fn("encoder.patch_w", patch_w);
        fn("encoder.patch_b", patch_b);
        fn("encoder.cls_token", cls_token);
        fn("encoder.pos_embed", pos_embed);
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_params("encoder.block" + std::to_string(i), fn);
        fn("encoder.ln_final_g", ln_final_g);
        fn("encoder.ln_final_b", ln_final_b);
    }
};

// Learnable prompt pieces: C context embeddings, one class embedding per
// class and a shared EOS token. One prompt sequence per class is
// [ctx..., class_m, EOS] of length C+2.
template <typename T>
struct TextPromptSetT {
    TensorT<T> ctx;        // [C x D]
    TensorT<T> class_emb;  // [M x D]
    TensorT<T> eos;        // [1 x D]
    int context_count = 8;
    int classes = 2;

    void init(Rng& rng, int c, int m, int dim, bool trainable_ctx) {
        context_count = c;
        classes = m;
        ctx = TensorT<T>::randn(rng, {c, dim}, T(0), T(0.02), trainable_ctx);
        class_emb = TensorT<T>::randn(rng, {m, dim}, T(0), T(0.02), true);
        eos = TensorT<T>::randn(rng, {1, dim}, T(0), T(0.02), true);
    }
};

template <typename T>
struct TextEncoderT {
    std::vector<TransformerBlockT<T>> blocks;
    TensorT<T> pos_embed;  // [(C+2) x D]
    TensorT<T> ln_g, ln_b;
    int seq_len = 0;

    void init(Rng& rng, int layers, int ctx_count, int dim, int heads) {
        seq_len = ctx_count + 2;
        blocks.resize(static_cast<size_t>(layers));
        const T rscale = T(1) / std::sqrt(static_cast<T>(2 * layers));
        for (auto& b : blocks) b.init(rng, dim, heads, 2 * dim, rscale);
        pos_embed = TensorT<T>::randn(rng, {seq_len, dim}, T(0), T(0.02), true);
        ln_g = TensorT<T>::full({dim}, T(1), true);
        ln_b = TensorT<T>::zeros({dim}, true);
    }

    // Per class m the sequence [ctx..., class_m, EOS] runs through the
    // blocks (no causal mask at this scale); the final representation at the
    // EOS position is that class's prompt embedding. `enhanced_ctx`, when
    // given, replaces the raw context rows.
    TensorT<T> run(const TextPromptSetT<T>& prompts, const TensorT<T>* enhanced_ctx = nullptr) const {
        const TensorT<T>& ctx = enhanced_ctx ? *enhanced_ctx : prompts.ctx;
        if (ctx.dim(0) + 2 != seq_len)
            throw ShapeError("text encoder: context " + shape_str(ctx.shape) +
                             " does not fit sequence length " + std::to_string(seq_len));
        std::vector<TensorT<T>> rows;
        for (int m = 0; m < prompts.classes; ++m) {
            auto seq = concat_rows<T>({ctx, slice_rows(prompts.class_emb, m, m + 1), prompts.eos});
            TensorT<T> x = add(seq, pos_embed);
            for (const auto& b : blocks) x = b.forward(x);
            x = layer_norm(x, ln_g, ln_b);
            rows.push_back(slice_rows(x, seq_len - 1, seq_len));  // EOS position
        }
        return concat_rows<T>(rows);  // [M x D]
    }

    template <typename Fn>
    void visit_params(Fn&& fn) {
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_params("text.block" + std::to_string(i), fn);
        fn("text.pos_embed", pos_embed);
        fn("text.ln_g", ln_g);
        fn("text.ln_b", ln_b);
    }
};

}  // namespace ftf
