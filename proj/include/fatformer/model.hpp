#pragma once

// Full detector assembly: image encoder with forgery-aware adapters between
// stages, prompt set + text encoder, alignment ops and the configured
// training objective. One instance owns its parameters; training steps are
// exclusive, evaluation with frozen parameters may run concurrently.

#include <string>
#include <utility>
#include <vector>

#include "fatformer/encoders.hpp"
#include "fatformer/faa.hpp"
#include "fatformer/lga.hpp"

namespace ftf {

struct ModelConfig {
    ImageEncoderConfig img;
    int text_layers = 2;
    int context_count = 8;
    int classes = 2;
    int adapter_count = 3;  // 0 disables adapters
    int kernel_size = 1;
    bool image_branch = true;
    bool freq_branch = true;
    Interaction interaction = Interaction::Both;
    PromptMode prompt = PromptMode::Auto;
    ConditionMode condition = ConditionMode::Patch;
    LossMode loss_mode = LossMode::AugContrastive;

    void validate() const {
        img.validate();
        if (adapter_count != 0 && adapter_count != img.stages - 1)
            throw ConfigError("adapter count " + std::to_string(adapter_count) +
                              " does not match stages-1 = " + std::to_string(img.stages - 1));
        if (adapter_count != 0 && !image_branch && !freq_branch)
            throw ConfigError("adapter enabled with both branches disabled");
        if (classes != 2) throw ConfigError("two-class prompts only");
        if (kernel_size < 1 || kernel_size % 2 == 0)
            throw ConfigError("kernel size must be odd, got " + std::to_string(kernel_size));
    }
};

template <typename T>
struct ModelT {
    ModelConfig cfg;
    ImageEncoderT<T> encoder;
    std::vector<ForgeryAwareAdapterT<T>> adapters;
    TextPromptSetT<T> prompts;
    TextEncoderT<T> text;
    TensorT<T> tau;                 // learnable temperature, clamped to [1e-3, 1]
    TensorT<T> probe_w, probe_b;    // linear-probe head over the CLS token

    static constexpr T kTauInit = T(0.07);
    static constexpr T kTauMin = T(1e-3);
    static constexpr T kTauMax = T(1);

    void init(const ModelConfig& c, uint64_t seed) {
        cfg = c;
        cfg.validate();
        Rng rng(Rng::derive(seed, {0xF0F0}));
        encoder.init(rng, cfg.img);
        adapters.clear();
        adapters.resize(static_cast<size_t>(cfg.adapter_count));
        for (auto& a : adapters) {
            a.init(rng, cfg.img.embed_dim, cfg.img.heads, cfg.kernel_size);
            a.image_branch_enabled = cfg.image_branch;
            a.freq_branch_enabled = cfg.freq_branch;
            a.interaction = cfg.interaction;
        }
        prompts.init(rng, cfg.context_count, cfg.classes, cfg.img.embed_dim,
                     cfg.prompt == PromptMode::Auto);
        text.init(rng, cfg.text_layers, cfg.context_count, cfg.img.embed_dim, cfg.img.heads);
        tau = TensorT<T>::full({1}, kTauInit, true);
        probe_w = TensorT<T>::zeros({cfg.img.embed_dim}, true);
        probe_b = TensorT<T>::zeros({1}, true);
    }

    void clamp_temperature() const { clamp_values(tau, kTauMin, kTauMax); }

    std::vector<GridAdapterFn<T>> adapter_hooks() const {
        std::vector<GridAdapterFn<T>> hooks;
        hooks.reserve(adapters.size());
        for (const auto& a : adapters)
            hooks.push_back([&a](const TensorT<T>& grid) { return a.forward(grid); });
        return hooks;
    }

    EncoderOutputT<T> encode(const TensorT<T>& image) const {
        return encoder.run(image, adapter_hooks());
    }

    struct Output {
        TensorT<T> loss;
        TensorT<T> p_hat;  // [2], probability vector used for scoring
        AlignmentOutputT<T> align;
        EncoderOutputT<T> enc;
    };

    Output forward(const TensorT<T>& image, int label) const {
        Output out;
        out.enc = encode(image);

        if (cfg.loss_mode == LossMode::LinearProbe) {
            auto logit = add(dot(probe_w, out.enc.cls), probe_b);
            auto p = sigmoid(logit);
            auto one_minus = add_scalar(scale(p, T(-1)), T(1));
            out.p_hat = concat_rows<T>({reshape(one_minus, {1, 1}), reshape(p, {1, 1})});
            out.p_hat = reshape(out.p_hat, {2});
            out.loss = binary_cross_entropy(p, label);
            return out;
        }

        // prompt context, optionally conditioned on the image
        const TensorT<T>* enhanced = nullptr;
        if (cfg.condition != ConditionMode::None) {
            const TensorT<T> cond_input =
                cfg.condition == ConditionMode::Cls
                    ? repeat_row(out.enc.cls, cfg.img.tokens())
                    : out.enc.patches;
            out.align.enhanced_ctx = patch_based_enhance(prompts.ctx, cond_input);
            enhanced = &out.align.enhanced_ctx;
        } else {
            out.align.enhanced_ctx = prompts.ctx;
        }
        auto f_text = text.run(prompts, enhanced);

        out.align.s_cls = similarity_cls(out.enc.cls, f_text);
        TensorT<T> logits = out.align.s_cls;
        if (cfg.loss_mode == LossMode::AugContrastive) {
            out.align.aligned_patches = text_guided_interact(out.enc.patches, f_text);
            out.align.s_patch = similarity_patches(out.align.aligned_patches, f_text);
            logits = add(out.align.s_cls, out.align.s_patch);
        }
        out.p_hat = softmax(div_by(logits, tau), 0, T(1));
        out.align.p_hat = out.p_hat;
        out.loss = contrastive_loss(out.p_hat, label);
        return out;
    }

    // Probability that the image is fake, for evaluation (no graph).
    T score(const TensorT<T>& image) const {
        NoGrad off;
        Output out = forward(image, 0);
        return (*out.p_hat.data)[1];
    }

    // Full named-parameter registry in a fixed order (checkpoint layout).
    // Includes frozen tensors such as fixed-template contexts.
    std::vector<std::pair<std::string, TensorT<T>>> named_params() {
        std::vector<std::pair<std::string, TensorT<T>>> out;
        auto collect = [&out](const std::string& name, TensorT<T>& t) {
            out.emplace_back(name, t);
        };
        encoder.visit_params(collect);
        for (size_t i = 0; i < adapters.size(); ++i)
            adapters[i].visit_params("adapter" + std::to_string(i), collect);
        collect("prompts.ctx", prompts.ctx);
        collect("prompts.class_emb", prompts.class_emb);
        collect("prompts.eos", prompts.eos);
        text.visit_params(collect);
        collect("tau", tau);
        collect("probe.w", probe_w);
        collect("probe.b", probe_b);
        return out;
    }

    std::vector<TensorT<T>> trainable_params() {
        std::vector<TensorT<T>> out;
        for (auto& [name, t] : named_params())
            if (t.requires_grad) out.push_back(t);
        return out;
    }

    // Moves every parameter to a generic position so gradient checks
    // exercise all paths (identity/zero initializations and lambda = 0 would
    // otherwise hide entire branches behind zero gradients). Layer-norm
    // gains stay near one to keep the point well conditioned.
    void randomize_for_gradcheck(uint64_t seed) {
        Rng rng(Rng::derive(seed, {0x6C}));
        for (auto& [name, t] : named_params()) {
            const bool is_gain = name.find("ln") != std::string::npos &&
                                 name.find("_g") != std::string::npos;
            for (T& v : *t.data)
                v = static_cast<T>(rng.gaussian() * 0.2) + (is_gain ? T(1) : T(0));
        }
        (*tau.data)[0] = T(0.8);
        for (auto& a : adapters) (*a.fusion_scale.data)[0] = T(0.7);
    }
};

using Model = ModelT<float>;
using Model64 = ModelT<double>;

}  // namespace ftf
