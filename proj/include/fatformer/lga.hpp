#pragma once

// Language-guided alignment: the patch-based enhancer conditions the prompt
// context on image patch tokens, the text-guided interactor mixes prompt
// embeddings back into the patch tokens, and the augmented contrastive
// objective scores the CLS cosine plus the mean aligned-patch cosine through
// a temperature softmax.

#include <string>

#include "fatformer/nn.hpp"

namespace ftf {

enum class LossMode { LinearProbe, Contrastive, AugContrastive };
enum class PromptMode { Fixed, Auto };
enum class ConditionMode { None, Cls, Patch };

inline const char* to_string(LossMode m) {
    switch (m) {
        case LossMode::LinearProbe: return "linear_probe";
        case LossMode::Contrastive: return "contra";
        default: return "aug_contra";
    }
}
inline const char* to_string(PromptMode m) { return m == PromptMode::Fixed ? "fixed" : "auto"; }
inline const char* to_string(ConditionMode m) {
    switch (m) {
        case ConditionMode::None: return "none";
        case ConditionMode::Cls: return "cls";
        default: return "patch";
    }
}

template <typename T>
struct AlignmentOutputT {
    TensorT<T> enhanced_ctx;     // [C x D]
    TensorT<T> aligned_patches;  // [N x D]
    TensorT<T> s_cls;            // [M], cosine of CLS vs prompt embeddings
    TensorT<T> s_patch;          // [M], mean aligned-patch cosine
    TensorT<T> p_hat;            // [M], probability vector
};

// ctx + softmax(ctx . patches^T) . patches
template <typename T>
TensorT<T> patch_based_enhance(const TensorT<T>& p_ctx, const TensorT<T>& patches) {
    auto weights = softmax(matmul_nt(p_ctx, patches), 1, T(1));
    return add(matmul(weights, patches), p_ctx);
}

// patches + softmax(patches . f_text^T) . f_text
template <typename T>
TensorT<T> text_guided_interact(const TensorT<T>& patches, const TensorT<T>& f_text) {
    auto weights = softmax(matmul_nt(patches, f_text), 1, T(1));
    return add(matmul(weights, f_text), patches);
}

// Per-class cosine of the CLS token against prompt embeddings -> [M].
template <typename T>
TensorT<T> similarity_cls(const TensorT<T>& cls, const TensorT<T>& f_text) {
    auto cosines = row_cosines(reshape(cls, {1, cls.numel()}), f_text);
    return reshape(cosines, {f_text.dim(0)});
}

// Mean over patches of the per-class cosine -> [M].
template <typename T>
TensorT<T> similarity_patches(const TensorT<T>& aligned, const TensorT<T>& f_text) {
    return mean_rows(row_cosines(aligned, f_text));
}

// softmax((S + S') / tau) with the temperature as a learnable scalar tensor.
template <typename T>
TensorT<T> augmented_probability(const TensorT<T>& s, const TensorT<T>& s_prime,
                                 const TensorT<T>& tau) {
    if ((*tau.data)[0] <= T(0))
        throw ParamError("augmented_probability: temperature must be positive, got " +
                         std::to_string(static_cast<double>((*tau.data)[0])));
    return softmax(div_by(add(s, s_prime), tau), 0, T(1));
}

// Binary cross-entropy on the fake-class probability p = P(1):
//   L = -y*log(p) - (1-y)*log(1-p)
// log arguments are clamped at 1e-12 (clamps counted in log_clamp_events).
template <typename T>
TensorT<T> binary_cross_entropy(const TensorT<T>& p_fake, int label) {
    if (p_fake.numel() != 1)
        throw ShapeError("binary_cross_entropy: expected scalar probability, got " +
                         shape_str(p_fake.shape));
    if (label != 0 && label != 1)
        throw ParamError("binary_cross_entropy: label must be 0 or 1, got " +
                         std::to_string(label));
    if (label == 1) return scale(log_clamped(p_fake), T(-1));
    auto one_minus = add_scalar(scale(p_fake, T(-1)), T(1));
    return scale(log_clamped(one_minus), T(-1));
}

// Cross-entropy over the probability vector for the configured mode; the
// caller supplies P built from the matching similarity path.
template <typename T>
TensorT<T> contrastive_loss(const TensorT<T>& p_hat, int label) {
    if (p_hat.numel() != 2)
        throw ShapeError("loss: expected 2-class probability vector, got " +
                         shape_str(p_hat.shape));
    return binary_cross_entropy(reshape(slice_rows(p_hat, 1, 2), {1}), label);
}

}  // namespace ftf
