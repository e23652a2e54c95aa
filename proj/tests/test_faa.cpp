#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fatformer/faa.hpp"
#include "fatformer/gradcheck.hpp"

using namespace ftf;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    double m = 0;
    for (int i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>((*a.data)[i]) - (*b.data)[i]));
    return m;
}

template <typename T>
void randomize_adapter(ForgeryAwareAdapterT<T>& a, uint64_t seed) {
    Rng rng(seed);
    a.visit_params("a", [&rng](const std::string&, TensorT<T>& t) {
        for (T& v : *t.data) v = static_cast<T>(rng.gaussian() * 0.25);
    });
    (*a.fusion_scale.data)[0] = T(0.8);
}

}  // namespace

TEST_CASE("image branch at identity initialization is the identity") {
    Rng rng(1);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    // random signed grid, well inside the shifted-identity range
    auto g = Tensor::randn(rng, {4, 4, 8}, 0.0f, 0.8f);
    auto out = a.image_extract(g);
    CHECK(max_abs_diff(out, g) < 1e-5);
}

TEST_CASE("plain identity kernels pass nonnegative grids through the ReLU") {
    Rng rng(2);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    // drop the bias shift: identity kernels, zero biases
    std::fill(a.conv1_b.data->begin(), a.conv1_b.data->end(), 0.0f);
    std::fill(a.conv2_b.data->begin(), a.conv2_b.data->end(), 0.0f);
    auto g = Tensor::randn(rng, {4, 4, 8}, 1.0f, 0.3f);
    for (float& v : *g.data) v = std::abs(v);
    auto out = a.image_extract(g);
    CHECK(max_abs_diff(out, g) < 1e-6);
}

TEST_CASE("zero second convolution yields zero output") {
    Rng rng(3);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    std::fill(a.conv2_w.data->begin(), a.conv2_w.data->end(), 0.0f);
    std::fill(a.conv2_b.data->begin(), a.conv2_b.data->end(), 0.0f);
    auto g = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);
    auto out = a.image_extract(g);
    for (float v : *out.data) CHECK(v == 0.0f);
}

TEST_CASE("1x1 convolution matches the per-pixel matrix-multiply oracle") {
    Rng rng(4);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    randomize_adapter(a, 5);
    auto g = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);
    auto out = a.image_extract(g);
    // oracle: per position, y = W2^T relu(W1^T x + b1) + b2 with [D x D] kernels
    for (int pos = 0; pos < 16; ++pos) {
        std::vector<float> mid(8, 0.0f), want(8, 0.0f);
        for (int o = 0; o < 8; ++o) {
            float acc = (*a.conv1_b.data)[o];
            for (int c = 0; c < 8; ++c) acc += (*g.data)[pos * 8 + c] * (*a.conv1_w.data)[c * 8 + o];
            mid[o] = acc > 0 ? acc : 0.0f;
        }
        for (int o = 0; o < 8; ++o) {
            float acc = (*a.conv2_b.data)[o];
            for (int c = 0; c < 8; ++c) acc += mid[c] * (*a.conv2_w.data)[c * 8 + o];
            want[o] = acc;
        }
        for (int o = 0; o < 8; ++o)
            CHECK((*out.data)[pos * 8 + o] == doctest::Approx(want[o]).epsilon(1e-5));
    }
}

TEST_CASE("larger odd kernels preserve the grid shape") {
    Rng rng(6);
    for (int k : {3, 5}) {
        ForgeryAwareAdapterT<float> a;
        a.init(rng, 8, 2, k);
        auto g = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);
        CHECK(a.image_extract(g).shape == g.shape);
        CHECK(a.forward(g).shape == g.shape);
    }
    ForgeryAwareAdapterT<float> bad;
    CHECK_THROWS_AS(bad.init(rng, 8, 2, 2), ConfigError);
}

TEST_CASE("frequency branch with zero-projected residuals is the identity") {
    Rng rng(7);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);  // init zeroes the residual output projections
    auto g = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);
    auto out = a.freq_extract(g);
    CHECK(max_abs_diff(out, g) < 1e-5);
}

TEST_CASE("constant grids have zero detail bands and a well-defined freq branch") {
    auto g = Tensor::full({4, 4, 8}, 0.37f);
    auto bands = dwt2d(g);
    for (float v : *bands.lh.data) CHECK(v == doctest::Approx(0.0f));
    for (float v : *bands.hl.data) CHECK(v == doctest::Approx(0.0f));
    for (float v : *bands.hh.data) CHECK(v == doctest::Approx(0.0f));

    Rng rng(8);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    randomize_adapter(a, 9);
    auto out = a.freq_extract(g);
    for (float v : *out.data) CHECK(std::isfinite(v));
}

TEST_CASE("band-sequence attention matches a brute-force per-position oracle") {
    // 4x4x8 grid -> 16 positions x 4 bands; block attention over each
    // position's four band vectors must equal an explicit loop oracle.
    Rng rng(10);
    const int p = 16, d = 8, heads = 2, dh = d / heads;
    auto q = Tensor::randn(rng, {4 * p, d}, 0.0f, 1.0f);
    auto k = Tensor::randn(rng, {4 * p, d}, 0.0f, 1.0f);
    auto v = Tensor::randn(rng, {4 * p, d}, 0.0f, 1.0f);
    auto out = sdpa_blocks(q, k, v, heads, 4);

    const float alpha = 1.0f / std::sqrt(static_cast<float>(dh));
    for (int pos = 0; pos < p; ++pos) {
        for (int h = 0; h < heads; ++h) {
            for (int r = 0; r < 4; ++r) {
                // scores over the 4 bands at this position
                double scores[4];
                double mx = -1e30;
                for (int c = 0; c < 4; ++c) {
                    double s = 0;
                    for (int x = 0; x < dh; ++x)
                        s += static_cast<double>((*q.data)[(pos * 4 + r) * d + h * dh + x]) *
                             (*k.data)[(pos * 4 + c) * d + h * dh + x];
                    scores[c] = s * alpha;
                    mx = std::max(mx, scores[c]);
                }
                double z = 0;
                for (int c = 0; c < 4; ++c) {
                    scores[c] = std::exp(scores[c] - mx);
                    z += scores[c];
                }
                for (int x = 0; x < dh; ++x) {
                    double want = 0;
                    for (int c = 0; c < 4; ++c)
                        want += scores[c] / z * (*v.data)[(pos * 4 + c) * d + h * dh + x];
                    CHECK(std::abs((*out.data)[(pos * 4 + r) * d + h * dh + x] - want) < 1e-5);
                }
            }
        }
    }
}

TEST_CASE("fusion scale contract") {
    Rng rng(11);
    auto img = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);
    auto freq = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);

    auto lam0 = Tensor::zeros({1});
    CHECK(max_abs_diff(fuse(img, freq, lam0), img) == 0.0);

    auto lam = Tensor::from({1}, {0.7f});
    auto zero = Tensor::zeros({4, 4, 8});
    CHECK(max_abs_diff(fuse(img, zero, lam), img) == 0.0);

    auto lam1 = Tensor::from({1}, {1.0f});
    auto doubled = fuse(img, img, lam1);
    for (int i = 0; i < img.numel(); ++i)
        CHECK((*doubled.data)[i] == doctest::Approx(2.0f * (*img.data)[i]));

    CHECK_THROWS_AS(fuse(img, Tensor::zeros({2, 2, 8}), lam), ShapeError);
}

TEST_CASE("branch ablations: disabled branches drop out of the output") {
    Rng rng(12);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    randomize_adapter(a, 13);
    auto g = Tensor::randn(rng, {4, 4, 8}, 0.0f, 1.0f);
    NoGrad off;

    a.image_branch_enabled = true;
    a.freq_branch_enabled = false;
    CHECK(max_abs_diff(a.forward(g), a.image_extract(g)) == 0.0);

    a.image_branch_enabled = false;
    a.freq_branch_enabled = true;
    auto want = scale_by(a.freq_extract(g), a.fusion_scale);
    CHECK(max_abs_diff(a.forward(g), want) == 0.0);

    a.image_branch_enabled = false;
    a.freq_branch_enabled = false;
    CHECK_THROWS_AS(a.forward(g), ConfigError);
}

TEST_CASE("single-branch and single-interaction modes stay differentiable") {
    Rng rng(14);
    auto check_mode = [&](bool img_on, bool freq_on, Interaction inter) {
        ForgeryAwareAdapterT<double> a;
        a.init(rng, 8, 2, 1);
        randomize_adapter(a, 15);
        a.image_branch_enabled = img_on;
        a.freq_branch_enabled = freq_on;
        a.interaction = inter;
        auto g = Tensor64::randn(rng, {4, 4, 8}, 0.0, 1.0, true);
        CHECK(a.forward(g).shape == g.shape);
        auto rep = grad_check(
            [&]() {
                auto o = a.forward(g);
                return mean_all(mul(o, o));
            },
            {{"g", g},
             {"conv1_w", a.conv1_w},
             {"ffn_w1", a.ffn_w1},
             {"inter_wo", a.inter_attn.wo},
             {"intra_wo", a.intra_attn.wo},
             {"lambda", a.fusion_scale}},
            1e-4, 1e-4, 12, 21);
        INFO("img=", img_on, " freq=", freq_on, " inter=", to_string(inter), " err ",
             rep.max_rel_err());
        CHECK(rep.pass());
    };
    check_mode(true, false, Interaction::Both);
    check_mode(false, true, Interaction::Both);
    check_mode(true, true, Interaction::Intra);
    check_mode(true, true, Interaction::Inter);
    check_mode(true, true, Interaction::Both);
}

TEST_CASE("odd grids are rejected through the frequency branch") {
    Rng rng(16);
    ForgeryAwareAdapterT<float> a;
    a.init(rng, 8, 2, 1);
    auto g = Tensor::randn(rng, {3, 4, 8}, 0.0f, 1.0f);
    CHECK_THROWS_AS(a.freq_extract(g), ShapeError);
}
