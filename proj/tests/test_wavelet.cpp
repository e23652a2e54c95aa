#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fatformer/gradcheck.hpp"
#include "fatformer/wavelet.hpp"

using namespace ftf;

TEST_CASE("constant 2x2 grid: LL = 2c, detail bands zero") {
    for (float c : {1.0f, -0.5f, 3.25f}) {
        auto x = Tensor::full({2, 2, 1}, c);
        auto b = dwt2d(x);
        CHECK((*b.ll.data)[0] == doctest::Approx(2.0f * c));
        CHECK((*b.lh.data)[0] == doctest::Approx(0.0f));
        CHECK((*b.hl.data)[0] == doctest::Approx(0.0f));
        CHECK((*b.hh.data)[0] == doctest::Approx(0.0f));
    }
}

TEST_CASE("2x2 checkerboard puts all energy in HH") {
    auto x = Tensor::from({2, 2, 1}, {1.0f, -1.0f, -1.0f, 1.0f});
    auto b = dwt2d(x);
    CHECK((*b.ll.data)[0] == doctest::Approx(0.0f));
    CHECK((*b.lh.data)[0] == doctest::Approx(0.0f));
    CHECK((*b.hl.data)[0] == doctest::Approx(0.0f));
    CHECK((*b.hh.data)[0] == doctest::Approx(2.0f));
    CHECK(energy(b.hh) == doctest::Approx(energy(x)));
}

TEST_CASE("zero bands reconstruct the zero grid; LL=2c reconstructs constant c") {
    FrequencyBands b;
    b.ll = Tensor::zeros({2, 2, 3});
    b.lh = Tensor::zeros({2, 2, 3});
    b.hl = Tensor::zeros({2, 2, 3});
    b.hh = Tensor::zeros({2, 2, 3});
    auto zero = idwt2d(b);
    for (float v : *zero.data) CHECK(v == 0.0f);

    b.ll = Tensor::full({2, 2, 3}, 2.0f * 1.7f);
    auto grid = idwt2d(b);
    for (float v : *grid.data) CHECK(v == doctest::Approx(1.7f));
}

TEST_CASE("round-trip identity both directions on 100 random even grids") {
    // grids up to 16x16x8, run both idwt(dwt(x)) = x and dwt(idwt(b)) = b
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 2 * rng.uniform_int(1, 8);
        const int w = 2 * rng.uniform_int(1, 8);
        const int d = rng.uniform_int(1, 8);

        auto x = Tensor::randn(rng, {h, w, d}, 0.0f, 1.0f);
        auto back = idwt2d(dwt2d(x));
        double emax = 0;
        for (int i = 0; i < x.numel(); ++i)
            emax = std::max(emax, std::abs(static_cast<double>((*x.data)[i]) - (*back.data)[i]));
        CHECK(emax < 1e-5);

        FrequencyBands bands;
        bands.ll = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
        bands.lh = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
        bands.hl = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
        bands.hh = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
        auto grid = idwt2d(bands);
        auto b2 = dwt2d(grid);
        auto check_band = [&](const Tensor& want, const Tensor& got) {
            for (int i = 0; i < want.numel(); ++i)
                CHECK(std::abs((*want.data)[i] - (*got.data)[i]) < 1e-5);
        };
        check_band(bands.ll, b2.ll);
        check_band(bands.lh, b2.lh);
        check_band(bands.hl, b2.hl);
        check_band(bands.hh, b2.hh);
    }
}

TEST_CASE("orthonormal Haar conserves energy within 1e-4 relative") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int h = 2 * rng.uniform_int(1, 8);
        const int w = 2 * rng.uniform_int(1, 8);
        const int d = rng.uniform_int(1, 8);
        auto x = Tensor::randn(rng, {h, w, d}, 0.3f, 1.4f);
        auto b = dwt2d(x);
        const double ex = energy(x);
        const double eb = energy(b.ll) + energy(b.lh) + energy(b.hl) + energy(b.hh);
        CHECK(std::abs(ex - eb) / std::max(1e-12, ex) < 1e-4);
    }
}

TEST_CASE("linearity of the analysis transform") {
    Rng rng(11);
    const float alpha = 1.3f, beta = -0.4f;
    auto x = Tensor::randn(rng, {6, 4, 3}, 0.0f, 1.0f);
    auto y = Tensor::randn(rng, {6, 4, 3}, 0.0f, 1.0f);
    auto combo = add(scale(x, alpha), scale(y, beta));
    auto bc = dwt2d(combo);
    auto bx = dwt2d(x);
    auto by = dwt2d(y);
    for (Band band : {Band::LL, Band::LH, Band::HL, Band::HH}) {
        const Tensor& c = bc.band(band);
        const Tensor& a = bx.band(band);
        const Tensor& b = by.band(band);
        for (int i = 0; i < c.numel(); ++i)
            CHECK(std::abs((*c.data)[i] - (alpha * (*a.data)[i] + beta * (*b.data)[i])) < 1e-6);
    }
}

TEST_CASE("odd spatial dimensions are rejected, not padded") {
    CHECK_THROWS_AS(dwt2d(Tensor::zeros({3, 4, 2})), ShapeError);
    CHECK_THROWS_AS(dwt2d(Tensor::zeros({4, 5, 2})), ShapeError);

    FrequencyBands b;
    b.ll = Tensor::zeros({2, 2, 1});
    b.lh = Tensor::zeros({2, 2, 1});
    b.hl = Tensor::zeros({2, 2, 1});
    b.hh = Tensor::zeros({2, 1, 1});  // inconsistent
    CHECK_THROWS_AS(idwt2d(b), ShapeError);
}

TEST_CASE("gradient through dwt and idwt passes grad_check at 1e-5") {
    Rng rng(13);
    auto x = Tensor64::randn(rng, {4, 6, 2}, 0.0, 1.0, true);
    auto w = Tensor64::randn(rng, {4, 6, 2}, 0.0, 1.0);
    auto rep = grad_check(
        [&]() {
            auto bands = dwt2d(x);
            // weight the reconstruction so every band contributes
            auto back = idwt2d(bands);
            return add(sum_all(mul(back, w)), sum_all(mul(bands.hh, bands.hh)));
        },
        {{"x", x}}, 1e-5, 1e-5);
    INFO("max rel err ", rep.max_rel_err());
    CHECK(rep.pass());
}
