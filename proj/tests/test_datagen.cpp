#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fatformer/datagen.hpp"
#include "fatformer/wavelet.hpp"

using namespace ftf;
using namespace ftf::datagen;

TEST_CASE("make_real is bitwise deterministic and stays in [0,1]") {
    for (uint64_t seed : {0ull, 7ull, 123456ull}) {
        auto a = make_real(seed);
        auto b = make_real(seed);
        CHECK(a.pixels == b.pixels);
        CHECK(a.label == 0);
        CHECK(a.family == Family::Real);
        for (float v : a.pixels) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    CHECK(make_real(1).pixels != make_real(2).pixels);
}

TEST_CASE("reals are band-limited: mean high-frequency fraction below 0.05") {
    double mean = 0;
    for (uint64_t s = 0; s < 200; ++s) mean += highfreq_energy_fraction(make_real(s).pixels);
    mean /= 200;
    INFO("mean HF fraction ", mean);
    CHECK(mean < 0.05);
}

TEST_CASE("gen_A difference energy concentrates in the HH band") {
    // fake minus its source real, measured with the wavelet module
    double worst = 1.0;
    double mean = 0;
    for (uint64_t s = 1000; s < 1200; ++s) {
        auto real = make_real(s);
        auto fake = make_fake(s, Family::GenA);
        std::vector<float> diff(static_cast<size_t>(kPixelCount));
        for (int i = 0; i < kPixelCount; ++i) diff[static_cast<size_t>(i)] = fake.pixels[static_cast<size_t>(i)] - real.pixels[static_cast<size_t>(i)];
        const double frac = hh_energy_fraction(diff);
        worst = std::min(worst, frac);
        mean += frac;
    }
    mean /= 200;
    INFO("mean HH fraction of difference ", mean, ", worst ", worst);
    CHECK(mean > 0.60);
}

TEST_CASE("zero artifact strength reproduces the real image exactly") {
    for (Family f : {Family::GenA, Family::GenB}) {
        auto real = make_real(77);
        auto fake = make_fake(77, f, 0.0f);
        CHECK(fake.pixels == real.pixels);
        CHECK(fake.label == 1);
    }
}

TEST_CASE("same seed gives the same base field across families") {
    auto a = make_fake(42, Family::GenA);
    auto b = make_fake(42, Family::GenB);
    CHECK(a.pixels != b.pixels);  // artifacts differ
    // strength 0 collapses both to the identical base
    CHECK(make_fake(42, Family::GenA, 0.0f).pixels == make_fake(42, Family::GenB, 0.0f).pixels);
}

TEST_CASE("unknown family is rejected") {
    CHECK_THROWS_AS(make_fake(1, Family::Real), ParamError);
}

TEST_CASE("oracle separates the splits it was built for") {
    auto bundle = build_splits(128, 32, 128, 9);
    auto oracle = calibrate_oracle(bundle.train);
    CHECK(oracle_accuracy(oracle, bundle.test_in) >= 0.99);
    CHECK(oracle_accuracy(oracle, bundle.test_cross) >= 0.95);
    // pure real scores 0, gen_A fake scores 1, zero-strength fake is "real"
    CHECK(oracle(make_real(999999)) == 0);
    CHECK(oracle(make_fake(999999, Family::GenA)) == 1);
    CHECK(oracle(make_fake(999999, Family::GenA, 0.0f)) == 0);
}

TEST_CASE("perturb with all flags disabled is the identity") {
    auto img = make_fake(5, Family::GenA);
    PerturbationConfig cfg;  // all off
    auto out = perturb(img, cfg, 31337);
    CHECK(out.pixels == img.pixels);
    CHECK(out.label == img.label);
    CHECK(static_cast<int>(out.family) == static_cast<int>(img.family));
}

TEST_CASE("perturb is deterministic per (image, seed)") {
    auto img = make_fake(6, Family::GenA);
    auto cfg = PerturbationConfig::all();
    auto a = perturb(img, cfg, 11);
    auto b = perturb(img, cfg, 11);
    CHECK(a.pixels == b.pixels);
    auto c = perturb(img, cfg, 12);
    CHECK(a.pixels != c.pixels);
    for (float v : a.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("strong blur knocks the oracle down on gen_A") {
    auto bundle = build_splits(128, 32, 200, 13);
    auto oracle = calibrate_oracle(bundle.train);
    const double clean = oracle_accuracy(oracle, bundle.test_in);

    PerturbationConfig cfg;
    cfg.blur = true;
    cfg.blur_sigma_min = cfg.blur_sigma_max = 1.5;
    std::vector<LabeledImage> blurred;
    uint64_t pseed = 0;
    for (const auto& img : bundle.test_in) blurred.push_back(perturb(img, cfg, pseed++));
    const double hit = oracle_accuracy(oracle, blurred);
    INFO("clean ", clean, " blurred ", hit);
    CHECK(clean - hit > 0.05);
}

TEST_CASE("build_splits is balanced, deterministic and seed-disjoint") {
    auto b = build_splits(64, 16, 32, 3);
    CHECK(b.train.size() == 64);
    CHECK(b.val.size() == 16);
    CHECK(b.test_in.size() == 32);
    CHECK(b.test_cross.size() == 32);
    auto count_fakes = [](const std::vector<LabeledImage>& v) {
        int n = 0;
        for (const auto& img : v) n += img.label;
        return n;
    };
    CHECK(count_fakes(b.train) == 32);
    CHECK(count_fakes(b.val) == 8);
    CHECK(count_fakes(b.test_in) == 16);
    CHECK(count_fakes(b.test_cross) == 16);
    for (const auto& img : b.test_cross)
        if (img.label == 1) CHECK(img.family == Family::GenB);

    // pairwise disjoint ranges by construction
    std::vector<SeedRange> all;
    for (const auto& [k, r] : b.ranges) all.push_back(r);
    CHECK_NOTHROW(validate_disjoint(all));
    CHECK_THROWS_AS(validate_disjoint({SeedRange{0, 10}, SeedRange{5, 10}}), ConfigError);

    auto b2 = build_splits(64, 16, 32, 3);
    CHECK(b.train[10].pixels == b2.train[10].pixels);
    CHECK_THROWS_AS(build_splits(63, 16, 32, 3), ConfigError);
    CHECK_THROWS_AS(build_splits(0, 16, 32, 3), ConfigError);
}

TEST_CASE("dataset round-trips through the manifest and split files") {
    const std::string dir = "/tmp/ftf_dataset_test";
    std::filesystem::remove_all(dir);
    auto b = build_splits(16, 8, 8, 21);
    write_dataset(dir, b);
    auto loaded = load_dataset(dir);
    CHECK(loaded.base_seed == b.base_seed);
    CHECK(loaded.train.size() == b.train.size());
    for (size_t i = 0; i < b.train.size(); ++i) {
        CHECK(loaded.train[i].pixels == b.train[i].pixels);
        CHECK(loaded.train[i].label == b.train[i].label);
        CHECK(loaded.train[i].seed == b.train[i].seed);
    }
    CHECK(loaded.test_cross[b.test_cross.size() - 1].pixels == b.test_cross.back().pixels);
    CHECK(manifest_hash(dir) == fnv1a64(manifest_text(b)));
}

TEST_CASE("corrupt split files are rejected") {
    const std::string dir = "/tmp/ftf_dataset_corrupt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir + "/bad.ftfd", std::ios::binary);
        os << "NOPE";
    }
    CHECK_THROWS_AS(read_split_file(dir + "/bad.ftfd"), IoError);

    auto b = build_splits(4, 2, 2, 5);
    write_split_file(dir + "/trunc.ftfd", b.train);
    std::filesystem::resize_file(dir + "/trunc.ftfd", 64);
    CHECK_THROWS_AS(read_split_file(dir + "/trunc.ftfd"), IoError);
}
