#pragma once

// Synthetic forgery corpus with a known, brute-force-checkable artifact
// signature. Reals are band-limited smoothed noise fields; fakes start from
// the same field and inject an upsampling-style artifact whose energy sits
// in the Haar HH band:
//
//   gen_A: nearest-neighbor 2x resampling residual plus a period-2
//          checkerboard (sign alternates every pixel, pure Nyquist)
//   gen_B: same pipeline with a period-4 checkerboard, phase-offset by one
//          pixel so it also lands in HH, plus a +-3% per-channel gain skew
//
// The whole deviation from the real image scales with the artifact strength,
// so strength 0 reproduces the real image exactly. A hand-written HH-energy
// threshold detector (the oracle) must separate the splits before any model
// training is attempted.
//
// Generation is embarrassingly parallel across seeds; outputs are immutable.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fatformer/errors.hpp"
#include "fatformer/rng.hpp"

namespace ftf::datagen {

constexpr int kImageSize = 32;
constexpr int kChannels = 3;
constexpr int kPixelCount = kChannels * kImageSize * kImageSize;
constexpr float kArtifactAmplitude = 0.04f;  // checkerboard amplitude, pixel units
constexpr float kResampleBlend = 0.25f;      // weight of the NN-resampling residual
constexpr float kRealBlurSigma = 2.0f;

enum class Family : uint8_t { Real = 0, GenA = 1, GenB = 2 };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::Real: return "real";
        case Family::GenA: return "gen_A";
        default: return "gen_B";
    }
}

struct LabeledImage {
    std::vector<float> pixels;  // [3 x 32 x 32], channel-major, values in [0,1]
    uint8_t label = 0;          // 0 = real, 1 = fake
    Family family = Family::Real;
    uint64_t seed = 0;
};

LabeledImage make_real(uint64_t seed);
// strength scales the entire deviation from the source real image;
// strength 0 returns the real image bit-exactly.
LabeledImage make_fake(uint64_t seed, Family family, float strength = 1.0f);

// Fraction of total pixel energy in the HH band of the single-level Haar
// transform, the quantity the oracle thresholds.
double hh_energy_fraction(const std::vector<float>& pixels);
double highfreq_energy_fraction(const std::vector<float>& pixels);  // LH+HL+HH

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

struct OracleDetector {
    double threshold = 0.0;
    int operator()(const LabeledImage& img) const {
        return hh_energy_fraction(img.pixels) > threshold ? 1 : 0;
    }
};

// Midpoint rule between the mean HH fraction of (up to) 200 training reals
// and 200 gen_A fakes.
OracleDetector calibrate_oracle(const std::vector<LabeledImage>& train_split);
double oracle_accuracy(const OracleDetector& oracle, const std::vector<LabeledImage>& split);

// ---------------------------------------------------------------------------
// perturbations (robustness protocol)
// ---------------------------------------------------------------------------

struct PerturbationConfig {
    bool crop = false;
    bool blur = false;
    bool dct_quantize = false;
    bool noise = false;
    double apply_probability = 0.5;  // per enabled perturbation, independent

    int crop_min = 28, crop_max = 32;  // crop then resize back
    double blur_sigma_min = 0.5, blur_sigma_max = 1.5;
    int quality_min = 30, quality_max = 90;  // 8x8 block-DCT quantization
    double noise_sigma_min = 0.01, noise_sigma_max = 0.05;

    static PerturbationConfig all() {
        PerturbationConfig c;
        c.crop = c.blur = c.dct_quantize = c.noise = true;
        return c;
    }
    bool any() const { return crop || blur || dct_quantize || noise; }
};

// Applies the enabled perturbations in the fixed order crop -> blur ->
// DCT-quantize -> noise, each drawn independently from the per-image seeded
// stream. Label and family are preserved; output stays in [0,1].
LabeledImage perturb(const LabeledImage& img, const PerturbationConfig& cfg, uint64_t seed);

// Pieces reused by training-time augmentation.
std::vector<float> crop_resize(const std::vector<float>& pixels, int size, int ox, int oy);
std::vector<float> hflip(const std::vector<float>& pixels);
std::vector<float> gaussian_blur(const std::vector<float>& pixels, double sigma);
std::vector<float> dct_quantize(const std::vector<float>& pixels, int quality);

// ---------------------------------------------------------------------------
// splits
// ---------------------------------------------------------------------------

struct SeedRange {
    uint64_t start = 0;
    int count = 0;
};

struct DatasetBundle {
    std::vector<LabeledImage> train;       // reals + gen_A fakes
    std::vector<LabeledImage> val;         // reals + gen_A fakes
    std::vector<LabeledImage> test_in;     // unseen seeds, gen_A
    std::vector<LabeledImage> test_cross;  // unseen generator family, gen_B
    uint64_t base_seed = 0;
    float artifact_amplitude = kArtifactAmplitude;
    // ordered group name -> seed range, e.g. "train.real"
    std::map<std::string, SeedRange> ranges;

    const std::vector<LabeledImage>& split(const std::string& name) const;
};

void validate_disjoint(const std::vector<SeedRange>& ranges);

// train/val: 50/50 real vs gen_A; test_in: real vs gen_A on unseen seeds;
// test_cross: real vs gen_B. Seed ranges are pairwise disjoint.
DatasetBundle build_splits(int n_train, int n_val, int n_test, uint64_t base_seed);

// ---------------------------------------------------------------------------
// dataset files: manifest (key-value text) + one binary tensor file per split
// ---------------------------------------------------------------------------

void write_dataset(const std::string& dir, const DatasetBundle& bundle);
DatasetBundle load_dataset(const std::string& dir);

void write_split_file(const std::string& path, const std::vector<LabeledImage>& images);
std::vector<LabeledImage> read_split_file(const std::string& path);

uint64_t fnv1a64(const std::string& bytes);
std::string manifest_text(const DatasetBundle& bundle);
uint64_t manifest_hash(const std::string& dir);

}  // namespace ftf::datagen
