#include "fatformer/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fatformer/tensor.hpp"
#include "fatformer/wavelet.hpp"

namespace ftf::datagen {
namespace {

constexpr int kSide = kImageSize;

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

// circular separable Gaussian blur on one channel
void blur_channel(std::vector<float>& ch, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(static_cast<size_t>(2 * radius + 1));
    double s = 0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[static_cast<size_t>(i + radius)] = static_cast<float>(w);
        s += w;
    }
    for (auto& w : kernel) w = static_cast<float>(w / s);

    std::vector<float> tmp(ch.size());
    // rows
    for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
            float acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                const int sx = ((x + i) % kSide + kSide) % kSide;
                acc += kernel[static_cast<size_t>(i + radius)] * ch[static_cast<size_t>(y * kSide + sx)];
            }
            tmp[static_cast<size_t>(y * kSide + x)] = acc;
        }
    // columns
    for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
            float acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                const int sy = ((y + i) % kSide + kSide) % kSide;
                acc += kernel[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(sy * kSide + x)];
            }
            ch[static_cast<size_t>(y * kSide + x)] = acc;
        }
}

// JPEG luminance quantization table, applied to every channel
constexpr std::array<int, 64> kQuantBase = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// orthonormal 8x8 DCT-II basis
const std::array<double, 64>& dct_basis() {
    static const std::array<double, 64> c = [] {
        std::array<double, 64> m{};
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x) {
                const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                m[static_cast<size_t>(u * 8 + x)] =
                    a * std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0);
            }
        return m;
    }();
    return c;
}

void u16_write(std::ostream& os, uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                                static_cast<unsigned char>((v >> 8) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void u32_write(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void f32_write(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32_write(os, bits);
}

uint16_t u16_read(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    if (!is) throw IoError("split file: truncated header");
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t u32_read(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("split file: truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

float f32_read(std::istream& is) {
    const uint32_t bits = u32_read(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::vector<LabeledImage> make_group(uint64_t start, int count, Family family) {
    std::vector<LabeledImage> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        const uint64_t seed = start + static_cast<uint64_t>(i);
        out.push_back(family == Family::Real ? make_real(seed) : make_fake(seed, family));
    }
    return out;
}

}  // namespace

LabeledImage make_real(uint64_t seed) {
    LabeledImage img;
    img.label = 0;
    img.family = Family::Real;
    img.seed = seed;
    img.pixels.resize(kPixelCount);
    Rng rng(Rng::derive(seed, {0xDA7A, 0x0}));
    for (int c = 0; c < kChannels; ++c) {
        std::vector<float> ch(static_cast<size_t>(kSide * kSide));
        for (auto& v : ch) v = static_cast<float>(rng.gaussian());
        blur_channel(ch, kRealBlurSigma);
        // affine min-max normalization to [0,1] per channel
        float lo = ch[0], hi = ch[0];
        for (float v : ch) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const float scale = hi > lo ? 1.0f / (hi - lo) : 0.0f;
        for (int i = 0; i < kSide * kSide; ++i)
            img.pixels[static_cast<size_t>(c * kSide * kSide + i)] = (ch[static_cast<size_t>(i)] - lo) * scale;
    }
    return img;
}

LabeledImage make_fake(uint64_t seed, Family family, float strength) {
    if (family != Family::GenA && family != Family::GenB)
        throw ParamError("make_fake: unknown generator family");
    LabeledImage img = make_real(seed);
    img.label = 1;
    img.family = family;

    // gen_A resamples on a 2-px grid, gen_B on a 4-px grid; both inject the
    // pipeline's fixed 2-px checkerboard (the shared upsampler signature),
    // and gen_B adds a mild per-channel color-gain mismatch.
    const int period = family == Family::GenA ? 2 : 4;
    const int hs = kSide / period;
    for (int c = 0; c < kChannels; ++c) {
        const float* src = img.pixels.data() + c * kSide * kSide;
        // block-average downsample, nearest-neighbor upsample
        std::vector<float> low(static_cast<size_t>(hs * hs), 0.0f);
        for (int y = 0; y < kSide; ++y)
            for (int x = 0; x < kSide; ++x)
                low[static_cast<size_t>((y / period) * hs + x / period)] +=
                    src[y * kSide + x] / static_cast<float>(period * period);

        const float gain = family == Family::GenB
                               ? (c == 0 ? 0.03f : (c == 1 ? -0.03f : 0.0f))
                               : 0.0f;
        float* dst = img.pixels.data() + c * kSide * kSide;
        for (int y = 0; y < kSide; ++y) {
            for (int x = 0; x < kSide; ++x) {
                const float real_v = src[y * kSide + x];
                const float blocky = low[static_cast<size_t>((y / period) * hs + x / period)];
                const float checker = ((x + y) % 2 == 0) ? 1.0f : -1.0f;
                float v = real_v + strength * (kResampleBlend * (blocky - real_v) +
                                               kArtifactAmplitude * checker);
                v *= 1.0f + strength * gain;
                dst[y * kSide + x] = clamp01(v);
            }
        }
    }
    return img;
}

double hh_energy_fraction(const std::vector<float>& pixels) {
    NoGrad off;
    // channels-last grid for the wavelet module
    Tensor grid = Tensor::zeros({kSide, kSide, kChannels});
    for (int c = 0; c < kChannels; ++c)
        for (int i = 0; i < kSide * kSide; ++i)
            (*grid.data)[static_cast<size_t>(i) * kChannels + c] =
                pixels[static_cast<size_t>(c * kSide * kSide + i)];
    auto hh = dwt_band(grid, Band::HH);
    const double total = energy(grid);
    return total > 0 ? energy(hh) / total : 0.0;
}

double highfreq_energy_fraction(const std::vector<float>& pixels) {
    NoGrad off;
    Tensor grid = Tensor::zeros({kSide, kSide, kChannels});
    for (int c = 0; c < kChannels; ++c)
        for (int i = 0; i < kSide * kSide; ++i)
            (*grid.data)[static_cast<size_t>(i) * kChannels + c] =
                pixels[static_cast<size_t>(c * kSide * kSide + i)];
    auto bands = dwt2d(grid);
    const double total = energy(grid);
    const double hf = energy(bands.lh) + energy(bands.hl) + energy(bands.hh);
    return total > 0 ? hf / total : 0.0;
}

OracleDetector calibrate_oracle(const std::vector<LabeledImage>& train_split) {
    double real_sum = 0, fake_sum = 0;
    int real_n = 0, fake_n = 0;
    for (const auto& img : train_split) {
        if (img.label == 0 && real_n < 200) {
            real_sum += hh_energy_fraction(img.pixels);
            ++real_n;
        } else if (img.label == 1 && img.family == Family::GenA && fake_n < 200) {
            fake_sum += hh_energy_fraction(img.pixels);
            ++fake_n;
        }
    }
    if (real_n == 0 || fake_n == 0)
        throw DataError("oracle calibration needs both real and gen_A training images");
    OracleDetector d;
    d.threshold = 0.5 * (real_sum / real_n + fake_sum / fake_n);
    return d;
}

double oracle_accuracy(const OracleDetector& oracle, const std::vector<LabeledImage>& split) {
    if (split.empty()) throw DataError("oracle_accuracy: empty split");
    int correct = 0;
    for (const auto& img : split)
        if (oracle(img) == static_cast<int>(img.label)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

std::vector<float> crop_resize(const std::vector<float>& pixels, int size, int ox, int oy) {
    if (size < 1 || size > kSide || ox < 0 || oy < 0 || ox + size > kSide || oy + size > kSide)
        throw ParamError("crop_resize: invalid crop window");
    if (size == kSide) return pixels;
    std::vector<float> out(static_cast<size_t>(kPixelCount));
    const double scale = static_cast<double>(size) / kSide;
    for (int c = 0; c < kChannels; ++c) {
        const float* src = pixels.data() + c * kSide * kSide;
        float* dst = out.data() + c * kSide * kSide;
        for (int y = 0; y < kSide; ++y) {
            const double sy = (y + 0.5) * scale - 0.5 + oy;
            const int y0 = std::clamp(static_cast<int>(std::floor(sy)), oy, oy + size - 1);
            const int y1 = std::min(y0 + 1, oy + size - 1);
            const double fy = std::clamp(sy - y0, 0.0, 1.0);
            for (int x = 0; x < kSide; ++x) {
                const double sx = (x + 0.5) * scale - 0.5 + ox;
                const int x0 = std::clamp(static_cast<int>(std::floor(sx)), ox, ox + size - 1);
                const int x1 = std::min(x0 + 1, ox + size - 1);
                const double fx = std::clamp(sx - x0, 0.0, 1.0);
                const double v = (1 - fy) * ((1 - fx) * src[y0 * kSide + x0] + fx * src[y0 * kSide + x1]) +
                                 fy * ((1 - fx) * src[y1 * kSide + x0] + fx * src[y1 * kSide + x1]);
                dst[y * kSide + x] = clamp01(static_cast<float>(v));
            }
        }
    }
    return out;
}

std::vector<float> hflip(const std::vector<float>& pixels) {
    std::vector<float> out(static_cast<size_t>(kPixelCount));
    for (int c = 0; c < kChannels; ++c)
        for (int y = 0; y < kSide; ++y)
            for (int x = 0; x < kSide; ++x)
                out[static_cast<size_t>(c * kSide * kSide + y * kSide + x)] =
                    pixels[static_cast<size_t>(c * kSide * kSide + y * kSide + (kSide - 1 - x))];
    return out;
}

std::vector<float> gaussian_blur(const std::vector<float>& pixels, double sigma) {
    std::vector<float> out = pixels;
    for (int c = 0; c < kChannels; ++c) {
        std::vector<float> ch(out.begin() + c * kSide * kSide, out.begin() + (c + 1) * kSide * kSide);
        blur_channel(ch, sigma);
        for (int i = 0; i < kSide * kSide; ++i)
            out[static_cast<size_t>(c * kSide * kSide + i)] = clamp01(ch[static_cast<size_t>(i)]);
    }
    return out;
}

std::vector<float> dct_quantize(const std::vector<float>& pixels, int quality) {
    if (quality < 1 || quality > 100) throw ParamError("dct_quantize: quality out of range");
    const double s = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    std::array<double, 64> qt;
    for (int i = 0; i < 64; ++i)
        qt[static_cast<size_t>(i)] =
            std::clamp(std::floor((kQuantBase[static_cast<size_t>(i)] * s + 50.0) / 100.0), 1.0, 255.0);

    const auto& dct = dct_basis();
    std::vector<float> out(static_cast<size_t>(kPixelCount));
    for (int c = 0; c < kChannels; ++c) {
        const float* src = pixels.data() + c * kSide * kSide;
        float* dst = out.data() + c * kSide * kSide;
        for (int by = 0; by < kSide; by += 8) {
            for (int bx = 0; bx < kSide; bx += 8) {
                double block[64], tmp[64], coef[64];
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        block[y * 8 + x] = src[(by + y) * kSide + bx + x] * 255.0 - 128.0;
                // coef = C * block * C^T
                for (int u = 0; u < 8; ++u)
                    for (int x = 0; x < 8; ++x) {
                        double acc = 0;
                        for (int y = 0; y < 8; ++y) acc += dct[static_cast<size_t>(u * 8 + y)] * block[y * 8 + x];
                        tmp[u * 8 + x] = acc;
                    }
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v) {
                        double acc = 0;
                        for (int x = 0; x < 8; ++x) acc += tmp[u * 8 + x] * dct[static_cast<size_t>(v * 8 + x)];
                        coef[u * 8 + v] = acc;
                    }
                for (int i = 0; i < 64; ++i)
                    coef[i] = std::round(coef[i] / qt[static_cast<size_t>(i)]) * qt[static_cast<size_t>(i)];
                // block = C^T * coef * C
                for (int y = 0; y < 8; ++y)
                    for (int v = 0; v < 8; ++v) {
                        double acc = 0;
                        for (int u = 0; u < 8; ++u) acc += dct[static_cast<size_t>(u * 8 + y)] * coef[u * 8 + v];
                        tmp[y * 8 + v] = acc;
                    }
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        double acc = 0;
                        for (int v = 0; v < 8; ++v) acc += tmp[y * 8 + v] * dct[static_cast<size_t>(v * 8 + x)];
                        dst[(by + y) * kSide + bx + x] = clamp01(static_cast<float>((acc + 128.0) / 255.0));
                    }
            }
        }
    }
    return out;
}

LabeledImage perturb(const LabeledImage& img, const PerturbationConfig& cfg, uint64_t seed) {
    LabeledImage out = img;
    Rng rng(Rng::derive(seed, {0x9E27, img.seed}));
    if (cfg.crop && rng.uniform() < cfg.apply_probability) {
        const int size = rng.uniform_int(cfg.crop_min, cfg.crop_max);
        const int ox = size < kSide ? rng.uniform_int(0, kSide - size) : 0;
        const int oy = size < kSide ? rng.uniform_int(0, kSide - size) : 0;
        out.pixels = crop_resize(out.pixels, size, ox, oy);
    }
    if (cfg.blur && rng.uniform() < cfg.apply_probability) {
        const double sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
        out.pixels = gaussian_blur(out.pixels, sigma);
    }
    if (cfg.dct_quantize && rng.uniform() < cfg.apply_probability) {
        const int quality = rng.uniform_int(cfg.quality_min, cfg.quality_max);
        out.pixels = dct_quantize(out.pixels, quality);
    }
    if (cfg.noise && rng.uniform() < cfg.apply_probability) {
        const double sigma = rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max);
        for (auto& v : out.pixels)
            v = clamp01(v + static_cast<float>(sigma * rng.gaussian()));
    }
    return out;
}

const std::vector<LabeledImage>& DatasetBundle::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "in" || name == "test_in") return test_in;
    if (name == "cross" || name == "test_cross") return test_cross;
    throw ParamError("unknown split: " + name);
}

void validate_disjoint(const std::vector<SeedRange>& ranges) {
    for (size_t i = 0; i < ranges.size(); ++i)
        for (size_t j = i + 1; j < ranges.size(); ++j) {
            const auto& a = ranges[i];
            const auto& b = ranges[j];
            const uint64_t a_end = a.start + static_cast<uint64_t>(a.count);
            const uint64_t b_end = b.start + static_cast<uint64_t>(b.count);
            if (a.start < b_end && b.start < a_end)
                throw ConfigError("overlapping seed ranges [" + std::to_string(a.start) + "," +
                                  std::to_string(a_end) + ") and [" + std::to_string(b.start) +
                                  "," + std::to_string(b_end) + ")");
        }
}

DatasetBundle build_splits(int n_train, int n_val, int n_test, uint64_t base_seed) {
    if (n_train <= 0 || n_val <= 0 || n_test <= 0)
        throw ConfigError("split counts must be positive");
    if (n_train % 2 || n_val % 2 || n_test % 2)
        throw ConfigError("split counts must be even for 50/50 class balance");

    DatasetBundle b;
    b.base_seed = base_seed;
    uint64_t cursor = base_seed * 1000003ULL + 1;
    auto take = [&cursor](int count) {
        SeedRange r{cursor, count};
        cursor += static_cast<uint64_t>(count);
        return r;
    };
    b.ranges["train.real"] = take(n_train / 2);
    b.ranges["train.fake_gen_A"] = take(n_train / 2);
    b.ranges["val.real"] = take(n_val / 2);
    b.ranges["val.fake_gen_A"] = take(n_val / 2);
    b.ranges["test_in.real"] = take(n_test / 2);
    b.ranges["test_in.fake_gen_A"] = take(n_test / 2);
    b.ranges["test_cross.real"] = take(n_test / 2);
    b.ranges["test_cross.fake_gen_B"] = take(n_test / 2);

    std::vector<SeedRange> all;
    for (const auto& [k, r] : b.ranges) all.push_back(r);
    validate_disjoint(all);

    auto fill = [&](std::vector<LabeledImage>& split, const std::string& prefix, Family fake_family) {
        auto reals = make_group(b.ranges[prefix + ".real"].start, b.ranges[prefix + ".real"].count,
                                Family::Real);
        const std::string fake_key = prefix + ".fake_" + std::string(to_string(fake_family));
        auto fakes = make_group(b.ranges[fake_key].start, b.ranges[fake_key].count, fake_family);
        split.insert(split.end(), reals.begin(), reals.end());
        split.insert(split.end(), fakes.begin(), fakes.end());
    };
    fill(b.train, "train", Family::GenA);
    fill(b.val, "val", Family::GenA);
    fill(b.test_in, "test_in", Family::GenA);
    fill(b.test_cross, "test_cross", Family::GenB);
    return b;
}

void write_split_file(const std::string& path, const std::vector<LabeledImage>& images) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write("FTFD", 4);
    u16_write(os, 1);
    u32_write(os, static_cast<uint32_t>(images.size()));
    for (const auto& img : images) {
        os.put(static_cast<char>(img.label));
        os.put(static_cast<char>(img.family));
        for (float v : img.pixels) f32_write(os, v);
    }
    if (!os) throw IoError("write failed: " + path);
}

std::vector<LabeledImage> read_split_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FTFD", 4) != 0)
        throw IoError("bad magic in " + path);
    const uint16_t version = u16_read(is);
    if (version != 1) throw IoError("unsupported split format version " + std::to_string(version));
    const uint32_t count = u32_read(is);
    std::vector<LabeledImage> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        LabeledImage img;
        const int label = is.get();
        const int family = is.get();
        if (label < 0 || family < 0)
            throw IoError("truncated split file at image " + std::to_string(i));
        img.label = static_cast<uint8_t>(label);
        img.family = static_cast<Family>(family);
        img.pixels.resize(kPixelCount);
        for (auto& v : img.pixels) v = f32_read(is);
        out.push_back(std::move(img));
    }
    return out;
}

std::string manifest_text(const DatasetBundle& b) {
    std::ostringstream os;
    os << "format_version = 1\n";
    os << "base_seed = " << b.base_seed << "\n";
    os << "artifact_amplitude = " << b.artifact_amplitude << "\n";
    os << "train_count = " << b.train.size() << "\n";
    os << "val_count = " << b.val.size() << "\n";
    os << "test_in_count = " << b.test_in.size() << "\n";
    os << "test_cross_count = " << b.test_cross.size() << "\n";
    for (const auto& [name, r] : b.ranges)
        os << "seed_range." << name << " = " << r.start << ":" << r.count << "\n";
    return os.str();
}

void write_dataset(const std::string& dir, const DatasetBundle& b) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream mf(dir + "/manifest.txt");
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest_text(b);
    mf.close();
    write_split_file(dir + "/train.ftfd", b.train);
    write_split_file(dir + "/val.ftfd", b.val);
    write_split_file(dir + "/test_in.ftfd", b.test_in);
    write_split_file(dir + "/test_cross.ftfd", b.test_cross);
}

DatasetBundle load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.txt");
    if (!mf) throw IoError("cannot read manifest in " + dir);
    DatasetBundle b;
    std::string line;
    while (std::getline(mf, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
        };
        trim(key);
        trim(value);
        if (key == "base_seed") b.base_seed = std::stoull(value);
        if (key == "artifact_amplitude") b.artifact_amplitude = std::stof(value);
        if (key.rfind("seed_range.", 0) == 0) {
            const auto colon = value.find(':');
            if (colon == std::string::npos) throw IoError("bad seed range: " + line);
            b.ranges[key.substr(11)] =
                SeedRange{std::stoull(value.substr(0, colon)), std::stoi(value.substr(colon + 1))};
        }
    }
    b.train = read_split_file(dir + "/train.ftfd");
    b.val = read_split_file(dir + "/val.ftfd");
    b.test_in = read_split_file(dir + "/test_in.ftfd");
    b.test_cross = read_split_file(dir + "/test_cross.ftfd");

    // reconstruct generation seeds from the manifest ranges (split files hold
    // reals first, then fakes)
    auto assign = [&](std::vector<LabeledImage>& split, const std::string& prefix) {
        size_t idx = 0;
        auto assign_range = [&](const std::string& name) {
            const auto it = b.ranges.find(name);
            if (it == b.ranges.end()) return;
            for (int i = 0; i < it->second.count && idx < split.size(); ++i, ++idx)
                split[idx].seed = it->second.start + static_cast<uint64_t>(i);
        };
        assign_range(prefix + ".real");
        for (const auto& [name, r] : b.ranges)
            if (name.rfind(prefix + ".fake", 0) == 0) assign_range(name);
    };
    assign(b.train, "train");
    assign(b.val, "val");
    assign(b.test_in, "test_in");
    assign(b.test_cross, "test_cross");
    return b;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t manifest_hash(const std::string& dir) {
    std::ifstream is(dir + "/manifest.txt", std::ios::binary);
    if (!is) throw IoError("cannot read manifest in " + dir);
    std::ostringstream buf;
    buf << is.rdbuf();
    return fnv1a64(buf.str());
}

}  // namespace ftf::datagen
