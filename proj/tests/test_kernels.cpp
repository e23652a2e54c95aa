#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fatformer/kernels.hpp"
#include "fatformer/rng.hpp"

using namespace ftf;

namespace {

// Independent triple-loop reference used to pin down every matmul kernel.
template <typename T>
void matmul_oracle(std::vector<T>& c, const std::vector<T>& a, const std::vector<T>& b, int m,
                   int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            T acc = 0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] += acc;
        }
}

template <typename T>
std::vector<T> random_vec(Rng& rng, int n, double s = 1.0) {
    std::vector<T> v(static_cast<size_t>(n));
    for (auto& x : v) x = static_cast<T>(rng.gaussian() * s);
    return v;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

}  // namespace

TEST_CASE("matmul identity and zero") {
    const auto& K = kernels::active_f32();
    std::vector<float> a = {1, 2, 3, 4};
    std::vector<float> eye = {1, 0, 0, 1};
    std::vector<float> c(4, 0.0f);
    K.matmul_nn(c.data(), a.data(), eye.data(), 2, 2, 2);
    CHECK(c == a);

    std::vector<float> zero(4, 0.0f), c2(4, 0.0f);
    K.matmul_nn(c2.data(), a.data(), zero.data(), 2, 2, 2);
    for (float x : c2) CHECK(x == 0.0f);
}

TEST_CASE("matmul matches triple-loop oracle for all shapes up to 8x8x8") {
    const auto& K = kernels::active_f32();
    Rng rng(7);
    for (int m = 1; m <= 8; ++m)
        for (int k = 1; k <= 8; ++k)
            for (int n = 1; n <= 8; ++n) {
                auto a = random_vec<float>(rng, m * k);
                auto b = random_vec<float>(rng, k * n);
                std::vector<float> got(static_cast<size_t>(m) * n, 0.0f);
                std::vector<float> want(static_cast<size_t>(m) * n, 0.0f);
                K.matmul_nn(got.data(), a.data(), b.data(), m, k, n);
                matmul_oracle(want, a, b, m, k, n);
                for (size_t i = 0; i < got.size(); ++i) {
                    const double denom = std::max(1.0, std::abs(static_cast<double>(want[i])));
                    CHECK(std::abs(got[i] - want[i]) / denom < 1e-6);
                }
            }
}

TEST_CASE("random 3x4 * 4x2 matches oracle elementwise") {
    const auto& K = kernels::active_f32();
    Rng rng(11);
    auto a = random_vec<float>(rng, 12);
    auto b = random_vec<float>(rng, 8);
    std::vector<float> got(6, 0.0f), want(6, 0.0f);
    K.matmul_nn(got.data(), a.data(), b.data(), 3, 4, 2);
    matmul_oracle(want, a, b, 3, 4, 2);
    CHECK(max_abs_diff(got, want) < 1e-6);
}

TEST_CASE("matmul_nt and matmul_tn agree with transposed oracle") {
    const auto& K = kernels::active_f32();
    Rng rng(13);
    const int m = 5, k = 7, n = 3;
    auto a = random_vec<float>(rng, m * k);
    auto bt = random_vec<float>(rng, n * k);  // [n x k]
    // build B = bt^T
    std::vector<float> b(static_cast<size_t>(k) * n);
    for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j) b[p * n + j] = bt[j * k + p];
    std::vector<float> got(static_cast<size_t>(m) * n, 0.0f);
    std::vector<float> want(static_cast<size_t>(m) * n, 0.0f);
    K.matmul_nt(got.data(), a.data(), bt.data(), m, k, n);
    matmul_oracle(want, a, b, m, k, n);
    CHECK(max_abs_diff(got, want) < 1e-5);

    auto at = random_vec<float>(rng, k * m);  // [k x m]
    std::vector<float> a2(static_cast<size_t>(m) * k);
    for (int p = 0; p < k; ++p)
        for (int i = 0; i < m; ++i) a2[i * k + p] = at[p * m + i];
    std::fill(got.begin(), got.end(), 0.0f);
    std::fill(want.begin(), want.end(), 0.0f);
    K.matmul_tn(got.data(), at.data(), b.data(), m, k, n);
    matmul_oracle(want, a2, b, m, k, n);
    CHECK(max_abs_diff(got, want) < 1e-5);
}

TEST_CASE("scalar and dispatched tables agree on every kernel") {
    const auto& S = kernels::scalar_f32();
    const auto& A = kernels::active_f32();
    INFO("active backend: ", kernels::active_name());
    Rng rng(29);
    // sizes chosen to cover vector width remainders
    for (int n : {1, 2, 3, 7, 8, 9, 15, 16, 17, 33, 64, 100}) {
        auto x = random_vec<float>(rng, n);
        auto y = random_vec<float>(rng, n);
        std::vector<float> r1(static_cast<size_t>(n)), r2(static_cast<size_t>(n));

        S.add(r1.data(), x.data(), y.data(), n);
        A.add(r2.data(), x.data(), y.data(), n);
        CHECK(max_abs_diff(r1, r2) == 0.0);

        S.sub(r1.data(), x.data(), y.data(), n);
        A.sub(r2.data(), x.data(), y.data(), n);
        CHECK(max_abs_diff(r1, r2) == 0.0);

        S.mul(r1.data(), x.data(), y.data(), n);
        A.mul(r2.data(), x.data(), y.data(), n);
        CHECK(max_abs_diff(r1, r2) == 0.0);

        S.scale(r1.data(), x.data(), 1.7f, n);
        A.scale(r2.data(), x.data(), 1.7f, n);
        CHECK(max_abs_diff(r1, r2) == 0.0);

        S.relu(r1.data(), x.data(), n);
        A.relu(r2.data(), x.data(), n);
        CHECK(max_abs_diff(r1, r2) == 0.0);

        r1 = y;
        r2 = y;
        S.axpy(r1.data(), 0.3f, x.data(), n);
        A.axpy(r2.data(), 0.3f, x.data(), n);
        CHECK(max_abs_diff(r1, r2) < 1e-6);

        r1.assign(static_cast<size_t>(n), 0.5f);
        r2.assign(static_cast<size_t>(n), 0.5f);
        S.relu_bwd(r1.data(), y.data(), x.data(), n);
        A.relu_bwd(r2.data(), y.data(), x.data(), n);
        CHECK(max_abs_diff(r1, r2) == 0.0);

        CHECK(std::abs(S.dot(x.data(), y.data(), n) - A.dot(x.data(), y.data(), n)) <
              1e-4 * (1.0 + std::abs(S.dot(x.data(), y.data(), n))));
        CHECK(std::abs(S.sum(x.data(), n) - A.sum(x.data(), n)) < 1e-4);
    }

    for (auto [m, k, n] : {std::tuple{1, 1, 1}, {3, 4, 2}, {5, 9, 7}, {8, 8, 8}, {13, 17, 11}}) {
        auto a = random_vec<float>(rng, m * k);
        auto b = random_vec<float>(rng, k * n);
        auto bt = random_vec<float>(rng, n * k);
        auto at = random_vec<float>(rng, k * m);
        std::vector<float> r1(static_cast<size_t>(m) * n, 0.0f), r2(r1);
        S.matmul_nn(r1.data(), a.data(), b.data(), m, k, n);
        A.matmul_nn(r2.data(), a.data(), b.data(), m, k, n);
        CHECK(max_abs_diff(r1, r2) < 1e-5);

        std::fill(r1.begin(), r1.end(), 0.0f);
        std::fill(r2.begin(), r2.end(), 0.0f);
        S.matmul_nt(r1.data(), a.data(), bt.data(), m, k, n);
        A.matmul_nt(r2.data(), a.data(), bt.data(), m, k, n);
        CHECK(max_abs_diff(r1, r2) < 1e-5);

        std::fill(r1.begin(), r1.end(), 0.0f);
        std::fill(r2.begin(), r2.end(), 0.0f);
        S.matmul_tn(r1.data(), at.data(), b.data(), m, k, n);
        A.matmul_tn(r2.data(), at.data(), b.data(), m, k, n);
        CHECK(max_abs_diff(r1, r2) < 1e-5);
    }
}

TEST_CASE("scalar and dispatched f64 tables agree") {
    const auto& S = kernels::scalar_f64();
    const auto& A = kernels::active_f64();
    Rng rng(31);
    for (int n : {1, 3, 4, 5, 8, 13, 64}) {
        auto x = random_vec<double>(rng, n);
        auto y = random_vec<double>(rng, n);
        CHECK(std::abs(S.dot(x.data(), y.data(), n) - A.dot(x.data(), y.data(), n)) < 1e-12);
        std::vector<double> r1(static_cast<size_t>(n)), r2(static_cast<size_t>(n));
        S.add(r1.data(), x.data(), y.data(), n);
        A.add(r2.data(), x.data(), y.data(), n);
        CHECK(max_abs_diff(r1, r2) == 0.0);
    }
    const int m = 6, k = 10, n = 4;
    auto a = random_vec<double>(rng, m * k);
    auto b = random_vec<double>(rng, k * n);
    std::vector<double> r1(static_cast<size_t>(m) * n, 0.0), r2(r1);
    S.matmul_nn(r1.data(), a.data(), b.data(), m, k, n);
    A.matmul_nn(r2.data(), a.data(), b.data(), m, k, n);
    CHECK(max_abs_diff(r1, r2) < 1e-12);
}

TEST_CASE("adam hand-derived first step") {
    // single scalar, g = 1, lr = 0.1: mhat = 1, vhat = 1, step = -lr/(1+eps)
    const auto& K = kernels::active_f32();
    float p = 0.5f, g = 1.0f, m = 0.0f, v = 0.0f;
    const float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f, lr = 0.1f;
    K.adam(&p, &g, &m, &v, 1, lr, b1, b2, eps, 1.0f - b1, 1.0f - b2);
    CHECK(p == doctest::Approx(0.5f - 0.1f).epsilon(1e-5));
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    const auto& K = kernels::active_f32();
    std::vector<float> p = {1.0f, -2.0f, 3.0f};
    std::vector<float> g(3, 0.0f), m(3, 0.0f), v(3, 0.0f);
    std::vector<float> before = p;
    K.adam(p.data(), g.data(), m.data(), v.data(), 3, 0.1f, 0.9f, 0.999f, 1e-8f, 0.1f, 0.001f);
    CHECK(p == before);
}

TEST_CASE("adam constant gradient approaches lr-sized signed steps") {
    const auto& K = kernels::scalar_f64();
    double p = 0.0, m = 0.0, v = 0.0;
    const double g = 0.37, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double prev = p;
    double last_step = 0.0;
    for (int t = 1; t <= 2000; ++t) {
        K.adam(&p, &g, &m, &v, 1, lr, b1, b2, eps, 1.0 - std::pow(b1, t), 1.0 - std::pow(b2, t));
        last_step = prev - p;
        prev = p;
    }
    // m/sqrt(v) -> sign(g) for constant gradients
    CHECK(last_step == doctest::Approx(lr).epsilon(1e-3));
}
