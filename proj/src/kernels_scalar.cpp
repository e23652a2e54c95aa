#include "fatformer/kernels.hpp"

#include <cmath>

namespace ftf::kernels {
namespace {

template <typename T>
void matmul_nn_s(T* c, const T* a, const T* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        T* ci = c + static_cast<long>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = a[static_cast<long>(i) * k + p];
            const T* bp = b + static_cast<long>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

template <typename T>
void matmul_nt_s(T* c, const T* a, const T* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* ai = a + static_cast<long>(i) * k;
        T* ci = c + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* bj = b + static_cast<long>(j) * k;
            T acc = 0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

template <typename T>
void matmul_tn_s(T* c, const T* a, const T* b, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const T* ap = a + static_cast<long>(p) * m;
        const T* bp = b + static_cast<long>(p) * n;
        for (int i = 0; i < m; ++i) {
            const T av = ap[i];
            T* ci = c + static_cast<long>(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

template <typename T>
void add_s(T* dst, const T* a, const T* b, int n) {
    for (int i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

template <typename T>
void sub_s(T* dst, const T* a, const T* b, int n) {
    for (int i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

template <typename T>
void mul_s(T* dst, const T* a, const T* b, int n) {
    for (int i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

template <typename T>
void scale_s(T* dst, const T* a, T s, int n) {
    for (int i = 0; i < n; ++i) dst[i] = s * a[i];
}

template <typename T>
void axpy_s(T* y, T a, const T* x, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void relu_s(T* dst, const T* x, int n) {
    for (int i = 0; i < n; ++i) dst[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd_s(T* dx, const T* dy, const T* x, int n) {
    for (int i = 0; i < n; ++i)
        if (x[i] > T(0)) dx[i] += dy[i];
}

template <typename T>
T dot_s(const T* a, const T* b, int n) {
    T acc = 0;
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
T sum_s(const T* x, int n) {
    T acc = 0;
    for (int i = 0; i < n; ++i) acc += x[i];
    return acc;
}

template <typename T>
void adam_s(T* p, const T* g, T* m, T* v, int n,
            T lr, T beta1, T beta2, T eps, T bc1, T bc2) {
    for (int i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

template <typename T>
Table<T> make_scalar_table() {
    Table<T> t;
    t.matmul_nn = &matmul_nn_s<T>;
    t.matmul_nt = &matmul_nt_s<T>;
    t.matmul_tn = &matmul_tn_s<T>;
    t.add = &add_s<T>;
    t.sub = &sub_s<T>;
    t.mul = &mul_s<T>;
    t.scale = &scale_s<T>;
    t.axpy = &axpy_s<T>;
    t.relu = &relu_s<T>;
    t.relu_bwd = &relu_bwd_s<T>;
    t.dot = &dot_s<T>;
    t.sum = &sum_s<T>;
    t.adam = &adam_s<T>;
    return t;
}

}  // namespace

const Table<float>& scalar_f32() {
    static const Table<float> t = make_scalar_table<float>();
    return t;
}

const Table<double>& scalar_f64() {
    static const Table<double> t = make_scalar_table<double>();
    return t;
}

}  // namespace ftf::kernels
