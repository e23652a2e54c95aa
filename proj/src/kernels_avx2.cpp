// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; the dispatcher only hands these out after a runtime
// CPU feature check.

#include "fatformer/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define FTF_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define FTF_HAVE_AVX2_BUILD 0
#endif

#include <cmath>

namespace ftf::kernels {

#if FTF_HAVE_AVX2_BUILD

namespace {

inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
    return _mm_cvtsd_f64(lo);
}

// ---- float ----

void matmul_nn_v(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        float* ci = c + static_cast<long>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float av = a[static_cast<long>(i) * k + p];
            const __m256 va = _mm256_set1_ps(av);
            const float* bp = b + static_cast<long>(p) * n;
            int j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 acc = _mm256_loadu_ps(ci + j);
                acc = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp + j), acc);
                _mm256_storeu_ps(ci + j, acc);
            }
            for (; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_nt_v(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* ai = a + static_cast<long>(i) * k;
        float* ci = c + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* bj = b + static_cast<long>(j) * k;
            __m256 acc = _mm256_setzero_ps();
            int p = 0;
            for (; p + 8 <= k; p += 8)
                acc = _mm256_fmadd_ps(_mm256_loadu_ps(ai + p), _mm256_loadu_ps(bj + p), acc);
            float s = hsum8(acc);
            for (; p < k; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

void matmul_tn_v(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const float* ap = a + static_cast<long>(p) * m;
        const float* bp = b + static_cast<long>(p) * n;
        for (int i = 0; i < m; ++i) {
            const float av = ap[i];
            const __m256 va = _mm256_set1_ps(av);
            float* ci = c + static_cast<long>(i) * n;
            int j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 acc = _mm256_loadu_ps(ci + j);
                acc = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp + j), acc);
                _mm256_storeu_ps(ci + j, acc);
            }
            for (; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void add_v(float* dst, const float* a, const float* b, int n) {
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_v(float* dst, const float* a, const float* b, int n) {
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_v(float* dst, const float* a, const float* b, int n) {
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale_v(float* dst, const float* a, float s, int n) {
    const __m256 vs = _mm256_set1_ps(s);
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(vs, _mm256_loadu_ps(a + i)));
    for (; i < n; ++i) dst[i] = s * a[i];
}

void axpy_v(float* y, float a, const float* x, int n) {
    const __m256 va = _mm256_set1_ps(a);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 acc = _mm256_loadu_ps(y + i);
        acc = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), acc);
        _mm256_storeu_ps(y + i, acc);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void relu_v(float* dst, const float* x, int n) {
    const __m256 zero = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    for (; i < n; ++i) dst[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_v(float* dx, const float* dy, const float* x, int n) {
    const __m256 zero = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        __m256 g = _mm256_and_ps(_mm256_loadu_ps(dy + i), mask);
        _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0f) dx[i] += dy[i];
}

float dot_v(const float* a, const float* b, int n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    int i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    float s = hsum8(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sum_v(const float* x, int n) {
    __m256 acc = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum8(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void adam_v(float* p, const float* g, float* m, float* v, int n,
            float lr, float beta1, float beta2, float eps, float bc1, float bc2) {
    const __m256 vb1 = _mm256_set1_ps(beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2);
    const __m256 v1mb1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 v1mb2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 veps = _mm256_set1_ps(eps);
    const __m256 vibc1 = _mm256_set1_ps(1.0f / bc1);
    const __m256 vibc2 = _mm256_set1_ps(1.0f / bc2);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 gi = _mm256_loadu_ps(g + i);
        __m256 mi = _mm256_fmadd_ps(v1mb1, gi, _mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)));
        __m256 vi = _mm256_fmadd_ps(v1mb2, _mm256_mul_ps(gi, gi),
                                    _mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)));
        _mm256_storeu_ps(m + i, mi);
        _mm256_storeu_ps(v + i, vi);
        __m256 mhat = _mm256_mul_ps(mi, vibc1);
        __m256 vhat = _mm256_mul_ps(vi, vibc2);
        __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
        __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

// ---- double ----

void matmul_nn_vd(double* c, const double* a, const double* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<long>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<long>(i) * k + p];
            const __m256d va = _mm256_set1_pd(av);
            const double* bp = b + static_cast<long>(p) * n;
            int j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d acc = _mm256_loadu_pd(ci + j);
                acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), acc);
                _mm256_storeu_pd(ci + j, acc);
            }
            for (; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_nt_vd(double* c, const double* a, const double* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<long>(i) * k;
        double* ci = c + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<long>(j) * k;
            __m256d acc = _mm256_setzero_pd();
            int p = 0;
            for (; p + 4 <= k; p += 4)
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p), _mm256_loadu_pd(bj + p), acc);
            double s = hsum4(acc);
            for (; p < k; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

void matmul_tn_vd(double* c, const double* a, const double* b, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const double* ap = a + static_cast<long>(p) * m;
        const double* bp = b + static_cast<long>(p) * n;
        for (int i = 0; i < m; ++i) {
            const __m256d va = _mm256_set1_pd(ap[i]);
            double* ci = c + static_cast<long>(i) * n;
            int j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d acc = _mm256_loadu_pd(ci + j);
                acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), acc);
                _mm256_storeu_pd(ci + j, acc);
            }
            for (; j < n; ++j) ci[j] += ap[i] * bp[j];
        }
    }
}

void add_vd(double* dst, const double* a, const double* b, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_vd(double* dst, const double* a, const double* b, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_vd(double* dst, const double* a, const double* b, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale_vd(double* dst, const double* a, double s, int n) {
    const __m256d vs = _mm256_set1_pd(s);
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(vs, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) dst[i] = s * a[i];
}

void axpy_vd(double* y, double a, const double* x, int n) {
    const __m256d va = _mm256_set1_pd(a);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_loadu_pd(y + i);
        acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), acc);
        _mm256_storeu_pd(y + i, acc);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void relu_vd(double* dst, const double* x, int n) {
    const __m256d zero = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_vd(double* dx, const double* dy, const double* x, int n) {
    const __m256d zero = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d g = _mm256_and_pd(_mm256_loadu_pd(dy + i), mask);
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

double dot_vd(const double* a, const double* b, int n) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum4(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_vd(const double* x, int n) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum4(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void adam_vd(double* p, const double* g, double* m, double* v, int n,
             double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
    for (int i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

const Table<float>* avx2_f32() {
    static const Table<float> t = [] {
        Table<float> k;
        k.matmul_nn = &matmul_nn_v;
        k.matmul_nt = &matmul_nt_v;
        k.matmul_tn = &matmul_tn_v;
        k.add = &add_v;
        k.sub = &sub_v;
        k.mul = &mul_v;
        k.scale = &scale_v;
        k.axpy = &axpy_v;
        k.relu = &relu_v;
        k.relu_bwd = &relu_bwd_v;
        k.dot = &dot_v;
        k.sum = &sum_v;
        k.adam = &adam_v;
        return k;
    }();
    return &t;
}

const Table<double>* avx2_f64() {
    static const Table<double> t = [] {
        Table<double> k;
        k.matmul_nn = &matmul_nn_vd;
        k.matmul_nt = &matmul_nt_vd;
        k.matmul_tn = &matmul_tn_vd;
        k.add = &add_vd;
        k.sub = &sub_vd;
        k.mul = &mul_vd;
        k.scale = &scale_vd;
        k.axpy = &axpy_vd;
        k.relu = &relu_vd;
        k.relu_bwd = &relu_bwd_vd;
        k.dot = &dot_vd;
        k.sum = &sum_vd;
        k.adam = &adam_vd;
        return k;
    }();
    return &t;
}

#else  // !FTF_HAVE_AVX2_BUILD

const Table<float>* avx2_f32() { return nullptr; }
const Table<double>* avx2_f64() { return nullptr; }

#endif

}  // namespace ftf::kernels
