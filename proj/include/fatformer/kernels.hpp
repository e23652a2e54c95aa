#pragma once

// Dense arithmetic kernels behind the tensor engine. Scalar reference
// implementations are the ground truth; an AVX2+FMA variant is selected at
// runtime when the CPU supports it and is equivalence-tested against the
// scalar path. Set FATFORMER_KERNELS=scalar to force the reference kernels.

namespace ftf::kernels {

// All matmul variants accumulate into C (callers zero-fill when needed).
//   matmul_nn: C[m x n] += A[m x k] * B[k x n]
//   matmul_nt: C[m x n] += A[m x k] * B[n x k]^T
//   matmul_tn: C[m x n] += A[k x m]^T * B[k x n]
template <typename T>
struct Table {
    void (*matmul_nn)(T* c, const T* a, const T* b, int m, int k, int n);
    void (*matmul_nt)(T* c, const T* a, const T* b, int m, int k, int n);
    void (*matmul_tn)(T* c, const T* a, const T* b, int m, int k, int n);

    void (*add)(T* dst, const T* a, const T* b, int n);    // dst = a + b
    void (*sub)(T* dst, const T* a, const T* b, int n);    // dst = a - b
    void (*mul)(T* dst, const T* a, const T* b, int n);    // dst = a * b
    void (*scale)(T* dst, const T* a, T s, int n);         // dst = s * a
    void (*axpy)(T* y, T a, const T* x, int n);            // y += a * x
    void (*relu)(T* dst, const T* x, int n);               // dst = max(x, 0)
    void (*relu_bwd)(T* dx, const T* dy, const T* x, int n);  // dx += dy * [x > 0]

    T (*dot)(const T* a, const T* b, int n);
    T (*sum)(const T* x, int n);

    // In-place Adam update for one parameter buffer. bc1/bc2 are the
    // bias-correction terms 1 - beta^t.
    void (*adam)(T* p, const T* g, T* m, T* v, int n,
                 T lr, T beta1, T beta2, T eps, T bc1, T bc2);
};

const Table<float>& scalar_f32();
const Table<double>& scalar_f64();

// Null when the CPU (or build) lacks AVX2+FMA.
const Table<float>* avx2_f32();
const Table<double>* avx2_f64();

// Runtime-dispatched tables used by the tensor engine.
const Table<float>& active_f32();
const Table<double>& active_f64();
const char* active_name();

template <typename T>
const Table<T>& active();

template <>
inline const Table<float>& active<float>() { return active_f32(); }
template <>
inline const Table<double>& active<double>() { return active_f64(); }

}  // namespace ftf::kernels
