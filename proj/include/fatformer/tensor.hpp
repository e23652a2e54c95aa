#pragma once

// Dense row-major tensor with define-by-run reverse-mode differentiation.
// The graph is rebuilt on every forward pass: each op that needs gradients
// attaches a node holding its parents and a backprop closure. backward()
// replays nodes in reverse topological order and accumulates (never
// overwrites) gradients, so summed losses and repeated backward calls
// compose linearly.
//
// Single-threaded contract: a tensor is immutable after construction except
// through the optimizer, and one graph is owned by one thread.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "fatformer/errors.hpp"
#include "fatformer/kernels.hpp"
#include "fatformer/rng.hpp"

namespace ftf {

inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}

inline bool grad_enabled() { return grad_mode_flag(); }

// RAII guard that disables graph construction (evaluation passes).
struct NoGrad {
    bool prev;
    NoGrad() : prev(grad_mode_flag()) { grad_mode_flag() = false; }
    ~NoGrad() { grad_mode_flag() = prev; }
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;
};

// Counts log-argument clamps (probabilities hitting exactly 0/1); surfaced
// in training reports.
inline uint64_t& log_clamp_events() {
    thread_local uint64_t n = 0;
    return n;
}

template <typename T>
struct TensorT;

template <typename T>
struct NodeT {
    std::vector<TensorT<T>> parents;
    std::function<void()> backprop;
};

inline std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::shared_ptr<std::vector<T>> data;
    std::shared_ptr<std::vector<T>> grad;
    bool requires_grad = false;
    std::shared_ptr<NodeT<T>> node;

    TensorT() = default;

    static TensorT zeros(std::vector<int> shape, bool requires_grad = false) {
        TensorT t;
        t.shape = std::move(shape);
        t.data = std::make_shared<std::vector<T>>(static_cast<size_t>(count(t.shape)), T(0));
        if (requires_grad) {
            t.requires_grad = true;
            t.ensure_grad();
        }
        return t;
    }

    static TensorT full(std::vector<int> shape, T value, bool requires_grad = false) {
        TensorT t = zeros(std::move(shape), requires_grad);
        std::fill(t.data->begin(), t.data->end(), value);
        return t;
    }

    static TensorT scalar(T value, bool requires_grad = false) {
        return full({1}, value, requires_grad);
    }

    static TensorT from(std::vector<int> shape, std::vector<T> values, bool requires_grad = false) {
        if (count(shape) != static_cast<long>(values.size()))
            throw ShapeError("tensor init: shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
        TensorT t;
        t.shape = std::move(shape);
        t.data = std::make_shared<std::vector<T>>(std::move(values));
        if (requires_grad) {
            t.requires_grad = true;
            t.ensure_grad();
        }
        return t;
    }

    static TensorT randn(Rng& rng, std::vector<int> shape, T mean, T stddev,
                         bool requires_grad = false) {
        TensorT t = zeros(std::move(shape), requires_grad);
        for (T& x : *t.data) x = mean + stddev * static_cast<T>(rng.gaussian());
        return t;
    }

    static long count(const std::vector<int>& s) {
        long n = 1;
        for (int d : s) n *= d;
        return n;
    }

    int numel() const { return static_cast<int>(data ? data->size() : 0); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    T* ptr() { return data->data(); }
    const T* ptr() const { return data->data(); }
    T* gptr() { return grad->data(); }
    const T* gptr() const { return grad->data(); }

    T item() const {
        if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape));
        return (*data)[0];
    }

    void ensure_grad() {
        if (!grad) grad = std::make_shared<std::vector<T>>(data->size(), T(0));
    }

    void zero_grad() {
        if (grad) std::fill(grad->begin(), grad->end(), T(0));
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

namespace detail {

template <typename T>
bool track_any(const std::vector<TensorT<T>>& ins) {
    if (!grad_enabled()) return false;
    for (const auto& t : ins)
        if (t.requires_grad) return true;
    return false;
}

// Marks `out` as tracked and allocates its gradient buffer. Must run before
// the backprop closure is constructed: closures capture the shared grad
// storage by value. Parent gradients are already allocated by induction —
// leaves allocate at construction, intermediates here.
template <typename T>
void prepare(TensorT<T>& out) {
    out.requires_grad = true;
    out.ensure_grad();
}

template <typename T>
void attach(TensorT<T>& out, std::vector<TensorT<T>> parents, std::function<void()> backprop) {
    auto node = std::make_shared<NodeT<T>>();
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
    out.node = node;
}

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "add");
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    K.add(out.ptr(), a.ptr(), b.ptr(), a.numel());
    if (detail::track_any<T>({a, b})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a, b}, [a, b, og = out.grad, n = a.numel()]() {
            const auto& K2 = kernels::active<T>();
            if (a.requires_grad) K2.axpy(a.grad->data(), T(1), og->data(), n);
            if (b.requires_grad) K2.axpy(b.grad->data(), T(1), og->data(), n);
        });
    }
    return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "sub");
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    K.sub(out.ptr(), a.ptr(), b.ptr(), a.numel());
    if (detail::track_any<T>({a, b})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a, b}, [a, b, og = out.grad, n = a.numel()]() {
            const auto& K2 = kernels::active<T>();
            if (a.requires_grad) K2.axpy(a.grad->data(), T(1), og->data(), n);
            if (b.requires_grad) K2.axpy(b.grad->data(), T(-1), og->data(), n);
        });
    }
    return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "mul");
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    K.mul(out.ptr(), a.ptr(), b.ptr(), a.numel());
    if (detail::track_any<T>({a, b})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a, b}, [a, b, og = out.grad, n = a.numel()]() {
            const T* g = og->data();
            if (a.requires_grad) {
                T* da = a.grad->data();
                const T* bv = b.ptr();
                for (int i = 0; i < n; ++i) da[i] += g[i] * bv[i];
            }
            if (b.requires_grad) {
                T* db = b.grad->data();
                const T* av = a.ptr();
                for (int i = 0; i < n; ++i) db[i] += g[i] * av[i];
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T s) {
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    K.scale(out.ptr(), a.ptr(), s, a.numel());
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, s, og = out.grad, n = a.numel()]() {
            kernels::active<T>().axpy(a.grad->data(), s, og->data(), n);
        });
    }
    return out;
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T s) {
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    const T* x = a.ptr();
    T* y = out.ptr();
    for (int i = 0; i < a.numel(); ++i) y[i] = x[i] + s;
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, n = a.numel()]() {
            kernels::active<T>().axpy(a.grad->data(), T(1), og->data(), n);
        });
    }
    return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    K.relu(out.ptr(), a.ptr(), a.numel());
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, n = a.numel()]() {
            kernels::active<T>().relu_bwd(a.grad->data(), og->data(), a.ptr(), n);
        });
    }
    return out;
}

template <typename T>
TensorT<T> exp_t(const TensorT<T>& a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    const T* x = a.ptr();
    T* y = out.ptr();
    for (int i = 0; i < a.numel(); ++i) y[i] = std::exp(x[i]);
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, od = out.data, n = a.numel()]() {
            T* da = a.grad->data();
            const T* g = og->data();
            const T* yv = od->data();
            for (int i = 0; i < n; ++i) da[i] += g[i] * yv[i];
        });
    }
    return out;
}

// log with the argument clamped at `floor`; clamped coordinates contribute
// zero gradient and bump the clamp counter.
template <typename T>
TensorT<T> log_clamped(const TensorT<T>& a, T floor = T(1e-12)) {
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    const T* x = a.ptr();
    T* y = out.ptr();
    for (int i = 0; i < a.numel(); ++i) {
        if (x[i] < floor) {
            ++log_clamp_events();
            y[i] = std::log(floor);
        } else {
            y[i] = std::log(x[i]);
        }
    }
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, floor, og = out.grad, n = a.numel()]() {
            T* da = a.grad->data();
            const T* g = og->data();
            const T* x2 = a.ptr();
            for (int i = 0; i < n; ++i)
                if (x2[i] >= floor) da[i] += g[i] / x2[i];
        });
    }
    return out;
}

template <typename T>
TensorT<T> sqrt_t(const TensorT<T>& a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    const T* x = a.ptr();
    T* y = out.ptr();
    for (int i = 0; i < a.numel(); ++i) y[i] = std::sqrt(x[i]);
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, od = out.data, n = a.numel()]() {
            T* da = a.grad->data();
            const T* g = og->data();
            const T* yv = od->data();
            for (int i = 0; i < n; ++i)
                if (yv[i] > T(0)) da[i] += g[i] / (T(2) * yv[i]);
        });
    }
    return out;
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape);
    const T* x = a.ptr();
    T* y = out.ptr();
    for (int i = 0; i < a.numel(); ++i) {
        if (x[i] >= T(0)) {
            const T e = std::exp(-x[i]);
            y[i] = T(1) / (T(1) + e);
        } else {
            const T e = std::exp(x[i]);
            y[i] = e / (T(1) + e);
        }
    }
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, od = out.data, n = a.numel()]() {
            T* da = a.grad->data();
            const T* g = og->data();
            const T* yv = od->data();
            for (int i = 0; i < n; ++i) da[i] += g[i] * yv[i] * (T(1) - yv[i]);
        });
    }
    return out;
}

// x * s where s is a learnable one-element tensor.
template <typename T>
TensorT<T> scale_by(const TensorT<T>& x, const TensorT<T>& s) {
    if (s.numel() != 1)
        throw ShapeError("scale_by: scale must be a scalar tensor, got " + shape_str(s.shape));
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(x.shape);
    K.scale(out.ptr(), x.ptr(), (*s.data)[0], x.numel());
    if (detail::track_any<T>({x, s})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x, s}, [x, s, og = out.grad, n = x.numel()]() {
            const auto& K2 = kernels::active<T>();
            if (x.requires_grad) K2.axpy(x.grad->data(), (*s.data)[0], og->data(), n);
            if (s.requires_grad) (*s.grad)[0] += K2.dot(og->data(), x.ptr(), n);
        });
    }
    return out;
}

// x / s for a one-element tensor s; gradient flows to both arguments.
template <typename T>
TensorT<T> div_by(const TensorT<T>& x, const TensorT<T>& s) {
    if (s.numel() != 1)
        throw ShapeError("div_by: divisor must be a scalar tensor, got " + shape_str(s.shape));
    const T sv = (*s.data)[0];
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros(x.shape);
    K.scale(out.ptr(), x.ptr(), T(1) / sv, x.numel());
    if (detail::track_any<T>({x, s})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {x, s}, [x, s, sv, og = out.grad, n = x.numel()]() {
            const auto& K2 = kernels::active<T>();
            if (x.requires_grad) K2.axpy(x.grad->data(), T(1) / sv, og->data(), n);
            if (s.requires_grad)
                (*s.grad)[0] -= K2.dot(og->data(), x.ptr(), n) / (sv * sv);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> sum_all(const TensorT<T>& a) {
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::scalar(K.sum(a.ptr(), a.numel()));
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, n = a.numel()]() {
            const T g = (*og)[0];
            T* da = a.grad->data();
            for (int i = 0; i < n; ++i) da[i] += g;
        });
    }
    return out;
}

template <typename T>
TensorT<T> mean_all(const TensorT<T>& a) {
    return scale(sum_all(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
TensorT<T> dot(const TensorT<T>& u, const TensorT<T>& v) {
    if (u.numel() != v.numel())
        throw ShapeError("dot: length mismatch " + shape_str(u.shape) + " vs " +
                         shape_str(v.shape));
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::scalar(K.dot(u.ptr(), v.ptr(), u.numel()));
    if (detail::track_any<T>({u, v})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {u, v}, [u, v, og = out.grad, n = u.numel()]() {
            const auto& K2 = kernels::active<T>();
            const T g = (*og)[0];
            if (u.requires_grad) K2.axpy(u.grad->data(), g, v.ptr(), n);
            if (v.requires_grad) K2.axpy(v.grad->data(), g, u.ptr(), n);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> reshape(const TensorT<T>& a, std::vector<int> new_shape) {
    if (TensorT<T>::count(new_shape) != a.numel())
        throw ShapeError("reshape: " + shape_str(a.shape) + " to " + shape_str(new_shape));
    TensorT<T> out = TensorT<T>::zeros(std::move(new_shape));
    std::copy(a.data->begin(), a.data->end(), out.data->begin());
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, og = out.grad, n = a.numel()]() {
            kernels::active<T>().axpy(a.grad->data(), T(1), og->data(), n);
        });
    }
    return out;
}

// Rows are slices along the first dimension.
template <typename T>
TensorT<T> slice_rows(const TensorT<T>& a, int r0, int r1) {
    if (a.rank() < 1 || r0 < 0 || r1 > a.dim(0) || r0 >= r1)
        throw ShapeError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                         ") of " + shape_str(a.shape));
    const int rowsz = a.numel() / a.dim(0);
    std::vector<int> shape = a.shape;
    shape[0] = r1 - r0;
    TensorT<T> out = TensorT<T>::zeros(std::move(shape));
    std::copy(a.data->begin() + static_cast<long>(r0) * rowsz,
              a.data->begin() + static_cast<long>(r1) * rowsz, out.data->begin());
    if (detail::track_any<T>({a})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a}, [a, r0, rowsz, og = out.grad, n = out.numel()]() {
            kernels::active<T>().axpy(a.grad->data() + static_cast<long>(r0) * rowsz, T(1),
                                      og->data(), n);
        });
    }
    return out;
}

template <typename T>
TensorT<T> concat_rows(const std::vector<TensorT<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    std::vector<int> shape = parts[0].shape;
    const int rowsz = parts[0].numel() / parts[0].dim(0);
    int rows = 0;
    for (const auto& p : parts) {
        if (p.rank() != parts[0].rank() || p.numel() / p.dim(0) != rowsz)
            throw ShapeError("concat_rows: incompatible part " + shape_str(p.shape));
        rows += p.dim(0);
    }
    shape[0] = rows;
    TensorT<T> out = TensorT<T>::zeros(std::move(shape));
    long off = 0;
    for (const auto& p : parts) {
        std::copy(p.data->begin(), p.data->end(), out.data->begin() + off);
        off += p.numel();
    }
    if (detail::track_any<T>(parts)) {
        detail::prepare<T>(out);
        detail::attach<T>(out, parts, [parts, og = out.grad]() {
            long off2 = 0;
            for (const auto& p : parts) {
                if (p.requires_grad)
                    kernels::active<T>().axpy(p.grad->data(), T(1), og->data() + off2, p.numel());
                off2 += p.numel();
            }
        });
    }
    return out;
}

// [D] -> [n x D]
template <typename T>
TensorT<T> repeat_row(const TensorT<T>& v, int n) {
    const int d = v.numel();
    TensorT<T> out = TensorT<T>::zeros({n, d});
    for (int i = 0; i < n; ++i)
        std::copy(v.data->begin(), v.data->end(), out.data->begin() + static_cast<long>(i) * d);
    if (detail::track_any<T>({v})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {v}, [v, n, d, og = out.grad]() {
            const auto& K2 = kernels::active<T>();
            for (int i = 0; i < n; ++i)
                K2.axpy(v.grad->data(), T(1), og->data() + static_cast<long>(i) * d, d);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: " + shape_str(a.shape) + " x " + shape_str(b.shape));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros({m, n});
    K.matmul_nn(out.ptr(), a.ptr(), b.ptr(), m, k, n);
    if (detail::track_any<T>({a, b})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a, b}, [a, b, m, k, n, og = out.grad]() {
            const auto& K2 = kernels::active<T>();
            if (a.requires_grad) K2.matmul_nt(a.grad->data(), og->data(), b.ptr(), m, n, k);
            if (b.requires_grad) K2.matmul_tn(b.grad->data(), a.ptr(), og->data(), k, m, n);
        });
    }
    return out;
}

// a [m x k] times b^T where b is [n x k]
template <typename T>
TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("matmul_nt: " + shape_str(a.shape) + " x " + shape_str(b.shape) + "^T");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros({m, n});
    K.matmul_nt(out.ptr(), a.ptr(), b.ptr(), m, k, n);
    if (detail::track_any<T>({a, b})) {
        detail::prepare<T>(out);
        detail::attach<T>(out, {a, b}, [a, b, m, k, n, og = out.grad]() {
            const auto& K2 = kernels::active<T>();
            // dA += dC * B ; dB += dC^T * A
            if (a.requires_grad) K2.matmul_nn(a.grad->data(), og->data(), b.ptr(), m, n, k);
            if (b.requires_grad) K2.matmul_tn(b.grad->data(), og->data(), a.ptr(), n, m, k);
        });
    }
    return out;
}

// x [r x k] * w [k x n] + bias [n] broadcast over rows. Empty bias skips the add.
template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
        throw ShapeError("linear: " + shape_str(x.shape) + " x " + shape_str(w.shape));
    const int r = x.dim(0), k = x.dim(1), n = w.dim(1);
    const bool has_bias = bias.data && bias.numel() > 0;
    if (has_bias && bias.numel() != n)
        throw ShapeError("linear: bias " + shape_str(bias.shape) + " vs out dim " +
                         std::to_string(n));
    const auto& K = kernels::active<T>();
    TensorT<T> out = TensorT<T>::zeros({r, n});
    if (has_bias)
        for (int i = 0; i < r; ++i)
            std::copy(bias.data->begin(), bias.data->end(),
                      out.data->begin() + static_cast<long>(i) * n);
    K.matmul_nn(out.ptr(), x.ptr(), w.ptr(), r, k, n);
    std::vector<TensorT<T>> parents = {x, w};
    if (has_bias) parents.push_back(bias);
    if (detail::track_any<T>(parents)) {
        detail::prepare<T>(out);
        detail::attach<T>(out, parents, [x, w, bias, has_bias, r, k, n, og = out.grad]() {
            const auto& K2 = kernels::active<T>();
            if (x.requires_grad) K2.matmul_nt(x.grad->data(), og->data(), w.ptr(), r, n, k);
            if (w.requires_grad) K2.matmul_tn(w.grad->data(), x.ptr(), og->data(), k, r, n);
            if (has_bias && bias.requires_grad) {
                T* db = bias.grad->data();
                const T* g = og->data();
                for (int i = 0; i < r; ++i)
                    K2.axpy(db, T(1), g + static_cast<long>(i) * n, n);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

// Seeds d(loss)/d(loss) = 1 and propagates through the recorded graph in
// reverse topological order. Leaf gradients accumulate until zero_grad.
template <typename T>
void backward(const TensorT<T>& loss) {
    if (loss.numel() != 1)
        throw ContractError("backward: loss must be scalar, got " + shape_str(loss.shape));
    if (!loss.node) return;  // constant w.r.t. parameters

    // iterative post-order DFS
    std::vector<NodeT<T>*> order;
    std::unordered_set<NodeT<T>*> visited;
    struct Frame {
        NodeT<T>* node;
        size_t next_child;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.node.get(), 0});
    visited.insert(loss.node.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        bool descended = false;
        while (f.next_child < f.node->parents.size()) {
            NodeT<T>* child = f.node->parents[f.next_child].node.get();
            ++f.next_child;
            if (child && !visited.count(child)) {
                visited.insert(child);
                stack.push_back({child, 0});
                descended = true;
                break;
            }
        }
        if (!descended && f.next_child >= f.node->parents.size()) {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    (*loss.grad)[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop();
}

}  // namespace ftf
