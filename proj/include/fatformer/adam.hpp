#pragma once

// Adam with bias correction. Moment buffers parallel the parameter list;
// the step counter is shared. Gradients are cleared after each step.

#include <memory>
#include <string>
#include <vector>

#include "fatformer/tensor.hpp"

namespace ftf {

template <typename T>
struct AdamStateT {
    std::vector<std::shared_ptr<std::vector<T>>> m;
    std::vector<std::shared_ptr<std::vector<T>>> v;
    long step = 0;
    T lr = T(4e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);

    void init(const std::vector<TensorT<T>>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.push_back(std::make_shared<std::vector<T>>(p.data->size(), T(0)));
            v.push_back(std::make_shared<std::vector<T>>(p.data->size(), T(0)));
        }
        step = 0;
    }
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(AdamStateT<T>& state, const std::vector<TensorT<T>>& params) {
    if (state.m.size() != params.size())
        throw ContractError("adam_step: state tracks " + std::to_string(state.m.size()) +
                            " parameters, got " + std::to_string(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i].grad)
            throw ContractError("adam_step: parameter " + std::to_string(i) + " has no gradient");
        if (state.m[i]->size() != params[i].data->size())
            throw ContractError("adam_step: moment shape mismatch at parameter " +
                                std::to_string(i));
    }
    ++state.step;
    const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.step));
    const auto& K = kernels::active<T>();
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        K.adam(p.data->data(), p.grad->data(), state.m[i]->data(), state.v[i]->data(), p.numel(),
               state.lr, state.beta1, state.beta2, state.eps, bc1, bc2);
        std::fill(p.grad->begin(), p.grad->end(), T(0));
    }
}

template <typename T>
void zero_grads(const std::vector<TensorT<T>>& params) {
    for (const auto& p : params)
        if (p.grad) std::fill(p.grad->begin(), p.grad->end(), T(0));
}

// Projection used for the learnable temperature.
template <typename T>
void clamp_values(const TensorT<T>& t, T lo, T hi) {
    for (T& x : *t.data) x = std::min(hi, std::max(lo, x));
}

}  // namespace ftf
