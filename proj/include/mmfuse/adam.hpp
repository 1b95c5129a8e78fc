#pragma once
// Adam with bias correction. Parameters live in a ParamSet — a name-keyed map
// whose iteration order (lexicographic) fixes the update order.

#include <map>
#include <string>

#include "mmfuse/errors.hpp"
#include "mmfuse/tensor.hpp"

namespace mmfuse {

using ParamSet = std::map<std::string, Tensor>;
using GradSet = std::map<std::string, Tensor>;

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
};

inline void adam_step(ParamSet& params, const GradSet& grads, AdamState& state) {
    state.t += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) throw ShapeMismatch("adam_step: no gradient for '" + name + "'");
        const Tensor& g = git->second;
        if (!g.same_shape(p))
            throw ShapeMismatch("adam_step: gradient shape " + shape_str(g.shape) +
                                " vs parameter " + shape_str(p.shape) + " for '" + name + "'");
        Tensor& m = state.m.try_emplace(name, Tensor::zeros(p.shape)).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor::zeros(p.shape)).first->second;
        if (!m.same_shape(p) || !v.same_shape(p))
            throw ShapeMismatch("adam_step: stale moment shape for '" + name + "'");
        for (std::size_t i = 0; i < p.numel(); ++i) {
            double gi = g.data[i];
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
            double mhat = m.data[i] / bc1;
            double vhat = v.data[i] / bc2;
            p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace mmfuse
