// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "photoapp/error.hpp"
#include "photoapp/parallel.hpp"
#include "photoapp/photoappnet.hpp"

namespace photoapp {

struct AdamConfig
{
    double lr      = 1e-4;
    double beta1   = 0.9;
    double beta2   = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState
{
    NetParams<T>  m;
    NetParams<T>  v;
    std::uint64_t t = 0;

    static AdamState for_params(const NetParams<T>& p) { return {NetParams<T>::zeros(p.shape), NetParams<T>::zeros(p.shape), 0}; }
};

/// One bias-corrected Adam update. Non-finite gradients abort the step before
/// anything is modified.
template <typename T>
void adam_step(NetParams<T>& params, const NetParams<T>& grads, AdamState<T>& state, const AdamConfig& cfg)
{
    if (!(params.shape == grads.shape) || !(params.shape == state.m.shape) || !(params.shape == state.v.shape))
        throw StructuralError("Adam operands differ in shape");
    if (!(cfg.lr > 0.0))
        throw ParameterError("learning rate must be positive");
    if (!grads.all_finite())
        throw NumericError("non-finite gradient; Adam step aborted");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    const T      b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T      one_b1 = static_cast<T>(1.0 - cfg.beta1), one_b2 = static_cast<T>(1.0 - cfg.beta2);
    const T      step_size = static_cast<T>(cfg.lr / bc1);
    const T      inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    const T      eps          = static_cast<T>(cfg.epsilon);

    parallel_for(0, static_cast<int>(params.blocks.size()),
                 [&](int k)
                 {
                     auto p  = params.blocks[static_cast<std::size_t>(k)].tensors();
                     auto g  = grads.blocks[static_cast<std::size_t>(k)].tensors();
                     auto m  = state.m.blocks[static_cast<std::size_t>(k)].tensors();
                     auto v  = state.v.blocks[static_cast<std::size_t>(k)].tensors();
                     for (std::size_t t = 0; t < p.size(); ++t)
                     {
                         T* __restrict       pp = p[t].data();
                         const T* __restrict gg = g[t].data();
                         T* __restrict       mm = m[t].data();
                         T* __restrict       vv = v[t].data();
                         const std::size_t   n  = p[t].size();
                         for (std::size_t i = 0; i < n; ++i)
                         {
                             mm[i] = b1 * mm[i] + one_b1 * gg[i];
                             vv[i] = b2 * vv[i] + one_b2 * gg[i] * gg[i];
                             pp[i] -= step_size * mm[i] / (std::sqrt(vv[i]) * inv_sqrt_bc2 + eps);
                         }
                     }
                 });
    params.touch();
}

} // namespace photoapp
