// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Central-difference oracle for the editing network's analytic backward pass.
// Shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "photoapp/features.hpp"
#include "photoapp/generator.hpp"
#include "photoapp/loss.hpp"
#include "photoapp/photoappnet.hpp"

namespace photoapp::gradcheck {

struct GradCheckReport
{
    double      max_rel_error   = 0.0; ///< worst config: |g_analytic - g_fd| / |g_fd| over all coordinates
    double      max_coord_error = 0.0; ///< worst single coordinate, relative to the larger of the two values
    std::size_t checked         = 0;
    std::size_t skipped_kinks   = 0; ///< coordinates whose +-eps step flips a ReLU
};

/// A reduced editing net (2 blocks, small hidden layer) with the toy generator
/// at 16x16 and random references for both loss terms.
template <typename T>
struct SmallNet
{
    NetShape                                 shape;
    NetParams<T>                             params;
    LatentCode<T>                            source;
    LatentCode<T>                            latent_ref;
    BasicImage<T>                            image_ref;
    std::vector<T>                           cond;
    std::shared_ptr<BasicToyGenerator<T>>    gen;
    BasicPyramidFeatures<T>                  phi;
};

template <typename T>
SmallNet<T> make_small_net(std::uint64_t seed, int hidden = 8)
{
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
    SmallNet<T>                            n;
    n.shape.blocks     = 2;
    n.shape.latent_dim = 5;
    n.shape.hidden     = hidden;
    n.shape.env_dim    = 6;
    n.shape.pose_dim   = 3;
    n.shape.use_q      = (seed & 1) != 0;
    n.params           = NetParams<T>::init(n.shape, seed);
    // Zero-initialized output layers would hide every W1/b1 gradient.
    for (auto& b : n.params.blocks)
    {
        for (Eigen::Index i = 0; i < b.b1.size(); ++i)
            b.b1[i] = static_cast<T>(0.3 * u(rng));
        for (Eigen::Index i = 0; i < b.w2.size(); ++i)
            b.w2.data()[i] = static_cast<T>(u(rng));
        for (Eigen::Index i = 0; i < b.b2.size(); ++i)
            b.b2[i] = static_cast<T>(0.2 * u(rng));
    }
    n.params.touch();
    n.source     = LatentCode<T>(n.shape.blocks, n.shape.latent_dim);
    n.latent_ref = n.source;
    for (T& v : n.source.values)
        v = static_cast<T>(u(rng));
    for (T& v : n.latent_ref.values)
        v = static_cast<T>(u(rng));
    for (int i = 0; i < n.shape.cond_dim(); ++i)
        n.cond.push_back(static_cast<T>(i < n.shape.env_dim ? pos(rng) : (i < n.shape.env_dim + n.shape.pose_dim ? u(rng) : 1.0)));

    ToyGeneratorSpec spec;
    spec.seed       = seed + 100;
    spec.width      = 16;
    spec.height     = 16;
    spec.blocks     = n.shape.blocks;
    spec.latent_dim = n.shape.latent_dim;
    n.gen           = std::make_shared<BasicToyGenerator<T>>(spec);
    n.image_ref     = BasicImage<T>(16, 16);
    for (T& v : n.image_ref.data)
        v = static_cast<T>(pos(rng));
    return n;
}

template <typename T>
double small_net_loss(const SmallNet<T>& n, const LatentCode<T>& target)
{
    return total_loss(target, n.latent_ref, n.gen->decode_image(target), n.image_ref, n.phi).total;
}

/// Checks every parameter plus the source and condition gradients of the
/// full loss against central differences with step eps.
template <typename T>
GradCheckReport check_gradients(SmallNet<T> n, double eps)
{
    auto fwd   = forward(n.params, n.source, std::span<const T>(n.cond));
    auto terms = total_loss(fwd.target, n.latent_ref, n.gen->decode_image(fwd.target), n.image_ref, n.phi);
    auto dy    = n.gen->pullback(terms.d_image.data);
    for (std::size_t i = 0; i < dy.values.size(); ++i)
        dy.values[i] += terms.d_latent.values[i];
    auto bwd = backward(n.params, fwd.cache, dy);

    auto signs = [&](const ForwardCache<T>& c)
    {
        std::vector<bool> s;
        for (const auto& pre : c.pre_activation)
            for (Eigen::Index i = 0; i < pre.size(); ++i)
                s.push_back(pre[i] > T(0));
        return s;
    };
    const auto base_signs = signs(fwd.cache);

    GradCheckReport rep;
    double          diff2 = 0.0, ref2 = 0.0;
    auto            probe = [&](T& slot, double analytic)
    {
        const T orig = slot;
        slot         = static_cast<T>(static_cast<double>(orig) + eps);
        const T hi   = slot;
        n.params.touch();
        auto plus = forward(n.params, n.source, std::span<const T>(n.cond));
        slot      = static_cast<T>(static_cast<double>(orig) - eps);
        const T lo = slot;
        n.params.touch();
        auto minus = forward(n.params, n.source, std::span<const T>(n.cond));
        slot       = orig;
        n.params.touch();
        if (signs(plus.cache) != base_signs || signs(minus.cache) != base_signs)
        {
            ++rep.skipped_kinks;
            return;
        }
        // Divide by the step actually taken after rounding to T.
        const double numeric = (small_net_loss(n, plus.target) - small_net_loss(n, minus.target)) /
                               (static_cast<double>(hi) - static_cast<double>(lo));
        const double scale   = std::max(std::abs(analytic), std::abs(numeric));
        if (scale > 0.0)
            rep.max_coord_error = std::max(rep.max_coord_error, std::abs(analytic - numeric) / scale);
        diff2 += (analytic - numeric) * (analytic - numeric);
        ref2 += numeric * numeric;
        ++rep.checked;
    };

    for (std::size_t k = 0; k < n.params.blocks.size(); ++k)
    {
        auto p = n.params.blocks[k].tensors();
        auto g = bwd.param_grads.blocks[k].tensors();
        for (std::size_t t = 0; t < p.size(); ++t)
            for (std::size_t i = 0; i < p[t].size(); ++i)
                probe(p[t][i], static_cast<double>(g[t][i]));
    }
    for (std::size_t i = 0; i < n.source.values.size(); ++i)
        probe(n.source.values[i], static_cast<double>(bwd.d_source.values[i]));
    for (std::size_t i = 0; i < n.cond.size(); ++i)
        probe(n.cond[i], static_cast<double>(bwd.d_cond[i]));
    rep.max_rel_error = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
    return rep;
}

} // namespace photoapp::gradcheck
