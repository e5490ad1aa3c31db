// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Training objective: a latent term plus a perceptual feature term, weighted
// equally by default.

#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/features.hpp"
#include "photoapp/image.hpp"
#include "photoapp/latent.hpp"

namespace photoapp {

/// Mean over all elements of (predicted - reference)^2.
template <typename T>
double latent_loss(const LatentCode<T>& predicted, const LatentCode<T>& reference, LatentCode<T>* grad = nullptr)
{
    if (!predicted.same_shape(reference) || predicted.values.size() != reference.values.size())
        throw StructuralError("latent loss operands differ in shape");
    const double n   = static_cast<double>(predicted.values.size());
    double       sum = 0.0;
    if (grad)
        *grad = LatentCode<T>(predicted.blocks, predicted.dim);
    for (std::size_t i = 0; i < predicted.values.size(); ++i)
    {
        double d = static_cast<double>(predicted.values[i]) - static_cast<double>(reference.values[i]);
        sum += d * d;
        if (grad)
            grad->values[i] = static_cast<T>(2.0 * d / n);
    }
    return sum / n;
}

/// Sum over feature levels of the mean squared feature difference.
template <typename T>
double perceptual_loss(const BasicImage<T>& image, const BasicImage<T>& reference, const BasicFeatureExtractor<T>& phi,
                       BasicImage<T>* grad = nullptr)
{
    if (!image.same_shape(reference))
        throw StructuralError("perceptual loss images differ in size");
    auto fa = phi.extract(image);
    auto fb = phi.extract(reference);
    if (fa.size() != fb.size())
        throw StructuralError("feature extractor returned different level counts");
    double                     total = 0.0;
    std::vector<BasicImage<T>> d_features;
    for (std::size_t l = 0; l < fa.size(); ++l)
    {
        if (!fa[l].same_shape(fb[l]))
            throw StructuralError("feature maps differ in size");
        const double n   = static_cast<double>(fa[l].data.size());
        double       sum = 0.0;
        BasicImage<T> g(fa[l].width, fa[l].height);
        for (std::size_t i = 0; i < fa[l].data.size(); ++i)
        {
            double d = static_cast<double>(fa[l].data[i]) - static_cast<double>(fb[l].data[i]);
            sum += d * d;
            g.data[i] = static_cast<T>(2.0 * d / n);
        }
        total += sum / n;
        if (grad)
            d_features.push_back(std::move(g));
    }
    if (grad)
        *grad = phi.backprop(image, d_features);
    return total;
}

struct LossWeights
{
    double latent     = 1.0;
    double perceptual = 1.0;
};

template <typename T>
struct LossTerms
{
    double        latent     = 0.0;
    double        perceptual = 0.0;
    double        total      = 0.0;
    LatentCode<T> d_latent; ///< d total / d predicted latent (latent term only)
    BasicImage<T> d_image;  ///< d total / d predicted image
};

/// total = w_l * latent_loss(L_t, L_hat) + w_p * perceptual_loss(I_t, I_hat),
/// with gradients w.r.t. the predicted latent and predicted image.
template <typename T>
LossTerms<T> total_loss(const LatentCode<T>& latent, const LatentCode<T>& latent_ref, const BasicImage<T>& image,
                        const BasicImage<T>& image_ref, const BasicFeatureExtractor<T>& phi, const LossWeights& w = {})
{
    LossTerms<T> r;
    r.latent     = latent_loss(latent, latent_ref, &r.d_latent);
    r.perceptual = perceptual_loss(image, image_ref, phi, &r.d_image);
    r.total      = w.latent * r.latent + w.perceptual * r.perceptual;
    for (T& g : r.d_latent.values)
        g = static_cast<T>(w.latent * static_cast<double>(g));
    for (T& g : r.d_image.data)
        g = static_cast<T>(w.perceptual * static_cast<double>(g));
    return r;
}

} // namespace photoapp
