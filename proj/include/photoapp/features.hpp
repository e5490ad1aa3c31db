// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/image.hpp"

namespace photoapp {

/// Maps an image to a list of feature rasters and back-propagates gradients
/// given per-feature-map gradients.
template <typename T>
class BasicFeatureExtractor
{
public:
    virtual ~BasicFeatureExtractor() = default;

    virtual std::vector<BasicImage<T>> extract(const BasicImage<T>& image) const = 0;

    /// Vector-Jacobian product at `image`.
    virtual BasicImage<T> backprop(const BasicImage<T>& image, const std::vector<BasicImage<T>>& d_features) const = 0;

    virtual std::string descriptor() const = 0;
};

namespace detail {

inline constexpr std::array<double, 5> kBinomial5{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

/// Separable 5-tap binomial blur with replicated borders.
template <typename T>
BasicImage<T> binomial_blur(const BasicImage<T>& in)
{
    const int     W = in.width, H = in.height;
    BasicImage<T> tmp(W, H), out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
            {
                T acc = T(0);
                for (int t = -2; t <= 2; ++t)
                    acc += static_cast<T>(kBinomial5[static_cast<std::size_t>(t + 2)]) * in(clamp_index(x + t, W), y, c);
                tmp(x, y, c) = acc;
            }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
            {
                T acc = T(0);
                for (int t = -2; t <= 2; ++t)
                    acc += static_cast<T>(kBinomial5[static_cast<std::size_t>(t + 2)]) * tmp(x, clamp_index(y + t, H), c);
                out(x, y, c) = acc;
            }
    return out;
}

/// Transpose of binomial_blur.
template <typename T>
BasicImage<T> binomial_blur_adjoint(const BasicImage<T>& g)
{
    const int     W = g.width, H = g.height;
    BasicImage<T> tmp(W, H), out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                for (int t = -2; t <= 2; ++t)
                    tmp(x, clamp_index(y + t, H), c) += static_cast<T>(kBinomial5[static_cast<std::size_t>(t + 2)]) * g(x, y, c);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                for (int t = -2; t <= 2; ++t)
                    out(clamp_index(x + t, W), y, c) += static_cast<T>(kBinomial5[static_cast<std::size_t>(t + 2)]) * tmp(x, y, c);
    return out;
}

} // namespace detail

/// Default perceptual features: a 4-level pyramid. Level 0 is the image; each
/// further level is the previous one blurred with the 5-tap binomial kernel
/// and subsampled by two (floor division of the size).
template <typename T>
class BasicPyramidFeatures final : public BasicFeatureExtractor<T>
{
public:
    static constexpr int kLevels  = 4;
    static constexpr int kMinSize = 16;

    std::vector<BasicImage<T>> extract(const BasicImage<T>& image) const override
    {
        check(image);
        std::vector<BasicImage<T>> levels;
        levels.reserve(kLevels);
        levels.push_back(image);
        for (int l = 1; l < kLevels; ++l)
        {
            auto          blurred = detail::binomial_blur(levels.back());
            BasicImage<T> down(blurred.width / 2, blurred.height / 2);
            for (int y = 0; y < down.height; ++y)
                for (int x = 0; x < down.width; ++x)
                    for (int c = 0; c < 3; ++c)
                        down(x, y, c) = blurred(2 * x, 2 * y, c);
            levels.push_back(std::move(down));
        }
        return levels;
    }

    BasicImage<T> backprop(const BasicImage<T>& image, const std::vector<BasicImage<T>>& d_features) const override
    {
        check(image);
        if (d_features.size() != static_cast<std::size_t>(kLevels))
            throw StructuralError("pyramid backprop expects one gradient per level");
        // sizes of each level
        std::vector<std::pair<int, int>> sizes{{image.width, image.height}};
        for (int l = 1; l < kLevels; ++l)
            sizes.emplace_back(sizes.back().first / 2, sizes.back().second / 2);
        for (int l = 0; l < kLevels; ++l)
            if (d_features[static_cast<std::size_t>(l)].width != sizes[static_cast<std::size_t>(l)].first ||
                d_features[static_cast<std::size_t>(l)].height != sizes[static_cast<std::size_t>(l)].second)
                throw StructuralError("pyramid gradient has the wrong size at level " + std::to_string(l));

        BasicImage<T> g = d_features.back();
        for (int l = kLevels - 2; l >= 0; --l)
        {
            const auto [W, H] = sizes[static_cast<std::size_t>(l)];
            BasicImage<T> up(W, H);
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x)
                    for (int c = 0; c < 3; ++c)
                        up(2 * x, 2 * y, c) = g(x, y, c);
            g = detail::binomial_blur_adjoint(up);
            const auto& own = d_features[static_cast<std::size_t>(l)];
            for (std::size_t i = 0; i < g.data.size(); ++i)
                g.data[i] += own.data[i];
        }
        return g;
    }

    std::string descriptor() const override { return "binomial-pyramid-4"; }

private:
    static void check(const BasicImage<T>& image)
    {
        if (image.width < kMinSize || image.height < kMinSize)
            throw ParameterError("pyramid features need an image of at least 16x16");
    }
};

using FeatureExtractor = BasicFeatureExtractor<float>;
using PyramidFeatures  = BasicPyramidFeatures<float>;

} // namespace photoapp
