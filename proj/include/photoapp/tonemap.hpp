// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/image.hpp"

namespace photoapp {

inline constexpr double kDefaultGamma    = 2.2;
inline constexpr double kDefaultExposure = 1.0;

namespace detail {
inline void check_tonemap_params(double exposure, double gamma)
{
    if (!(exposure > 0.0) || !std::isfinite(exposure))
        throw ParameterError("exposure must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ParameterError("gamma must be positive");
}

inline double display_value(double v, double exposure, double inv_gamma)
{
    double x = std::clamp(exposure * v, 0.0, 1.0);
    return inv_gamma == 1.0 ? x : std::pow(x, inv_gamma);
}
} // namespace detail

/// out = round(255 * clamp(exposure * v, 0, 1)^(1/gamma)) per channel.
inline LdrImage tonemap(const HdrImage& img, double exposure = kDefaultExposure, double gamma = kDefaultGamma)
{
    detail::check_tonemap_params(exposure, gamma);
    LdrImage     out(img.width, img.height);
    const double inv_gamma = 1.0 / gamma;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(
            std::lround(255.0 * detail::display_value(static_cast<double>(img.data[i]), exposure, inv_gamma)));
    return out;
}

/// Same operator without 8-bit quantization; values land in [0, 1].
inline HdrImage tonemap_float(const HdrImage& img, double exposure = kDefaultExposure, double gamma = kDefaultGamma)
{
    detail::check_tonemap_params(exposure, gamma);
    HdrImage     out(img.width, img.height);
    const double inv_gamma = 1.0 / gamma;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<float>(detail::display_value(static_cast<double>(img.data[i]), exposure, inv_gamma));
    return out;
}

inline double luminance(double r, double g, double b) { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }

/// Exposure that maps the given luminance percentile to `target`; 1.0 for black images.
inline double auto_exposure(const HdrImage& img, double percentile = 0.99, double target = 0.95)
{
    if (img.pixel_count() == 0)
        return 1.0;
    std::vector<double> lum(img.pixel_count());
    for (std::size_t p = 0; p < lum.size(); ++p)
        lum[p] = luminance(img.data[3 * p], img.data[3 * p + 1], img.data[3 * p + 2]);
    auto k = static_cast<std::size_t>(std::clamp(percentile, 0.0, 1.0) * static_cast<double>(lum.size() - 1));
    std::nth_element(lum.begin(), lum.begin() + static_cast<std::ptrdiff_t>(k), lum.end());
    double level = lum[k];
    return level > 0.0 ? target / level : 1.0;
}

/// Network-facing display image: auto-exposure (99th percentile luminance to
/// 0.95) then gamma 2.2, kept as float in [0, 1].
inline HdrImage to_network_ldr(const HdrImage& img)
{
    return tonemap_float(img, auto_exposure(img), kDefaultGamma);
}

inline HdrImage ldr_to_float(const LdrImage& img)
{
    HdrImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<float>(img.data[i]) / 255.0f;
    return out;
}

} // namespace photoapp
