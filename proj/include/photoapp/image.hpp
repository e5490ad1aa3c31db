// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "photoapp/error.hpp"

namespace photoapp {

/// Row-major interleaved RGB raster. `BasicImage<float>` is the linear-radiance
/// currency of the library; the double instantiation is used by gradient tests.
template <typename T>
struct BasicImage
{
    static constexpr int channels = 3;

    int            width  = 0;
    int            height = 0;
    std::vector<T> data;

    BasicImage() = default;
    BasicImage(int w, int h, T fill = T(0))
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels, fill)
    {
        if (w < 0 || h < 0)
            throw ParameterError("image dimensions must be non-negative");
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t size() const { return data.size(); }
    bool        empty() const { return data.empty(); }

    std::size_t index(int x, int y, int c = 0) const
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * channels +
               static_cast<std::size_t>(c);
    }

    T&       operator()(int x, int y, int c) { return data[index(x, y, c)]; }
    const T& operator()(int x, int y, int c) const { return data[index(x, y, c)]; }

    std::span<T>       row(int y) { return {data.data() + index(0, y), static_cast<std::size_t>(width) * channels}; }
    std::span<const T> row(int y) const
    {
        return {data.data() + index(0, y), static_cast<std::size_t>(width) * channels};
    }

    bool same_shape(const BasicImage& o) const { return width == o.width && height == o.height; }

    friend bool operator==(const BasicImage&, const BasicImage&) = default;
};

using HdrImage = BasicImage<float>;

/// Checks the radiance-image invariants: consistent length, finite, non-negative.
template <typename T>
void validate_radiance(const BasicImage<T>& img)
{
    if (img.data.size() != img.pixel_count() * BasicImage<T>::channels)
        throw StructuralError("image data length does not match its dimensions");
    for (T v : img.data)
    {
        if (!std::isfinite(v))
            throw NumericError("image contains a non-finite value");
        if (v < T(0))
            throw ParameterError("radiance image contains a negative value");
    }
}

template <typename To, typename From>
BasicImage<To> image_cast(const BasicImage<From>& img)
{
    BasicImage<To> out;
    out.width  = img.width;
    out.height = img.height;
    out.data.assign(img.data.begin(), img.data.end());
    return out;
}

/// 8-bit display image, row-major RGB.
struct LdrImage
{
    int                       width  = 0;
    int                       height = 0;
    std::vector<std::uint8_t> data;

    LdrImage() = default;
    LdrImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill)
    {
    }

    std::uint8_t& operator()(int x, int y, int c)
    {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
                    static_cast<std::size_t>(c)];
    }
    std::uint8_t operator()(int x, int y, int c) const
    {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
                    static_cast<std::size_t>(c)];
    }

    friend bool operator==(const LdrImage&, const LdrImage&) = default;
};

} // namespace photoapp
