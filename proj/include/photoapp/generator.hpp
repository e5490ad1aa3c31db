// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/image.hpp"
#include "photoapp/latent.hpp"

namespace photoapp {

/// Frozen image generator in latent space, optionally with an encoder and a
/// vector-Jacobian product for backpropagating image-space losses.
template <typename T>
class BasicGenerator
{
public:
    virtual ~BasicGenerator() = default;

    virtual int width() const         = 0;
    virtual int height() const        = 0;
    virtual int latent_blocks() const = 0;
    virtual int latent_dim() const    = 0;

    /// Interleaved RGB raster of width*height*3 values.
    virtual std::vector<T> decode(const LatentCode<T>& latent) const = 0;

    virtual bool          has_encoder() const { return false; }
    virtual LatentCode<T> encode(std::span<const T> /*image*/) const
    {
        throw CapabilityError("generator has no encoder");
    }

    virtual bool          has_jacobian() const { return false; }
    /// (d decode / d latent)^T applied to an image-space gradient.
    virtual LatentCode<T> pullback(std::span<const T> /*d_image*/) const
    {
        throw CapabilityError("generator does not provide a latent Jacobian");
    }

    BasicImage<T> decode_image(const LatentCode<T>& latent) const
    {
        BasicImage<T> img;
        img.width  = width();
        img.height = height();
        img.data   = decode(latent);
        return img;
    }

    LatentCode<T> encode_image(const BasicImage<T>& img) const
    {
        if (img.width != width() || img.height != height())
            throw StructuralError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                  ", generator works at " + std::to_string(width()) + "x" + std::to_string(height()));
        return encode(img.data);
    }

    std::size_t image_size() const { return static_cast<std::size_t>(width()) * static_cast<std::size_t>(height()) * 3; }
};

using Generator = BasicGenerator<float>;

/// Seeded random orthogonal transform on R^n: layers of (random permutation,
/// random Givens rotation of adjacent pairs). Applying it costs O(layers * n)
/// and its transpose is its exact inverse.
template <typename T>
class RandomOrthogonal
{
public:
    RandomOrthogonal() = default;
    RandomOrthogonal(std::size_t n, std::uint64_t seed, int layers) : m_n(n)
    {
        std::mt19937_64                        rng(seed);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
        m_layers.resize(static_cast<std::size_t>(layers));
        for (auto& l : m_layers)
        {
            l.perm.resize(n);
            std::iota(l.perm.begin(), l.perm.end(), 0u);
            std::shuffle(l.perm.begin(), l.perm.end(), rng);
            l.cos.resize(n / 2);
            l.sin.resize(n / 2);
            for (std::size_t j = 0; j < n / 2; ++j)
            {
                double a = angle(rng);
                l.cos[j] = static_cast<T>(std::cos(a));
                l.sin[j] = static_cast<T>(std::sin(a));
            }
        }
    }

    std::size_t size() const { return m_n; }

    void apply(std::vector<T>& v) const
    {
        std::vector<T> tmp(m_n);
        for (const auto& l : m_layers)
        {
            for (std::size_t j = 0; j < m_n; ++j)
                tmp[j] = v[l.perm[j]];
            for (std::size_t j = 0; j < m_n / 2; ++j)
            {
                T a = tmp[2 * j], b = tmp[2 * j + 1];
                tmp[2 * j]     = l.cos[j] * a - l.sin[j] * b;
                tmp[2 * j + 1] = l.sin[j] * a + l.cos[j] * b;
            }
            v.swap(tmp);
        }
    }

    void apply_transpose(std::vector<T>& v) const
    {
        std::vector<T> tmp(m_n);
        for (auto it = m_layers.rbegin(); it != m_layers.rend(); ++it)
        {
            const auto& l = *it;
            for (std::size_t j = 0; j < m_n / 2; ++j)
            {
                T a = v[2 * j], b = v[2 * j + 1];
                v[2 * j]     = l.cos[j] * a + l.sin[j] * b;
                v[2 * j + 1] = -l.sin[j] * a + l.cos[j] * b;
            }
            for (std::size_t j = 0; j < m_n; ++j)
                tmp[l.perm[j]] = v[j];
            v.swap(tmp);
        }
    }

private:
    struct Layer
    {
        std::vector<std::uint32_t> perm;
        std::vector<T>             cos, sin;
    };
    std::size_t        m_n = 0;
    std::vector<Layer> m_layers;
};

struct ToyGeneratorSpec
{
    std::uint64_t seed       = 7;
    int           width      = 64;
    int           height     = 64;
    int           blocks     = kLatentBlocks;
    int           latent_dim = kLatentDim;

    friend bool operator==(const ToyGeneratorSpec&, const ToyGeneratorSpec&) = default;
};

/// Exactly invertible linear stand-in for a pretrained generator:
///     decode(L) = c + A vec(L),  A = sqrt(n/d) * Q[:, :d]
/// with Q a seeded random orthogonal n x n transform (n = image values,
/// d = latent values), so every entry of A has variance 1/d and A has full
/// column rank. The encoder is the left inverse A^T / (n/d); the bias image c
/// is mid-grey.
template <typename T>
class BasicToyGenerator final : public BasicGenerator<T>
{
public:
    static constexpr T kBias = T(0.5);

    explicit BasicToyGenerator(const ToyGeneratorSpec& spec) : m_spec(spec)
    {
        const std::size_t n = static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height) * 3;
        const std::size_t d = static_cast<std::size_t>(spec.blocks) * static_cast<std::size_t>(spec.latent_dim);
        if (spec.width <= 0 || spec.height <= 0 || spec.blocks <= 0 || spec.latent_dim <= 0)
            throw ConfigurationError("toy generator dimensions must be positive");
        if (n < d)
            throw ConfigurationError("toy generator image (" + std::to_string(n) + " values) is smaller than its latent (" +
                                     std::to_string(d) + " values)");
        int layers = 4;
        while ((std::size_t{1} << (layers / 2)) < n)
            ++layers;
        m_mix   = RandomOrthogonal<T>(n, spec.seed, layers + 8);
        m_scale = static_cast<T>(std::sqrt(static_cast<double>(n) / static_cast<double>(d)));
        verify_inverse();
    }

    const ToyGeneratorSpec& spec() const { return m_spec; }

    int width() const override { return m_spec.width; }
    int height() const override { return m_spec.height; }
    int latent_blocks() const override { return m_spec.blocks; }
    int latent_dim() const override { return m_spec.latent_dim; }

    std::vector<T> decode(const LatentCode<T>& latent) const override
    {
        check_latent(latent);
        std::vector<T> v(m_mix.size(), T(0));
        for (std::size_t i = 0; i < latent.values.size(); ++i)
            v[i] = latent.values[i] * m_scale;
        m_mix.apply(v);
        for (T& x : v)
            x += kBias;
        return v;
    }

    bool has_encoder() const override { return true; }

    LatentCode<T> encode(std::span<const T> image) const override
    {
        if (image.size() != m_mix.size())
            throw StructuralError("image size does not match the generator");
        std::vector<T> v(image.begin(), image.end());
        for (T& x : v)
            x -= kBias;
        m_mix.apply_transpose(v);
        LatentCode<T> l(m_spec.blocks, m_spec.latent_dim);
        for (std::size_t i = 0; i < l.values.size(); ++i)
            l.values[i] = v[i] / m_scale;
        return l;
    }

    bool has_jacobian() const override { return true; }

    LatentCode<T> pullback(std::span<const T> d_image) const override
    {
        if (d_image.size() != m_mix.size())
            throw StructuralError("image gradient size does not match the generator");
        std::vector<T> v(d_image.begin(), d_image.end());
        m_mix.apply_transpose(v);
        LatentCode<T> l(m_spec.blocks, m_spec.latent_dim);
        for (std::size_t i = 0; i < l.values.size(); ++i)
            l.values[i] = v[i] * m_scale;
        return l;
    }

private:
    void check_latent(const LatentCode<T>& latent) const
    {
        if (latent.blocks != m_spec.blocks || latent.dim != m_spec.latent_dim)
            throw StructuralError("latent shape does not match the generator");
    }

    void verify_inverse() const
    {
        std::mt19937_64                 rng(m_spec.seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> gauss;
        LatentCode<T>                   probe(m_spec.blocks, m_spec.latent_dim);
        for (T& x : probe.values)
            x = static_cast<T>(gauss(rng));
        auto back = encode(decode(probe));
        for (std::size_t i = 0; i < probe.values.size(); ++i)
            if (!(std::abs(back.values[i] - probe.values[i]) <= T(1e-4)))
                throw NumericError("toy generator failed its left-inverse check");
    }

    ToyGeneratorSpec    m_spec;
    RandomOrthogonal<T> m_mix;
    T                   m_scale = T(1);
};

using ToyGenerator = BasicToyGenerator<float>;

template <typename T = float>
std::shared_ptr<BasicGenerator<T>> toy_generator(std::uint64_t seed, int image_size = 64)
{
    ToyGeneratorSpec spec;
    spec.seed   = seed;
    spec.width  = image_size;
    spec.height = image_size;
    return std::make_shared<BasicToyGenerator<T>>(spec);
}

/// decode(encode(image)): the closest image the generator can produce.
template <typename T>
BasicImage<T> project_to_range(const BasicGenerator<T>& generator, const BasicImage<T>& image)
{
    return generator.decode_image(generator.encode_image(image));
}

/// Hides the encoder and Jacobian of another generator.
template <typename T>
class DecodeOnlyGenerator final : public BasicGenerator<T>
{
public:
    explicit DecodeOnlyGenerator(std::shared_ptr<const BasicGenerator<T>> inner) : m_inner(std::move(inner)) {}

    int            width() const override { return m_inner->width(); }
    int            height() const override { return m_inner->height(); }
    int            latent_blocks() const override { return m_inner->latent_blocks(); }
    int            latent_dim() const override { return m_inner->latent_dim(); }
    std::vector<T> decode(const LatentCode<T>& latent) const override { return m_inner->decode(latent); }

private:
    std::shared_ptr<const BasicGenerator<T>> m_inner;
};

} // namespace photoapp
