// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Desk-scale stand-in for a light stage: an orthographically viewed unit
// sphere with a smooth random albedo texture, rendered once per basis light.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "photoapp/envmap.hpp"
#include "photoapp/error.hpp"
#include "photoapp/image.hpp"
#include "photoapp/olat.hpp"

namespace photoapp {

/// Seeded albedo field on the unit sphere: base colour modulated by a few
/// low-frequency sinusoids of the surface normal.
class AlbedoField
{
public:
    explicit AlbedoField(std::uint64_t seed)
    {
        std::mt19937_64                        rng(seed);
        std::uniform_real_distribution<double> base(0.25, 0.9), amp(-0.15, 0.15), freq(1.5, 4.0),
            phase(0.0, kTwoPi);
        std::normal_distribution<double> gauss;
        for (auto& b : m_base)
            b = base(rng);
        for (auto& w : m_waves)
        {
            w.k = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized() * freq(rng);
            w.phase = phase(rng);
            for (auto& a : w.amp)
                a = amp(rng);
        }
    }

    std::array<double, 3> operator()(const Vec3& n) const
    {
        std::array<double, 3> rho{};
        for (int c = 0; c < 3; ++c)
        {
            double t = 1.0;
            for (const auto& w : m_waves)
                t += w.amp[static_cast<std::size_t>(c)] * std::sin(w.k.dot(n) + w.phase);
            rho[static_cast<std::size_t>(c)] = m_base[static_cast<std::size_t>(c)] * std::max(0.05, t);
        }
        return rho;
    }

private:
    struct Wave
    {
        Vec3                  k;
        double                phase = 0.0;
        std::array<double, 3> amp{};
    };
    std::array<double, 3> m_base{};
    std::array<Wave, 6>   m_waves{};
};

struct WorldGroundTruth
{
    HdrImage                  albedo;  ///< per-pixel albedo, 0 off the sphere
    BasicImage<float>         normals; ///< world-space unit normals, 0 off the sphere
    std::vector<std::uint8_t> mask;    ///< 1 where the sphere covers the pixel
};

struct SynthWorld
{
    OlatStack        stack;
    WorldGroundTruth truth;
};

/// Renders the sphere for one camera. Pixel (px, py) views along the camera's
/// -Z axis; image x is camera +X and image y is camera -Y. Image i holds
/// albedo * max(0, n . d_i) * Omega_i.
inline SynthWorld synth_lambertian_world(std::uint64_t seed, int resolution, const LightBasis& basis,
                                         const CameraPose& pose = {})
{
    if (resolution < 16)
        throw ParameterError("synthetic world resolution must be at least 16");
    basis.validate();
    const AlbedoField     albedo(seed);
    const Eigen::Matrix3d R = pose.rotation();
    const int             n = basis.size();

    SynthWorld world;
    world.stack.pose = pose;
    world.truth.albedo  = HdrImage(resolution, resolution);
    world.truth.normals = BasicImage<float>(resolution, resolution);
    world.truth.mask.assign(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution), 0);
    world.stack.images.assign(static_cast<std::size_t>(n), HdrImage(resolution, resolution));

    for (int py = 0; py < resolution; ++py)
        for (int px = 0; px < resolution; ++px)
        {
            double sx = 2.0 * (px + 0.5) / resolution - 1.0;
            double sy = 1.0 - 2.0 * (py + 0.5) / resolution;
            double r2 = sx * sx + sy * sy;
            if (r2 >= 1.0)
                continue;
            Vec3 normal = R * Vec3(sx, sy, std::sqrt(1.0 - r2));
            auto rho    = albedo(normal);
            world.truth.mask[static_cast<std::size_t>(py) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(px)] = 1;
            for (int c = 0; c < 3; ++c)
            {
                world.truth.albedo(px, py, c)  = static_cast<float>(rho[static_cast<std::size_t>(c)]);
                world.truth.normals(px, py, c) = static_cast<float>(normal[c]);
            }
            for (int i = 0; i < n; ++i)
            {
                double shade = std::max(0.0, normal.dot(basis.directions[static_cast<std::size_t>(i)])) *
                               basis.solid_angles[static_cast<std::size_t>(i)];
                if (shade == 0.0)
                    continue;
                auto& img = world.stack.images[static_cast<std::size_t>(i)];
                for (int c = 0; c < 3; ++c)
                    img(px, py, c) = static_cast<float>(rho[static_cast<std::size_t>(c)] * shade);
            }
        }
    return world;
}

/// Seeded outdoor-style environment: sky gradient over a dim ground plus one
/// or two sharp coloured sun lobes.
inline LatLongEnvMap synth_env_map(std::uint64_t seed, int width = 64, int height = 32)
{
    if (width < 2 || height < 1)
        throw ParameterError("environment map must be at least 2x1 texels");
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double>       gauss;

    auto colour = [&](double lo, double hi)
    { return std::array<double, 3>{lo + (hi - lo) * unit(rng), lo + (hi - lo) * unit(rng), lo + (hi - lo) * unit(rng)}; };

    const auto sky    = colour(0.2, 1.2);
    const auto ground = colour(0.05, 0.4);
    struct Sun
    {
        Vec3                  dir;
        std::array<double, 3> rgb;
        double                sharpness;
    };
    std::vector<Sun> suns(1 + (unit(rng) < 0.5 ? 1 : 0));
    for (auto& s : suns)
    {
        s.dir       = Vec3(gauss(rng), std::abs(gauss(rng)) * 0.8 - 0.1, gauss(rng)).normalized();
        s.rgb       = colour(5.0, 60.0);
        s.sharpness = 20.0 + 100.0 * unit(rng);
    }

    HdrImage img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
        {
            Vec3 d = uv_to_direction((x + 0.5) / width, (y + 0.5) / height);
            for (int c = 0; c < 3; ++c)
            {
                double v = d.y() >= 0.0 ? sky[static_cast<std::size_t>(c)] * (0.3 + 0.7 * d.y())
                                        : ground[static_cast<std::size_t>(c)];
                for (const auto& s : suns)
                    v += s.rgb[static_cast<std::size_t>(c)] * std::exp(s.sharpness * (d.dot(s.dir) - 1.0));
                img(x, y, c) = static_cast<float>(v);
            }
        }
    return LatLongEnvMap(std::move(img));
}

} // namespace photoapp
