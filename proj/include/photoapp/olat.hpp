// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "photoapp/envmap.hpp"
#include "photoapp/error.hpp"
#include "photoapp/image.hpp"
#include "photoapp/parallel.hpp"
#include "photoapp/radiance_io.hpp"

namespace photoapp {

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi)
        r += kTwoPi;
    return r;
}

/// Camera orientation as intrinsic Y-X-Z Euler angles in radians:
/// R = Ry(yaw) * Rx(pitch) * Rz(roll).
struct CameraPose
{
    double yaw   = 0.0;
    double pitch = 0.0;
    double roll  = 0.0;

    CameraPose normalized() const
    {
        if (!std::isfinite(yaw) || !std::isfinite(pitch) || !std::isfinite(roll))
            throw NumericError("camera pose angles must be finite");
        return {wrap_angle(yaw), wrap_angle(pitch), wrap_angle(roll)};
    }

    Eigen::Matrix3d rotation() const
    {
        using Eigen::AngleAxisd;
        return (AngleAxisd(yaw, Vec3::UnitY()) * AngleAxisd(pitch, Vec3::UnitX()) * AngleAxisd(roll, Vec3::UnitZ()))
            .toRotationMatrix();
    }

    friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

/// One identity seen from one camera under each basis light in turn.
struct OlatStack
{
    std::string           identity_id;
    std::string           camera_id;
    CameraPose            pose;
    std::vector<HdrImage> images;

    int light_count() const { return static_cast<int>(images.size()); }
    int width() const { return images.empty() ? 0 : images.front().width; }
    int height() const { return images.empty() ? 0 : images.front().height; }

    void validate(int expected_lights = kBasisLightCount) const
    {
        if (light_count() != expected_lights)
            throw StructuralError("OLAT stack has " + std::to_string(light_count()) + " images, expected " +
                                  std::to_string(expected_lights));
        for (const auto& img : images)
            if (!img.same_shape(images.front()) ||
                img.data.size() != img.pixel_count() * 3)
                throw StructuralError("OLAT stack images differ in size");
    }
};

/// out_c(x,y) = sum_i w_{i,c} * image_i,c(x,y), accumulated in double in light
/// order and rounded once to float. Rows are independent work items.
inline HdrImage relight(const OlatStack& stack, const LightWeights& weights)
{
    const int n = stack.light_count();
    if (n == 0)
        throw StructuralError("cannot relight an empty OLAT stack");
    stack.validate(n);
    if (weights.light_count() != n || weights.values.size() != static_cast<std::size_t>(n) * 3)
        throw StructuralError("light weight count does not match the OLAT stack");

    // lights with an all-zero weight contribute exact zeros and are skipped
    std::vector<int> active;
    for (int i = 0; i < n; ++i)
        if (weights(i, 0) != 0.0 || weights(i, 1) != 0.0 || weights(i, 2) != 0.0)
            active.push_back(i);

    const int   W = stack.width(), H = stack.height();
    HdrImage    out(W, H);
    const auto  row_len = static_cast<std::size_t>(W) * 3;
    parallel_for_chunks(0, H, 4,
                        [&](int y0, int y1)
                        {
                            std::vector<double> acc(row_len);
                            for (int y = y0; y < y1; ++y)
                            {
                                std::fill(acc.begin(), acc.end(), 0.0);
                                for (int i : active)
                                {
                                    const double wr = weights(i, 0), wg = weights(i, 1), wb = weights(i, 2);
                                    const float* src = stack.images[static_cast<std::size_t>(i)].row(y).data();
                                    for (std::size_t k = 0; k < row_len; k += 3)
                                    {
                                        acc[k] += wr * static_cast<double>(src[k]);
                                        acc[k + 1] += wg * static_cast<double>(src[k + 1]);
                                        acc[k + 2] += wb * static_cast<double>(src[k + 2]);
                                    }
                                }
                                float* dst = out.row(y).data();
                                for (std::size_t k = 0; k < row_len; ++k)
                                    dst[k] = static_cast<float>(acc[k]);
                            }
                        });
    return out;
}

inline std::filesystem::path olat_image_path(const std::filesystem::path& dir, int light)
{
    char name[32];
    std::snprintf(name, sizeof(name), "light_%03d.hdr", light);
    return dir / name;
}

/// Loads light_000.hdr ... light_{n-1}.hdr from `dir`.
inline OlatStack load_olat_stack(const std::filesystem::path& dir, int lights = kBasisLightCount)
{
    OlatStack stack;
    stack.images.reserve(static_cast<std::size_t>(lights));
    for (int i = 0; i < lights; ++i)
    {
        auto path = olat_image_path(dir, i);
        if (!std::filesystem::exists(path))
            throw IoError("missing OLAT image '" + path.string() + "'");
        stack.images.push_back(load_hdr(path));
    }
    stack.validate(lights);
    return stack;
}

inline void save_olat_stack(const std::filesystem::path& dir, const OlatStack& stack)
{
    std::filesystem::create_directories(dir);
    for (int i = 0; i < stack.light_count(); ++i)
        save_hdr(olat_image_path(dir, i), stack.images[static_cast<std::size_t>(i)]);
}

} // namespace photoapp
