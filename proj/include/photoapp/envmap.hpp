// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Lat-long environment maps and their reduction onto a discrete light basis.
//
// Convention (y up): u in [0,1) maps to azimuth phi = 2*pi*u, v in [0,1] to the
// polar angle theta = pi*v measured from +Y, and
//     d = (sin(theta) cos(phi), cos(theta), sin(theta) sin(phi)).
// Texel (x, y) has its centre at u = (x + 0.5)/W, v = (y + 0.5)/H.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/image.hpp"
#include "photoapp/parallel.hpp"

namespace photoapp {

using Vec3 = Eigen::Vector3d;

inline constexpr int    kBasisLightCount = 150;
inline constexpr double kPi              = std::numbers::pi;
inline constexpr double kTwoPi           = 2.0 * std::numbers::pi;
inline constexpr double kFourPi          = 4.0 * std::numbers::pi;

struct LatLongEnvMap
{
    HdrImage image;

    LatLongEnvMap() = default;
    explicit LatLongEnvMap(HdrImage img) : image(std::move(img)) { validate(); }

    int width() const { return image.width; }
    int height() const { return image.height; }

    void validate() const
    {
        if (image.width < 2 || image.height < 1)
            throw ParameterError("environment map must be at least 2x1 texels");
        validate_radiance(image);
    }
};

struct LightBasis
{
    std::vector<Vec3>   directions;
    std::vector<double> solid_angles;

    int size() const { return static_cast<int>(directions.size()); }

    void validate() const
    {
        if (directions.size() != solid_angles.size())
            throw StructuralError("light basis has mismatched direction/solid-angle counts");
        if (directions.empty())
            throw ParameterError("light basis is empty");
        for (std::size_t i = 0; i < directions.size(); ++i)
        {
            if (std::abs(directions[i].norm() - 1.0) > 1e-6)
                throw ParameterError("light basis direction " + std::to_string(i) + " is not unit length");
            if (!(solid_angles[i] > 0.0) || !std::isfinite(solid_angles[i]))
                throw ParameterError("light basis solid angle " + std::to_string(i) + " must be positive");
        }
    }
};

/// Per-light RGB energy, flattened light-major: (l0.r, l0.g, l0.b, l1.r, ...).
struct LightWeights
{
    std::vector<double> values;

    LightWeights() = default;
    explicit LightWeights(int lights) : values(static_cast<std::size_t>(lights) * 3, 0.0) {}

    int light_count() const { return static_cast<int>(values.size() / 3); }

    double&       operator()(int light, int c) { return values[static_cast<std::size_t>(light) * 3 + static_cast<std::size_t>(c)]; }
    double        operator()(int light, int c) const { return values[static_cast<std::size_t>(light) * 3 + static_cast<std::size_t>(c)]; }

    void validate() const
    {
        if (values.size() % 3 != 0)
            throw StructuralError("light weight vector length must be a multiple of 3");
        for (double v : values)
        {
            if (!std::isfinite(v))
                throw NumericError("light weights contain a non-finite value");
            if (v < 0.0)
                throw ParameterError("light weights must be non-negative");
        }
    }

    double total() const
    {
        double s = 0.0;
        for (double v : values)
            s += v;
        return s;
    }

    /// Indicator of one light: (1,1,1) at `light`, zero elsewhere.
    static LightWeights indicator(int lights, int light)
    {
        LightWeights w(lights);
        for (int c = 0; c < 3; ++c)
            w(light, c) = 1.0;
        return w;
    }

    friend bool operator==(const LightWeights&, const LightWeights&) = default;
};

/// Spherical Fibonacci lattice with uniform solid angles 4*pi/n.
inline LightBasis fibonacci_basis(int n = kBasisLightCount)
{
    if (n < 2)
        throw ParameterError("a Fibonacci basis needs at least two points");
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    LightBasis   basis;
    basis.directions.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
    {
        double y   = 1.0 - (2.0 * i + 1.0) / n;
        double r   = std::sqrt(std::max(0.0, 1.0 - y * y));
        double phi = golden_angle * i;
        basis.directions.push_back(Vec3(r * std::cos(phi), y, r * std::sin(phi)).normalized());
    }
    basis.solid_angles.assign(static_cast<std::size_t>(n), kFourPi / n);
    return basis;
}

/// Parses the light-basis text format: one light per line, `x y z [omega]`,
/// '#' starts a comment. Directions are normalized; omitted omegas become 4*pi/n.
inline LightBasis parse_basis_text(const std::string& text)
{
    LightBasis         basis;
    std::istringstream lines(text);
    std::string        line;
    int                with_omega = 0, line_no = 0;
    while (std::getline(lines, line))
    {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::vector<double> v;
        std::string         tok;
        while (fields >> tok)
        {
            try
            {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size())
                    throw std::invalid_argument(tok);
            }
            catch (const std::exception&)
            {
                throw FormatError("basis line " + std::to_string(line_no) + ": bad number '" + tok + "'");
            }
        }
        if (v.empty())
            continue;
        if (v.size() != 3 && v.size() != 4)
            throw FormatError("basis line " + std::to_string(line_no) + ": expected 'x y z [omega]'");
        Vec3 d(v[0], v[1], v[2]);
        if (!(d.norm() > 0.0))
            throw FormatError("basis line " + std::to_string(line_no) + ": zero direction");
        basis.directions.push_back(d.normalized());
        basis.solid_angles.push_back(v.size() == 4 ? v[3] : 0.0);
        with_omega += v.size() == 4 ? 1 : 0;
    }
    if (basis.directions.size() < 2)
        throw FormatError("basis file must list at least two lights");
    if (with_omega != 0 && with_omega != basis.size())
        throw FormatError("basis file must give omega for all lights or for none");
    if (with_omega == 0)
        basis.solid_angles.assign(basis.directions.size(), kFourPi / basis.size());
    basis.validate();
    return basis;
}

inline std::string format_basis_text(const LightBasis& basis)
{
    std::ostringstream out;
    out.precision(17);
    out << "# x y z omega_steradians\n";
    for (int i = 0; i < basis.size(); ++i)
    {
        const auto& d = basis.directions[static_cast<std::size_t>(i)];
        out << d.x() << ' ' << d.y() << ' ' << d.z() << ' ' << basis.solid_angles[static_cast<std::size_t>(i)] << '\n';
    }
    return out.str();
}

inline Vec3 uv_to_direction(double u, double v)
{
    const double phi = kTwoPi * u, theta = kPi * v;
    const double s   = std::sin(theta);
    return {s * std::cos(phi), std::cos(theta), s * std::sin(phi)};
}

inline std::pair<double, double> direction_to_uv(const Vec3& d)
{
    if (std::abs(d.norm() - 1.0) > 1e-4)
        throw ParameterError("direction_to_uv expects a unit vector");
    double theta = std::acos(std::clamp(d.y(), -1.0, 1.0));
    double phi   = std::atan2(d.z(), d.x());
    if (phi < 0.0)
        phi += kTwoPi;
    double u = phi / kTwoPi;
    if (u >= 1.0)
        u -= 1.0;
    return {u, theta / kPi};
}

/// Solid angle of any texel in row y: (2*pi/W)(pi/H) sin(theta_y).
inline double texel_solid_angle(int y, int width, int height)
{
    const double theta = kPi * (y + 0.5) / height;
    return (kTwoPi / width) * (kPi / height) * std::sin(theta);
}

/// Texelwise quadrature of the environment's radiance over the sphere, per channel.
inline std::array<double, 3> integrate_env(const LatLongEnvMap& env)
{
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (int y = 0; y < env.height(); ++y)
    {
        const double domega = texel_solid_angle(y, env.width(), env.height());
        auto         row    = env.image.row(y);
        for (int x = 0; x < env.width(); ++x)
            for (int c = 0; c < 3; ++c)
                sum[static_cast<std::size_t>(c)] += static_cast<double>(row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)]) * domega;
    }
    return sum;
}

/// Index of the basis light with the largest dot product (first one on ties).
inline int nearest_light(const LightBasis& basis, const Vec3& d)
{
    int    best     = 0;
    double best_dot = -2.0;
    for (int i = 0; i < basis.size(); ++i)
    {
        double dot = basis.directions[static_cast<std::size_t>(i)].dot(d);
        if (dot > best_dot)
        {
            best_dot = dot;
            best     = i;
        }
    }
    return best;
}

/// Bins every texel's radiance * solid angle into its nearest basis light.
/// Rows are processed in fixed blocks whose partial sums are reduced in block
/// order, so the result does not depend on the worker count.
inline LightWeights resample_to_basis(const LatLongEnvMap& env, const LightBasis& basis)
{
    env.validate();
    basis.validate();
    const int W = env.width(), H = env.height(), n = basis.size();
    constexpr int kRowsPerBlock = 8;
    const int     blocks        = (H + kRowsPerBlock - 1) / kRowsPerBlock;
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(blocks));

    parallel_for(0, blocks,
                 [&](int b)
                 {
                     auto& acc = partial[static_cast<std::size_t>(b)];
                     acc.assign(static_cast<std::size_t>(n) * 3, 0.0);
                     const int y_end = std::min(H, (b + 1) * kRowsPerBlock);
                     for (int y = b * kRowsPerBlock; y < y_end; ++y)
                     {
                         const double domega = texel_solid_angle(y, W, H);
                         const double v      = (y + 0.5) / H;
                         auto         row    = env.image.row(y);
                         for (int x = 0; x < W; ++x)
                         {
                             const int   light = nearest_light(basis, uv_to_direction((x + 0.5) / W, v));
                             const auto  px    = static_cast<std::size_t>(x) * 3;
                             const auto  dst   = static_cast<std::size_t>(light) * 3;
                             for (std::size_t c = 0; c < 3; ++c)
                                 acc[dst + c] += static_cast<double>(row[px + c]) * domega;
                         }
                     }
                 });

    LightWeights w(n);
    for (const auto& acc : partial)
        for (std::size_t k = 0; k < acc.size(); ++k)
            w.values[k] += acc[k];
    return w;
}

/// Rotates the map about +Y: output azimuth phi samples the input at phi - yaw,
/// linearly interpolated along the row with wrap-around.
inline LatLongEnvMap rotate_env(const LatLongEnvMap& env, double yaw)
{
    env.validate();
    const int W = env.width(), H = env.height();
    // texel-space shift; yaw = 0 yields exact integer source positions
    const double shift = yaw * W / kTwoPi;
    HdrImage     out(W, H);
    for (int x = 0; x < W; ++x)
    {
        double src = static_cast<double>(x) - shift;
        double fl  = std::floor(src);
        double t   = src - fl;
        auto   wrap = [W](long long i) { return static_cast<int>(((i % W) + W) % W); };
        int    x0  = wrap(static_cast<long long>(fl));
        int    x1  = wrap(static_cast<long long>(fl) + 1);
        for (int y = 0; y < H; ++y)
            for (int c = 0; c < 3; ++c)
            {
                double a = env.image(x0, y, c), b = env.image(x1, y, c);
                out(x, y, c) = static_cast<float>(t == 0.0 ? a : (1.0 - t) * a + t * b);
            }
    }
    return LatLongEnvMap(std::move(out));
}

/// Scales weights so that they sum to one (no-op for an all-zero vector).
inline LightWeights normalize_unit_energy(LightWeights w)
{
    double total = w.total();
    if (total > 0.0)
        for (double& v : w.values)
            v /= total;
    return w;
}

} // namespace photoapp
