// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "photoapp/envmap.hpp"
#include "photoapp/error.hpp"
#include "photoapp/olat.hpp"

namespace photoapp {

inline constexpr int kLatentBlocks = 18;
inline constexpr int kLatentDim    = 512;

/// Per-resolution latent code: `blocks` vectors of `dim` values.
template <typename T>
struct LatentCode
{
    int            blocks = kLatentBlocks;
    int            dim    = kLatentDim;
    std::vector<T> values;

    LatentCode() : values(static_cast<std::size_t>(kLatentBlocks) * kLatentDim, T(0)) {}
    LatentCode(int b, int d, T fill = T(0)) : blocks(b), dim(d), values(static_cast<std::size_t>(b) * static_cast<std::size_t>(d), fill)
    {
        if (b <= 0 || d <= 0)
            throw ParameterError("latent code dimensions must be positive");
    }

    std::size_t size() const { return values.size(); }

    std::span<T>       block(int k) { return {values.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }
    std::span<const T> block(int k) const { return {values.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }

    bool same_shape(const LatentCode& o) const { return blocks == o.blocks && dim == o.dim; }

    void validate() const
    {
        if (values.size() != static_cast<std::size_t>(blocks) * static_cast<std::size_t>(dim))
            throw StructuralError("latent code length does not match its shape");
        for (T v : values)
            if (!std::isfinite(v))
                throw NumericError("latent code contains a non-finite value");
    }

    double norm() const
    {
        double s = 0.0;
        for (T v : values)
            s += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(s);
    }

    friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

template <typename To, typename From>
LatentCode<To> latent_cast(const LatentCode<From>& l)
{
    LatentCode<To> out(l.blocks, l.dim);
    for (std::size_t i = 0; i < l.values.size(); ++i)
        out.values[i] = static_cast<To>(l.values[i]);
    return out;
}

template <typename T>
nlohmann::json latent_to_json(const LatentCode<T>& l)
{
    return {{"blocks", l.blocks}, {"dim", l.dim}, {"values", l.values}};
}

template <typename T>
LatentCode<T> latent_from_json(const nlohmann::json& j)
{
    try
    {
        LatentCode<T> l(j.at("blocks").get<int>(), j.at("dim").get<int>());
        l.values = j.at("values").get<std::vector<T>>();
        l.validate();
        return l;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(std::string("malformed latent code: ") + e.what());
    }
}

/// Target illumination, target camera pose, and the change flags.
struct ConditionVector
{
    LightWeights env;
    CameraPose   pose;
    int          p = 0; ///< 1 when the target pose differs from the source
    int          q = 0; ///< 1 when the target illumination differs (only fed to use_q networks)

    void validate() const
    {
        env.validate();
        pose.normalized();
        if ((p != 0 && p != 1) || (q != 0 && q != 1))
            throw ParameterError("condition flags must be 0 or 1");
    }
};

} // namespace photoapp
