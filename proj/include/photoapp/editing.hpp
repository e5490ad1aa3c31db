// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <variant>

#include "photoapp/generator.hpp"
#include "photoapp/image.hpp"
#include "photoapp/latent.hpp"
#include "photoapp/photoappnet.hpp"

namespace photoapp {

/// Editing source: a latent code, or an image to be projected by the encoder.
using EditSource = std::variant<LatentCode<float>, HdrImage>;

inline LatentCode<float> source_latent(const Generator& generator, const EditSource& source)
{
    if (const auto* latent = std::get_if<LatentCode<float>>(&source))
        return *latent;
    if (!generator.has_encoder())
        throw CapabilityError("editing an image requires a generator with an encoder");
    return generator.encode_image(std::get<HdrImage>(source));
}

/// Edited latent code for the given target condition.
inline LatentCode<float> edit_latent(const NetConfig& cfg, const NetParams<float>& params, const LatentCode<float>& source,
                                     const ConditionVector& cond)
{
    auto input = condition_input<float>(cfg, cond);
    return forward(params, source, std::span<const float>(input)).target;
}

/// decode(PhotoAppNet(encode-or-given latent, cond)), clamped to the display range [0, 1].
inline HdrImage edit(const Generator& generator, const NetConfig& cfg, const NetParams<float>& params,
                     const EditSource& source, const ConditionVector& cond)
{
    auto     latent = edit_latent(cfg, params, source_latent(generator, source), cond);
    HdrImage out    = generator.decode_image(latent);
    for (float& v : out.data)
        v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

} // namespace photoapp
