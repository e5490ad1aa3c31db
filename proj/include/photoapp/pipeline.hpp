// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Glue shared by the command-line tool and the editing service: file-type
// dispatch, evaluation of a checkpoint on pair lists.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photoapp/checkpoint.hpp"
#include "photoapp/dataset.hpp"
#include "photoapp/editing.hpp"
#include "photoapp/generator.hpp"
#include "photoapp/metrics.hpp"
#include "photoapp/png_io.hpp"
#include "photoapp/radiance_io.hpp"
#include "photoapp/tonemap.hpp"
#include "photoapp/trainer.hpp"

namespace photoapp {

namespace fs = std::filesystem;

inline std::string lower_extension(const fs::path& p)
{
    std::string ext = p.extension().string();
    for (char& c : ext)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

inline std::shared_ptr<const Generator> make_generator(const ToyGeneratorSpec& spec)
{
    return std::make_shared<ToyGenerator>(spec);
}

inline nlohmann::json weights_to_json(const LightWeights& w) { return {{"lights", w.light_count()}, {"weights", w.values}}; }

inline LightWeights weights_from_json(const nlohmann::json& j)
{
    LightWeights w;
    try
    {
        w.values = (j.is_array() ? j : j.at("weights")).get<std::vector<double>>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(std::string("malformed light weights: ") + e.what());
    }
    w.validate();
    return w;
}

/// An environment given as a lat-long .hdr (resampled onto `basis`) or as a
/// JSON weight vector.
inline LightWeights load_env_weights(const fs::path& path, const LightBasis& basis)
{
    if (lower_extension(path) == ".json")
    {
        auto w = weights_from_json(nlohmann::json::parse(read_text(path)));
        if (w.light_count() != basis.size())
            throw StructuralError("weight file has " + std::to_string(w.light_count()) + " lights, basis has " +
                                  std::to_string(basis.size()));
        return w;
    }
    return resample_to_basis(LatLongEnvMap(load_hdr(path)), basis);
}

/// Display-range image from .png (divided by 255) or .hdr (as stored).
inline HdrImage load_display_image(const fs::path& path)
{
    if (lower_extension(path) == ".png")
        return ldr_to_float(load_png(path));
    return load_hdr(path);
}

/// Writes .png (tonemapped) or .hdr (linear).
inline void save_image(const fs::path& path, const HdrImage& img, double exposure = kDefaultExposure,
                       double gamma = kDefaultGamma)
{
    const auto ext = lower_extension(path);
    if (ext == ".png")
        save_png(path, tonemap(img, exposure, gamma));
    else if (ext == ".hdr")
        save_hdr(path, img);
    else
        throw ParameterError("output image must end in .png or .hdr: " + path.string());
}

/// Edit source from a latent JSON or an image file.
inline EditSource load_edit_source(const fs::path& path)
{
    if (lower_extension(path) == ".json")
        return latent_from_json<float>(nlohmann::json::parse(read_text(path)));
    return load_display_image(path);
}

/// Relit network-facing images projected onto the generator's range.
inline RelitCache projected_cache(const Dataset& ds, std::shared_ptr<const Generator> gen)
{
    return RelitCache(ds, [gen](const HdrImage& img) { return project_to_range(*gen, img); });
}

inline ConditionVector pair_condition(const Dataset& ds, const TrainingPair& pr)
{
    ConditionVector c;
    c.env  = ds.weights(pr.target.env);
    c.pose = ds.pose(pr.identity, pr.target.camera);
    c.p    = pr.p;
    c.q    = pr.q;
    return c;
}

/// Si-MSE / SSIM of edited sources against targets.
inline EvalReport evaluate_pairs(RelitCache& cache, const Generator& gen, const NetConfig& net,
                                 const NetParams<float>& params, const std::vector<TrainingPair>& pairs,
                                 std::string label)
{
    std::vector<std::pair<HdrImage, HdrImage>> preds;
    preds.reserve(pairs.size());
    for (const auto& pr : pairs)
    {
        const auto& src = cache.image(pr.identity, pr.source.camera, pr.source.env);
        const auto& dst = cache.image(pr.identity, pr.target.camera, pr.target.env);
        auto        out = edit(gen, net, params, src, pair_condition(cache.dataset(), pr));
        auto        gt  = dst;
        for (float& v : gt.data)
            v = std::clamp(v, 0.0f, 1.0f);
        preds.emplace_back(std::move(out), std::move(gt));
    }
    return evaluate(preds, std::move(label));
}

} // namespace photoapp
