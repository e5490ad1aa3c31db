// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "photoapp/adam.hpp"
#include "photoapp/checkpoint.hpp"
#include "photoapp/dataset.hpp"
#include "photoapp/features.hpp"
#include "photoapp/generator.hpp"
#include "photoapp/loss.hpp"
#include "photoapp/photoappnet.hpp"

namespace photoapp {

struct TrainConfig
{
    double           lr                = 1e-4;
    double           beta1             = 0.9;
    double           beta2             = 0.999;
    double           epsilon           = 1e-8;
    int              batch_size        = 1;
    int              max_steps         = 5000;
    std::uint64_t    seed              = 1;
    EnvNormalization env_normalization = EnvNormalization::none;
    PoseEncoding     pose_encoding     = PoseEncoding::raw;
    double           latent_weight     = 1.0;
    double           perceptual_weight = 1.0;
    bool             use_q             = false;
    std::uint64_t    generator_seed    = 7;
    int              image_size        = 64;
    int              checkpoint_every  = 0; ///< 0 disables intermediate checkpoints

    void validate() const
    {
        if (!(lr > 0.0))
            throw ConfigurationError("lr must be positive");
        if (batch_size < 1)
            throw ConfigurationError("batch_size must be at least 1");
        if (max_steps < 0)
            throw ConfigurationError("max_steps must be non-negative");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
            throw ConfigurationError("invalid Adam hyper-parameters");
        if (latent_weight < 0.0 || perceptual_weight < 0.0)
            throw ConfigurationError("loss weights must be non-negative");
        if (image_size < 16)
            throw ConfigurationError("image_size must be at least 16");
    }

    AdamConfig  adam() const { return {lr, beta1, beta2, epsilon}; }
    LossWeights loss_weights() const { return {latent_weight, perceptual_weight}; }

    NetConfig net_config() const
    {
        NetConfig cfg;
        cfg.shape             = make_shape(use_q, pose_encoding);
        cfg.env_normalization = env_normalization;
        cfg.pose_encoding     = pose_encoding;
        cfg.seed              = seed;
        return cfg;
    }

    ToyGeneratorSpec generator_spec() const
    {
        ToyGeneratorSpec g;
        g.seed   = generator_seed;
        g.width  = image_size;
        g.height = image_size;
        return g;
    }

    nlohmann::json to_json() const
    {
        return {{"lr", lr},
                {"beta1", beta1},
                {"beta2", beta2},
                {"epsilon", epsilon},
                {"batch_size", batch_size},
                {"max_steps", max_steps},
                {"seed", seed},
                {"env_normalization", env_normalization == EnvNormalization::none ? "none" : "unit_energy"},
                {"pose_encoding", pose_encoding == PoseEncoding::raw ? "raw" : "sincos"},
                {"latent_weight", latent_weight},
                {"perceptual_weight", perceptual_weight},
                {"use_q", use_q},
                {"generator_seed", generator_seed},
                {"image_size", image_size},
                {"checkpoint_every", checkpoint_every}};
    }

    /// Unknown keys are rejected; missing keys keep their defaults.
    static TrainConfig from_json(const nlohmann::json& j)
    {
        static const std::set<std::string> known{"lr",        "beta1",          "beta2",       "epsilon",
                                                 "batch_size", "max_steps",     "seed",        "env_normalization",
                                                 "pose_encoding", "latent_weight", "perceptual_weight", "use_q",
                                                 "generator_seed", "image_size", "checkpoint_every"};
        if (!j.is_object())
            throw ConfigurationError("training config must be a JSON object");
        for (const auto& [key, _] : j.items())
            if (!known.count(key))
                throw ConfigurationError("unknown training config key '" + key + "'");
        TrainConfig c;
        try
        {
            c.lr                = j.value("lr", c.lr);
            c.beta1             = j.value("beta1", c.beta1);
            c.beta2             = j.value("beta2", c.beta2);
            c.epsilon           = j.value("epsilon", c.epsilon);
            c.batch_size        = j.value("batch_size", c.batch_size);
            c.max_steps         = j.value("max_steps", c.max_steps);
            c.seed              = j.value("seed", c.seed);
            c.latent_weight     = j.value("latent_weight", c.latent_weight);
            c.perceptual_weight = j.value("perceptual_weight", c.perceptual_weight);
            c.use_q             = j.value("use_q", c.use_q);
            c.generator_seed    = j.value("generator_seed", c.generator_seed);
            c.image_size        = j.value("image_size", c.image_size);
            c.checkpoint_every  = j.value("checkpoint_every", c.checkpoint_every);
            auto norm           = j.value("env_normalization", std::string("none"));
            if (norm == "none")
                c.env_normalization = EnvNormalization::none;
            else if (norm == "unit_energy")
                c.env_normalization = EnvNormalization::unit_energy;
            else
                throw ConfigurationError("env_normalization must be 'none' or 'unit_energy'");
            auto enc = j.value("pose_encoding", std::string("raw"));
            if (enc == "raw")
                c.pose_encoding = PoseEncoding::raw;
            else if (enc == "sincos")
                c.pose_encoding = PoseEncoding::sincos;
            else
                throw ConfigurationError("pose_encoding must be 'raw' or 'sincos'");
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigurationError(std::string("bad training config value: ") + e.what());
        }
        c.validate();
        return c;
    }
};

/// One supervised example: network-facing source and target images plus the
/// target condition. Images are borrowed; the owner must outlive training.
struct TrainExample
{
    const HdrImage* source = nullptr;
    const HdrImage* target = nullptr;
    ConditionVector cond;
};

struct LossRecord
{
    int    step       = 0;
    double latent     = 0.0;
    double perceptual = 0.0;
    double total      = 0.0;

    friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

inline std::string loss_log_csv(const std::vector<LossRecord>& log)
{
    std::ostringstream out;
    out.precision(9);
    out << "step,latent_loss,perceptual_loss,total\n";
    for (const auto& r : log)
        out << r.step << ',' << r.latent << ',' << r.perceptual << ',' << r.total << '\n';
    return out.str();
}

/// Builds examples for dataset pairs; images come from (and stay owned by) the cache.
inline std::vector<TrainExample> examples_from_pairs(const std::vector<TrainingPair>& pairs, RelitCache& cache)
{
    const Dataset&            ds = cache.dataset();
    std::vector<TrainExample> out;
    out.reserve(pairs.size());
    for (const auto& pr : pairs)
    {
        pr.validate();
        TrainExample ex;
        ex.source    = &cache.image(pr.identity, pr.source.camera, pr.source.env);
        ex.target    = &cache.image(pr.identity, pr.target.camera, pr.target.env);
        ex.cond.env  = ds.weights(pr.target.env);
        ex.cond.pose = ds.pose(pr.identity, pr.target.camera);
        ex.cond.p    = pr.p;
        ex.cond.q    = pr.q;
        out.push_back(std::move(ex));
    }
    return out;
}

/// Optimizes PhotoAppNet against a frozen generator. One call to `step`
/// consumes one batch and applies one Adam update.
class Trainer
{
public:
    Trainer(const Generator& generator, const FeatureExtractor& phi, TrainConfig cfg)
        : m_gen(generator), m_phi(phi), m_cfg(std::move(cfg)), m_net(m_cfg.net_config())
    {
        m_cfg.validate();
        if (!generator.has_encoder() || !generator.has_jacobian())
            throw CapabilityError("training needs a generator with an encoder and a latent Jacobian");
        if (generator.latent_blocks() != m_net.shape.blocks || generator.latent_dim() != m_net.shape.latent_dim)
            throw ConfigurationError("generator latent shape does not match the network");
        m_params = NetParams<float>::init(m_net.shape, m_cfg.seed);
        m_grads  = NetParams<float>::zeros(m_net.shape);
        m_adam   = AdamState<float>::for_params(m_params);
    }

    const NetConfig&        net_config() const { return m_net; }
    const TrainConfig&      config() const { return m_cfg; }
    NetParams<float>&       params() { return m_params; }
    const NetParams<float>& params() const { return m_params; }
    AdamState<float>&       adam() { return m_adam; }
    int                     steps_taken() const { return m_step; }

    /// Encodes an image once and remembers the result by address.
    const LatentCode<float>& latent_of(const HdrImage& img)
    {
        auto it = m_latents.find(&img);
        if (it == m_latents.end())
            it = m_latents.emplace(&img, m_gen.encode_image(img)).first;
        return it->second;
    }

    /// Loss and accumulated gradient for one example (gradients are added to m_grads).
    LossRecord accumulate(const TrainExample& ex, double scale = 1.0)
    {
        const auto& source_latent = latent_of(*ex.source);
        const auto& target_latent = latent_of(*ex.target);
        auto        cond          = condition_input<float>(m_net, ex.cond);
        auto        fwd           = forward(m_params, source_latent, std::span<const float>(cond));
        auto        decoded       = m_gen.decode_image(fwd.target);
        auto        terms = total_loss(fwd.target, target_latent, decoded, *ex.target, m_phi, m_cfg.loss_weights());
        if (!std::isfinite(terms.total))
            throw NumericError("loss became non-finite at step " + std::to_string(m_step));

        LatentCode<float> d_latent = m_gen.pullback(terms.d_image.data);
        for (std::size_t i = 0; i < d_latent.values.size(); ++i)
            d_latent.values[i] = static_cast<float>(scale * (static_cast<double>(d_latent.values[i]) +
                                                             static_cast<double>(terms.d_latent.values[i])));
        backward_into(m_params, fwd.cache, d_latent, m_grads);
        return {m_step, terms.latent, terms.perceptual, terms.total};
    }

    LossRecord step(std::span<const TrainExample* const> batch)
    {
        if (batch.empty())
            throw ParameterError("empty training batch");
        m_grads.set_zero();
        LossRecord   rec{m_step, 0.0, 0.0, 0.0};
        const double scale = 1.0 / static_cast<double>(batch.size());
        for (const auto* ex : batch)
        {
            auto r = accumulate(*ex, scale);
            rec.latent += r.latent * scale;
            rec.perceptual += r.perceptual * scale;
            rec.total += r.total * scale;
        }
        adam_step(m_params, m_grads, m_adam, m_cfg.adam());
        ++m_step;
        return rec;
    }

    LossRecord step(const TrainExample& ex)
    {
        const TrainExample* one[1] = {&ex};
        return step(std::span<const TrainExample* const>(one, 1));
    }

    Checkpoint checkpoint() const
    {
        Checkpoint ck;
        ck.net          = m_net;
        ck.generator    = generator_spec_or_default();
        ck.adam_config  = m_cfg.adam();
        ck.loss_weights = m_cfg.loss_weights();
        ck.step         = static_cast<std::uint64_t>(m_step);
        ck.params       = m_params;
        ck.adam         = m_adam;
        return ck;
    }

private:
    ToyGeneratorSpec generator_spec_or_default() const
    {
        if (const auto* toy = dynamic_cast<const ToyGenerator*>(&m_gen))
            return toy->spec();
        return m_cfg.generator_spec();
    }

    const Generator&                                 m_gen;
    const FeatureExtractor&                          m_phi;
    TrainConfig                                      m_cfg;
    NetConfig                                        m_net;
    NetParams<float>                                 m_params;
    NetParams<float>                                 m_grads;
    AdamState<float>                                 m_adam;
    int                                              m_step = 0;
    std::map<const HdrImage*, LatentCode<float>>     m_latents;
};

struct TrainResult
{
    Checkpoint              checkpoint;
    std::vector<LossRecord> log;
};

using CheckpointHook = std::function<void(const Checkpoint&)>;

/// Runs `max_steps` updates over seeded reshuffles of the examples.
inline TrainResult train(const std::vector<TrainExample>& examples, const Generator& generator, const TrainConfig& cfg,
                         const FeatureExtractor& phi, const CheckpointHook& on_checkpoint = {})
{
    if (examples.empty())
        throw ParameterError("training needs at least one example");
    Trainer                  trainer(generator, phi, cfg);
    std::mt19937_64          rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    TrainResult                      result;
    std::vector<const TrainExample*> batch;
    for (int s = 0; s < cfg.max_steps; ++s)
    {
        batch.clear();
        for (int b = 0; b < cfg.batch_size; ++b)
        {
            if (cursor == order.size())
            {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            batch.push_back(&examples[order[cursor++]]);
        }
        result.log.push_back(trainer.step(batch));
        if (on_checkpoint && cfg.checkpoint_every > 0 && (s + 1) % cfg.checkpoint_every == 0)
            on_checkpoint(trainer.checkpoint());
    }
    result.checkpoint = trainer.checkpoint();
    return result;
}

} // namespace photoapp
