// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// PhotoAppNet: one independent single-hidden-layer MLP per latent block. Block k
// sees concat(L_s[k], env, pose, p[, q]) and emits a displacement added to L_s[k].

#include <Eigen/Core>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/latent.hpp"
#include "photoapp/parallel.hpp"

namespace photoapp {

enum class EnvNormalization : std::uint8_t
{
    none        = 0,
    unit_energy = 1,
};

enum class PoseEncoding : std::uint8_t
{
    raw    = 0, ///< yaw, pitch, roll in radians
    sincos = 1, ///< sin and cos of each angle
};

struct NetShape
{
    int  blocks     = kLatentBlocks;
    int  latent_dim = kLatentDim;
    int  hidden     = 512;
    int  env_dim    = 3 * kBasisLightCount;
    int  pose_dim   = 3;
    bool use_q      = false;

    int cond_dim() const { return env_dim + pose_dim + 1 + (use_q ? 1 : 0); }
    int input_dim() const { return latent_dim + cond_dim(); }

    friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// Everything needed to turn a ConditionVector into network input.
struct NetConfig
{
    NetShape         shape;
    EnvNormalization env_normalization = EnvNormalization::none;
    PoseEncoding     pose_encoding     = PoseEncoding::raw;
    std::uint64_t    seed              = 0;

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

inline NetShape make_shape(bool use_q, PoseEncoding enc = PoseEncoding::raw)
{
    NetShape s;
    s.use_q    = use_q;
    s.pose_dim = enc == PoseEncoding::raw ? 3 : 6;
    return s;
}

/// Flattens a condition into the conditioning slice of each block's input.
template <typename T>
std::vector<T> condition_input(const NetConfig& cfg, const ConditionVector& cond)
{
    const auto& s = cfg.shape;
    if (static_cast<int>(cond.env.values.size()) != s.env_dim)
        throw StructuralError("environment vector has " + std::to_string(cond.env.values.size()) + " values, network expects " +
                              std::to_string(s.env_dim));
    if ((cond.p != 0 && cond.p != 1) || (cond.q != 0 && cond.q != 1))
        throw ParameterError("condition flags must be 0 or 1");
    const LightWeights env = cfg.env_normalization == EnvNormalization::unit_energy ? normalize_unit_energy(cond.env) : cond.env;

    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(s.cond_dim()));
    for (double v : env.values)
        out.push_back(static_cast<T>(v));
    const std::array<double, 3> angles{cond.pose.yaw, cond.pose.pitch, cond.pose.roll};
    if (cfg.pose_encoding == PoseEncoding::raw)
    {
        if (s.pose_dim != 3)
            throw StructuralError("raw pose encoding needs pose_dim 3");
        for (double a : angles)
            out.push_back(static_cast<T>(a));
    }
    else
    {
        if (s.pose_dim != 6)
            throw StructuralError("sin/cos pose encoding needs pose_dim 6");
        for (double a : angles)
        {
            out.push_back(static_cast<T>(std::sin(a)));
            out.push_back(static_cast<T>(std::cos(a)));
        }
    }
    out.push_back(static_cast<T>(cond.p));
    if (s.use_q)
        out.push_back(static_cast<T>(cond.q));
    for (T v : out)
        if (!std::isfinite(v))
            throw NumericError("condition contains a non-finite value");
    return out;
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct MlpBlock
{
    RowMatrix<T> w1; ///< hidden x input
    Vector<T>    b1; ///< hidden
    RowMatrix<T> w2; ///< latent x hidden
    Vector<T>    b2; ///< latent

    std::array<std::span<T>, 4> tensors()
    {
        return {std::span<T>(w1.data(), static_cast<std::size_t>(w1.size())), std::span<T>(b1.data(), static_cast<std::size_t>(b1.size())),
                std::span<T>(w2.data(), static_cast<std::size_t>(w2.size())), std::span<T>(b2.data(), static_cast<std::size_t>(b2.size()))};
    }
    std::array<std::span<const T>, 4> tensors() const
    {
        return {std::span<const T>(w1.data(), static_cast<std::size_t>(w1.size())), std::span<const T>(b1.data(), static_cast<std::size_t>(b1.size())),
                std::span<const T>(w2.data(), static_cast<std::size_t>(w2.size())), std::span<const T>(b2.data(), static_cast<std::size_t>(b2.size()))};
    }
};

namespace detail {
inline std::uint64_t next_revision()
{
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}
} // namespace detail

/// Network weights. Also used as the container for gradients and Adam moments.
/// `revision` changes whenever the weights change, which lets backward reject
/// caches produced by an older forward.
template <typename T>
struct NetParams
{
    NetShape                 shape;
    std::vector<MlpBlock<T>> blocks;
    std::uint64_t            revision = 0;

    static NetParams zeros(const NetShape& s)
    {
        if (s.blocks <= 0 || s.latent_dim <= 0 || s.hidden <= 0 || s.env_dim < 0 || s.pose_dim < 0)
            throw ParameterError("invalid network shape");
        NetParams p;
        p.shape = s;
        p.blocks.resize(static_cast<std::size_t>(s.blocks));
        for (auto& b : p.blocks)
        {
            b.w1 = RowMatrix<T>::Zero(s.hidden, s.input_dim());
            b.b1 = Vector<T>::Zero(s.hidden);
            b.w2 = RowMatrix<T>::Zero(s.latent_dim, s.hidden);
            b.b2 = Vector<T>::Zero(s.latent_dim);
        }
        p.revision = detail::next_revision();
        return p;
    }

    /// He-style uniform fan-in init for the first layer; the output layer
    /// starts at zero so the untrained network is the identity edit.
    static NetParams init(const NetShape& s, std::uint64_t seed)
    {
        NetParams                              p = zeros(s);
        std::mt19937_64                        rng(seed);
        const double                           bound = std::sqrt(6.0 / s.input_dim());
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& b : p.blocks)
            for (Eigen::Index i = 0; i < b.w1.size(); ++i)
                b.w1.data()[i] = static_cast<T>(dist(rng));
        return p;
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& b : blocks)
            for (const auto& t : b.tensors())
                n += t.size();
        return n;
    }

    void set_zero()
    {
        for (auto& b : blocks)
        {
            b.w1.setZero();
            b.b1.setZero();
            b.w2.setZero();
            b.b2.setZero();
        }
    }

    void touch() { revision = detail::next_revision(); }

    bool all_finite() const
    {
        for (const auto& b : blocks)
            if (!b.w1.allFinite() || !b.b1.allFinite() || !b.w2.allFinite() || !b.b2.allFinite())
                return false;
        return true;
    }

    void check_shape() const
    {
        if (static_cast<int>(blocks.size()) != shape.blocks)
            throw StructuralError("parameter block count does not match the network shape");
        for (const auto& b : blocks)
            if (b.w1.rows() != shape.hidden || b.w1.cols() != shape.input_dim() || b.b1.size() != shape.hidden ||
                b.w2.rows() != shape.latent_dim || b.w2.cols() != shape.hidden || b.b2.size() != shape.latent_dim)
                throw StructuralError("parameter tensor shapes do not match the network shape");
    }

    /// Values only; revisions are bookkeeping.
    bool same_values(const NetParams& o) const
    {
        if (!(shape == o.shape) || blocks.size() != o.blocks.size())
            return false;
        for (std::size_t k = 0; k < blocks.size(); ++k)
        {
            auto a = blocks[k].tensors();
            auto b = o.blocks[k].tensors();
            for (std::size_t t = 0; t < a.size(); ++t)
                if (!std::equal(a[t].begin(), a[t].end(), b[t].begin(), b[t].end()))
                    return false;
        }
        return true;
    }
};

template <typename T>
struct ForwardCache
{
    NetShape               shape;
    std::uint64_t          revision = 0;
    std::vector<Vector<T>> input;          ///< per block concat(L_s[k], cond)
    std::vector<Vector<T>> pre_activation; ///< per block W1 x + b1
};

template <typename T>
struct ForwardResult
{
    LatentCode<T>   target;
    ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> forward(const NetParams<T>& params, const LatentCode<T>& source, std::span<const T> cond)
{
    const auto& s = params.shape;
    params.check_shape();
    if (source.blocks != s.blocks || source.dim != s.latent_dim || source.values.size() != static_cast<std::size_t>(s.blocks) * static_cast<std::size_t>(s.latent_dim))
        throw StructuralError("source latent shape does not match the network");
    if (static_cast<int>(cond.size()) != s.cond_dim())
        throw StructuralError("condition length " + std::to_string(cond.size()) + " does not match the network (" +
                              std::to_string(s.cond_dim()) + ")");
    source.validate();
    for (T v : cond)
        if (!std::isfinite(v))
            throw NumericError("condition contains a non-finite value");

    ForwardResult<T> r{LatentCode<T>(s.blocks, s.latent_dim), {}};
    r.cache.shape    = s;
    r.cache.revision = params.revision;
    r.cache.input.resize(static_cast<std::size_t>(s.blocks));
    r.cache.pre_activation.resize(static_cast<std::size_t>(s.blocks));

    parallel_for(0, s.blocks,
                 [&](int k)
                 {
                     const auto& blk = params.blocks[static_cast<std::size_t>(k)];
                     Vector<T>&  x   = r.cache.input[static_cast<std::size_t>(k)];
                     x.resize(s.input_dim());
                     auto src = source.block(k);
                     std::copy(src.begin(), src.end(), x.data());
                     std::copy(cond.begin(), cond.end(), x.data() + s.latent_dim);

                     Vector<T>& pre = r.cache.pre_activation[static_cast<std::size_t>(k)];
                     pre.noalias()  = blk.w1 * x;
                     pre += blk.b1;
                     Vector<T> delta = blk.b2;
                     delta.noalias() += blk.w2 * pre.cwiseMax(T(0));

                     auto dst = r.target.block(k);
                     for (int i = 0; i < s.latent_dim; ++i)
                         dst[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(i)] + delta[i];
                 });
    return r;
}

/// Accumulates parameter gradients into `grads` (which must be zeroed by the
/// caller when a fresh gradient is wanted). Optional outputs receive the
/// gradient w.r.t. the source latent and the condition slice.
template <typename T>
void backward_into(const NetParams<T>& params, const ForwardCache<T>& cache, const LatentCode<T>& d_target,
                   NetParams<T>& grads, LatentCode<T>* d_source = nullptr, std::vector<T>* d_cond = nullptr)
{
    const auto& s = params.shape;
    if (!(cache.shape == s) || cache.revision != params.revision ||
        cache.input.size() != static_cast<std::size_t>(s.blocks))
        throw StructuralError("forward cache does not belong to these parameters");
    if (!(grads.shape == s))
        throw StructuralError("gradient container shape does not match the network");
    if (d_target.blocks != s.blocks || d_target.dim != s.latent_dim)
        throw StructuralError("output gradient shape does not match the network");

    const bool need_input = d_source != nullptr || d_cond != nullptr;
    std::vector<Vector<T>> dx(need_input ? static_cast<std::size_t>(s.blocks) : 0);

    parallel_for(0, s.blocks,
                 [&](int k)
                 {
                     const auto  ks  = static_cast<std::size_t>(k);
                     const auto& blk = params.blocks[ks];
                     auto&       g   = grads.blocks[ks];
                     auto        gt  = d_target.block(k);
                     Eigen::Map<const Vector<T>> dy(gt.data(), s.latent_dim);

                     const Vector<T>& pre = cache.pre_activation[ks];
                     const Vector<T>  h   = pre.cwiseMax(T(0));
                     g.b2 += dy;
                     g.w2.noalias() += dy * h.transpose();

                     Vector<T> dpre = blk.w2.transpose() * dy;
                     for (int i = 0; i < s.hidden; ++i)
                         if (!(pre[i] > T(0)))
                             dpre[i] = T(0);
                     g.b1 += dpre;
                     g.w1.noalias() += dpre * cache.input[ks].transpose();
                     if (need_input)
                         dx[ks].noalias() = blk.w1.transpose() * dpre;
                 });

    if (d_source)
    {
        *d_source = LatentCode<T>(s.blocks, s.latent_dim);
        for (int k = 0; k < s.blocks; ++k)
        {
            auto out = d_source->block(k);
            auto gt  = d_target.block(k);
            for (int i = 0; i < s.latent_dim; ++i)
                out[static_cast<std::size_t>(i)] = gt[static_cast<std::size_t>(i)] + dx[static_cast<std::size_t>(k)][i];
        }
    }
    if (d_cond)
    {
        d_cond->assign(static_cast<std::size_t>(s.cond_dim()), T(0));
        for (int k = 0; k < s.blocks; ++k)
            for (int j = 0; j < s.cond_dim(); ++j)
                (*d_cond)[static_cast<std::size_t>(j)] += dx[static_cast<std::size_t>(k)][s.latent_dim + j];
    }
}

template <typename T>
struct BackwardResult
{
    NetParams<T>   param_grads;
    LatentCode<T>  d_source;
    std::vector<T> d_cond;
};

template <typename T>
BackwardResult<T> backward(const NetParams<T>& params, const ForwardCache<T>& cache, const LatentCode<T>& d_target)
{
    BackwardResult<T> r{NetParams<T>::zeros(params.shape), {}, {}};
    backward_into(params, cache, d_target, r.param_grads, &r.d_source, &r.d_cond);
    return r;
}

} // namespace photoapp
