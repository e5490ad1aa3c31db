// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Checkpoint layout (little-endian):
//   "PANV1"  u32 format version
//   config record: network shape and conditioning options, toy-generator
//                  spec, Adam hyper-parameters, loss weights, step count
//   parameter tensors, block by block (w1, b1, w2, b2) as f32
//   u8 has_adam [u64 t, first moments, second moments]
//   u32 CRC-32 of everything above

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "photoapp/adam.hpp"
#include "photoapp/error.hpp"
#include "photoapp/file_io.hpp"
#include "photoapp/generator.hpp"
#include "photoapp/loss.hpp"
#include "photoapp/photoappnet.hpp"

namespace photoapp {

inline constexpr char          kCheckpointMagic[5] = {'P', 'A', 'N', 'V', '1'};
inline constexpr std::uint32_t kCheckpointVersion  = 1;

struct Checkpoint
{
    NetConfig                       net;
    ToyGeneratorSpec                generator;
    AdamConfig                      adam_config;
    LossWeights                     loss_weights;
    std::uint64_t                   step = 0;
    NetParams<float>                params;
    std::optional<AdamState<float>> adam;
};

namespace detail {

class BinaryWriter
{
public:
    void u8(std::uint8_t v) { m_out.push_back(v); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            m_out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            m_out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* s, std::size_t n) { m_out.insert(m_out.end(), s, s + n); }

    Bytes& bytes() { return m_out; }

private:
    Bytes m_out;
};

class BinaryReader
{
public:
    explicit BinaryReader(std::span<const std::uint8_t> b) : m_in(b) {}

    void need(std::size_t n) const
    {
        if (m_pos + n > m_in.size())
            throw CorruptionError("checkpoint is truncated");
    }
    std::uint8_t u8()
    {
        need(1);
        return m_in[m_pos++];
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(m_in[m_pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(m_in[m_pos++]) << (8 * i);
        return v;
    }
    float  f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t position() const { return m_pos; }

private:
    std::span<const std::uint8_t> m_in;
    std::size_t                   m_pos = 0;
};

inline void write_tensors(BinaryWriter& w, const NetParams<float>& p)
{
    for (const auto& b : p.blocks)
        for (const auto& t : b.tensors())
            for (float v : t)
                w.f32(v);
}

inline void read_tensors(BinaryReader& r, NetParams<float>& p)
{
    for (auto& b : p.blocks)
        for (auto t : b.tensors())
        {
            r.need(t.size() * 4);
            for (float& v : t)
                v = r.f32();
        }
}

inline std::uint32_t crc(std::span<const std::uint8_t> bytes)
{
    return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

} // namespace detail

inline Bytes save_checkpoint(const Checkpoint& ck)
{
    ck.params.check_shape();
    detail::BinaryWriter w;
    w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.u32(kCheckpointVersion);

    const auto& s = ck.net.shape;
    for (int v : {s.blocks, s.latent_dim, s.hidden, s.env_dim, s.pose_dim})
        w.u32(static_cast<std::uint32_t>(v));
    w.u8(s.use_q ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(ck.net.env_normalization));
    w.u8(static_cast<std::uint8_t>(ck.net.pose_encoding));
    w.u64(ck.net.seed);

    w.u64(ck.generator.seed);
    for (int v : {ck.generator.width, ck.generator.height, ck.generator.blocks, ck.generator.latent_dim})
        w.u32(static_cast<std::uint32_t>(v));

    w.f64(ck.adam_config.lr);
    w.f64(ck.adam_config.beta1);
    w.f64(ck.adam_config.beta2);
    w.f64(ck.adam_config.epsilon);
    w.f64(ck.loss_weights.latent);
    w.f64(ck.loss_weights.perceptual);
    w.u64(ck.step);

    detail::write_tensors(w, ck.params);
    w.u8(ck.adam ? 1 : 0);
    if (ck.adam)
    {
        w.u64(ck.adam->t);
        detail::write_tensors(w, ck.adam->m);
        detail::write_tensors(w, ck.adam->v);
    }
    w.u32(detail::crc(w.bytes()));
    return std::move(w.bytes());
}

/// Parses and verifies a checkpoint. When `expected` is given, a checkpoint
/// whose network shape differs (e.g. trained with the q input) is rejected.
inline Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes, const NetShape* expected = nullptr)
{
    if (bytes.size() < sizeof(kCheckpointMagic) + 8)
        throw CorruptionError("checkpoint is truncated");
    if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw FormatError("not a PhotoAppNet checkpoint (bad magic)");
    detail::BinaryReader r(bytes.subspan(sizeof(kCheckpointMagic)));
    if (auto version = r.u32(); version != kCheckpointVersion)
        throw VersionError("unsupported checkpoint version " + std::to_string(version));

    const std::uint32_t stored_crc = [&]
    {
        auto tail = bytes.subspan(bytes.size() - 4);
        return static_cast<std::uint32_t>(tail[0]) | (static_cast<std::uint32_t>(tail[1]) << 8) |
               (static_cast<std::uint32_t>(tail[2]) << 16) | (static_cast<std::uint32_t>(tail[3]) << 24);
    }();

    Checkpoint ck;
    auto&      s = ck.net.shape;
    s.blocks     = static_cast<int>(r.u32());
    s.latent_dim = static_cast<int>(r.u32());
    s.hidden     = static_cast<int>(r.u32());
    s.env_dim    = static_cast<int>(r.u32());
    s.pose_dim   = static_cast<int>(r.u32());
    s.use_q      = r.u8() != 0;
    ck.net.env_normalization = static_cast<EnvNormalization>(r.u8());
    ck.net.pose_encoding     = static_cast<PoseEncoding>(r.u8());
    ck.net.seed              = r.u64();

    ck.generator.seed       = r.u64();
    ck.generator.width      = static_cast<int>(r.u32());
    ck.generator.height     = static_cast<int>(r.u32());
    ck.generator.blocks     = static_cast<int>(r.u32());
    ck.generator.latent_dim = static_cast<int>(r.u32());

    ck.adam_config.lr         = r.f64();
    ck.adam_config.beta1      = r.f64();
    ck.adam_config.beta2      = r.f64();
    ck.adam_config.epsilon    = r.f64();
    ck.loss_weights.latent    = r.f64();
    ck.loss_weights.perceptual = r.f64();
    ck.step                   = r.u64();

    if (s.blocks <= 0 || s.blocks > 4096 || s.latent_dim <= 0 || s.latent_dim > 1 << 16 || s.hidden <= 0 ||
        s.hidden > 1 << 16 || s.env_dim < 0 || s.env_dim > 1 << 16 || s.pose_dim < 0 || s.pose_dim > 64)
        throw CorruptionError("checkpoint config record is implausible");
    if (expected && !(*expected == s))
        throw ConfigurationError("checkpoint network shape does not match the requested configuration" +
                                 std::string(expected->use_q != s.use_q ? " (q input differs)" : ""));

    const std::size_t per_tensor_set = NetParams<float>::zeros(s).parameter_count() * 4;
    r.need(per_tensor_set);
    ck.params = NetParams<float>::zeros(s);
    detail::read_tensors(r, ck.params);
    if (r.u8() != 0)
    {
        AdamState<float> adam = AdamState<float>::for_params(ck.params);
        adam.t                = r.u64();
        r.need(2 * per_tensor_set);
        detail::read_tensors(r, adam.m);
        detail::read_tensors(r, adam.v);
        ck.adam = std::move(adam);
    }
    if (sizeof(kCheckpointMagic) + r.position() + 4 != bytes.size())
        throw CorruptionError("checkpoint has trailing or missing bytes");
    if (detail::crc(bytes.first(bytes.size() - 4)) != stored_crc)
        throw CorruptionError("checkpoint checksum mismatch");
    ck.params.touch();
    return ck;
}

inline void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ck)
{
    write_file_atomic(path, save_checkpoint(ck));
}

inline Checkpoint read_checkpoint_file(const std::filesystem::path& path, const NetShape* expected = nullptr)
{
    return load_checkpoint(read_file(path), expected);
}

} // namespace photoapp
