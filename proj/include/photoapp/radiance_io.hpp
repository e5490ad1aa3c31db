// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Radiance RGBE (.hdr) codec. Pixels are stored as 8-bit mantissas sharing one
// 8-bit exponent; a byte quadruple (r,g,b,e) decodes to m * 2^(e-136), e = 0
// meaning black.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "photoapp/error.hpp"
#include "photoapp/file_io.hpp"
#include "photoapp/image.hpp"

namespace photoapp {

using Rgbe = std::array<std::uint8_t, 4>;

inline std::array<float, 3> rgbe_to_float(const Rgbe& q)
{
    if (q[3] == 0)
        return {0.f, 0.f, 0.f};
    const float scale = std::ldexp(1.0f, static_cast<int>(q[3]) - 136);
    return {q[0] * scale, q[1] * scale, q[2] * scale};
}

/// Round-to-nearest shared-exponent encoding; the error in every channel is at
/// most half a mantissa step, i.e. max(r,g,b)/256.
inline Rgbe float_to_rgbe(float r, float g, float b)
{
    const float v = std::max({r, g, b});
    if (!(v >= 1e-32f))
        return {0, 0, 0, 0};
    int e = 0;
    std::frexp(v, &e);
    auto quantize = [&](float c, int exp)
    {
        double m = std::nearbyint(static_cast<double>(c) * std::ldexp(1.0, 8 - exp));
        return std::clamp(m, 0.0, 256.0);
    };
    if (quantize(v, e) >= 256.0)
        ++e;
    if (e + 128 > 255)
        throw ParameterError("value too large for RGBE encoding");
    return {static_cast<std::uint8_t>(quantize(r, e)), static_cast<std::uint8_t>(quantize(g, e)),
            static_cast<std::uint8_t>(quantize(b, e)), static_cast<std::uint8_t>(e + 128)};
}

namespace detail {

class ByteReader
{
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : m_bytes(bytes) {}

    bool        at_end() const { return m_pos >= m_bytes.size(); }
    std::size_t remaining() const { return m_bytes.size() - m_pos; }

    std::uint8_t get()
    {
        if (at_end())
            throw TruncationError("unexpected end of RGBE data");
        return m_bytes[m_pos++];
    }

    std::uint8_t peek(std::size_t ahead = 0) const { return m_bytes[m_pos + ahead]; }

    /// Reads a header line without the trailing newline.
    std::string line()
    {
        std::string s;
        while (true)
        {
            if (at_end())
                throw FormatError("RGBE header ended without a resolution line");
            char c = static_cast<char>(m_bytes[m_pos++]);
            if (c == '\n')
                return s;
            s.push_back(c);
            if (s.size() > 4096)
                throw FormatError("RGBE header line too long");
        }
    }

private:
    std::span<const std::uint8_t> m_bytes;
    std::size_t                   m_pos = 0;
};

inline void read_flat_scanline(ByteReader& in, std::span<Rgbe> line, bool first_pixel_consumed, const Rgbe& first)
{
    std::size_t x     = 0;
    int         shift = 0;
    auto        take  = [&](Rgbe q)
    {
        // old-style run: (1,1,1,n) repeats the previous pixel n << shift times
        if (q[0] == 1 && q[1] == 1 && q[2] == 1)
        {
            if (x == 0)
                throw FormatError("RGBE run marker without a preceding pixel");
            std::size_t count = static_cast<std::size_t>(q[3]) << shift;
            if (x + count > line.size())
                throw FormatError("RGBE run overflows scanline");
            for (std::size_t k = 0; k < count; ++k, ++x)
                line[x] = line[x - 1];
            shift += 8;
            return;
        }
        line[x++] = q;
        shift     = 0;
    };
    if (first_pixel_consumed)
        take(first);
    while (x < line.size())
        take({in.get(), in.get(), in.get(), in.get()});
}

inline void read_rle_scanline(ByteReader& in, std::span<Rgbe> line)
{
    const std::size_t width = line.size();
    for (int c = 0; c < 4; ++c)
    {
        std::size_t x = 0;
        while (x < width)
        {
            std::uint8_t count = in.get();
            if (count > 128)
            {
                std::size_t  run   = count - 128u;
                std::uint8_t value = in.get();
                if (x + run > width)
                    throw FormatError("RGBE run length exceeds scanline width");
                for (std::size_t k = 0; k < run; ++k)
                    line[x++][static_cast<std::size_t>(c)] = value;
            }
            else
            {
                if (count == 0 || x + count > width)
                    throw FormatError("bad RGBE literal count");
                for (std::size_t k = 0; k < count; ++k)
                    line[x++][static_cast<std::size_t>(c)] = in.get();
            }
        }
    }
}

inline void append_rle_channel(Bytes& out, std::span<const Rgbe> line, int c)
{
    const std::size_t n  = line.size();
    auto              at = [&](std::size_t i) { return line[i][static_cast<std::size_t>(c)]; };
    std::size_t       x  = 0;
    while (x < n)
    {
        // find the next run of at least 4 equal bytes
        std::size_t run_start = x;
        std::size_t run_len   = 0;
        while (run_start < n)
        {
            run_len = 1;
            while (run_start + run_len < n && run_len < 127 && at(run_start + run_len) == at(run_start))
                ++run_len;
            if (run_len >= 4)
                break;
            run_start += run_len;
        }
        if (run_start >= n)
            run_len = 0;
        // literal bytes before the run
        while (x < run_start)
        {
            std::size_t lit = std::min<std::size_t>(128, run_start - x);
            out.push_back(static_cast<std::uint8_t>(lit));
            for (std::size_t k = 0; k < lit; ++k)
                out.push_back(at(x + k));
            x += lit;
        }
        if (run_len >= 4)
        {
            out.push_back(static_cast<std::uint8_t>(128 + run_len));
            out.push_back(at(run_start));
            x = run_start + run_len;
        }
    }
}

} // namespace detail

/// Decodes a Radiance RGBE file. Only the standard `-Y H +X W` orientation is accepted.
inline HdrImage read_radiance_hdr(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader in(bytes);
    std::string        magic = in.line();
    if (magic.rfind("#?", 0) != 0)
        throw FormatError("missing '#?RADIANCE' signature");

    while (true)
    {
        std::string l = in.line();
        if (l.empty())
            break;
        if (l.rfind("FORMAT=", 0) == 0 && l != "FORMAT=32-bit_rle_rgbe")
            throw UnsupportedError("unsupported RGBE pixel format '" + l.substr(7) + "'");
    }

    std::string res = in.line();
    char        ax1[3] = {}, ax2[3] = {};
    int         n1 = 0, n2 = 0;
    char        tail = 0;
    if (std::sscanf(res.c_str(), "%2s %d %2s %d %c", ax1, &n1, ax2, &n2, &tail) != 4)
        throw FormatError("malformed RGBE resolution line '" + res + "'");
    auto is_axis = [](std::string_view a)
    { return a.size() == 2 && (a[0] == '+' || a[0] == '-') && (a[1] == 'X' || a[1] == 'Y'); };
    if (!is_axis(ax1) || !is_axis(ax2) || ax1[1] == ax2[1])
        throw FormatError("malformed RGBE resolution line '" + res + "'");
    if (std::string_view(ax1) != "-Y" || std::string_view(ax2) != "+X")
        throw UnsupportedError("unsupported RGBE orientation '" + res + "'");
    if (n1 <= 0 || n2 <= 0)
        throw FormatError("non-positive RGBE dimensions");

    const int         height = n1, width = n2;
    HdrImage          img(width, height);
    std::vector<Rgbe> line(static_cast<std::size_t>(width));
    for (int y = 0; y < height; ++y)
    {
        if (in.at_end())
            throw TruncationError("RGBE data ends before scanline " + std::to_string(y));
        Rgbe first{in.get(), in.get(), in.get(), in.get()};
        const bool rle = width >= 8 && width < 32768 && first[0] == 2 && first[1] == 2 && (first[2] & 0x80) == 0;
        if (rle)
        {
            if (((first[2] << 8) | first[3]) != width)
                throw FormatError("RGBE scanline width mismatch");
            detail::read_rle_scanline(in, line);
        }
        else
            detail::read_flat_scanline(in, line, true, first);

        auto row = img.row(y);
        for (int x = 0; x < width; ++x)
        {
            auto v                               = rgbe_to_float(line[static_cast<std::size_t>(x)]);
            row[static_cast<std::size_t>(x) * 3] = v[0];
            row[static_cast<std::size_t>(x) * 3 + 1] = v[1];
            row[static_cast<std::size_t>(x) * 3 + 2] = v[2];
        }
    }
    return img;
}

/// Encodes with new-style RLE scanlines when the width allows it, flat otherwise.
inline Bytes write_radiance_hdr(const HdrImage& img)
{
    validate_radiance(img);
    Bytes       out;
    std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(img.height) + " +X " +
                         std::to_string(img.width) + "\n";
    out.insert(out.end(), header.begin(), header.end());

    const bool        rle = img.width >= 8 && img.width < 32768;
    std::vector<Rgbe> line(static_cast<std::size_t>(img.width));
    for (int y = 0; y < img.height; ++y)
    {
        auto row = img.row(y);
        for (int x = 0; x < img.width; ++x)
        {
            auto i                              = static_cast<std::size_t>(x) * 3;
            line[static_cast<std::size_t>(x)]   = float_to_rgbe(row[i], row[i + 1], row[i + 2]);
        }
        if (rle)
        {
            out.push_back(2);
            out.push_back(2);
            out.push_back(static_cast<std::uint8_t>(img.width >> 8));
            out.push_back(static_cast<std::uint8_t>(img.width & 0xff));
            for (int c = 0; c < 4; ++c)
                detail::append_rle_channel(out, line, c);
        }
        else
        {
            for (const auto& q : line)
                out.insert(out.end(), q.begin(), q.end());
        }
    }
    return out;
}

inline HdrImage load_hdr(const std::filesystem::path& path) { return read_radiance_hdr(read_file(path)); }

inline void save_hdr(const std::filesystem::path& path, const HdrImage& img) { write_file_atomic(path, write_radiance_hdr(img)); }

} // namespace photoapp
