// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>
#include <zlib.h>

#include "photoapp/png_io.hpp"
#include "photoapp/radiance_io.hpp"
#include "photoapp/tonemap.hpp"

using namespace photoapp;

namespace {

Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes flat_file(int w, int h, const std::vector<Rgbe>& px, const std::string& res = "")
{
    std::string head = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n" +
                       (res.empty() ? "-Y " + std::to_string(h) + " +X " + std::to_string(w) : res) + "\n";
    Bytes out = to_bytes(head);
    for (const auto& q : px)
        out.insert(out.end(), q.begin(), q.end());
    return out;
}

HdrImage random_image(int w, int h, std::uint64_t seed, double lo_exp = -6, double hi_exp = 6)
{
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> e(lo_exp, hi_exp), m(0.0, 1.0);
    HdrImage                               img(w, h);
    for (float& v : img.data)
        v = static_cast<float>(m(rng) * std::exp2(e(rng)));
    return img;
}

// Independent PNG reader: zlib inflate plus filter reversal, RGB8 non-interlaced only.
LdrImage oracle_png_decode(const Bytes& png)
{
    auto be32 = [&](std::size_t at)
    { return (std::uint32_t(png[at]) << 24) | (std::uint32_t(png[at + 1]) << 16) | (std::uint32_t(png[at + 2]) << 8) | png[at + 3]; };
    std::size_t pos = 8;
    int         w = 0, h = 0;
    Bytes       idat;
    while (pos + 8 <= png.size())
    {
        std::uint32_t len  = be32(pos);
        std::string   type(png.begin() + static_cast<long>(pos) + 4, png.begin() + static_cast<long>(pos) + 8);
        std::size_t   data = pos + 8;
        if (type == "IHDR")
        {
            w = static_cast<int>(be32(data));
            h = static_cast<int>(be32(data + 4));
            EXPECT_EQ(png[data + 8], 8);  // bit depth
            EXPECT_EQ(png[data + 9], 2);  // colour type RGB
            EXPECT_EQ(png[data + 12], 0); // no interlace
        }
        else if (type == "IDAT")
            idat.insert(idat.end(), png.begin() + static_cast<long>(data), png.begin() + static_cast<long>(data + len));
        pos = data + len + 4;
    }
    const std::size_t stride = static_cast<std::size_t>(w) * 3;
    Bytes             raw((stride + 1) * static_cast<std::size_t>(h));
    uLongf            raw_len = raw.size();
    EXPECT_EQ(uncompress(raw.data(), &raw_len, idat.data(), idat.size()), Z_OK);
    LdrImage out(w, h);
    Bytes    prev(stride, 0), cur(stride);
    for (int y = 0; y < h; ++y)
    {
        const std::uint8_t* line = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        const int           f    = line[0];
        for (std::size_t i = 0; i < stride; ++i)
        {
            int a = i >= 3 ? cur[i - 3] : 0, b = prev[i], c = i >= 3 ? prev[i - 3] : 0, x = line[i + 1];
            int pred = 0;
            if (f == 1)
                pred = a;
            else if (f == 2)
                pred = b;
            else if (f == 3)
                pred = (a + b) / 2;
            else if (f == 4)
            {
                int p = a + b - c, pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                pred  = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
            }
            cur[i] = static_cast<std::uint8_t>(x + pred);
        }
        std::copy(cur.begin(), cur.end(), out.data.begin() + static_cast<long>(static_cast<std::size_t>(y) * stride));
        prev = cur;
    }
    return out;
}

} // namespace

TEST(Rgbe, DecodesMantissaTimesPowerOfTwo)
{
    auto v = rgbe_to_float({128, 128, 128, 129});
    EXPECT_EQ(v[0], 1.0f);
    EXPECT_EQ(v[2], 1.0f);
    auto z = rgbe_to_float({0, 0, 0, 0});
    EXPECT_EQ(z[0], 0.0f);
    EXPECT_EQ(z[1], 0.0f);
    // Mantissa bytes are ignored when the exponent is zero.
    EXPECT_EQ(rgbe_to_float({200, 10, 3, 0})[0], 0.0f);
}

TEST(Rgbe, DecodeMatchesFormulaForAllBytes)
{
    for (int e = 1; e < 256; e += 7)
        for (int m = 0; m < 256; m += 5)
        {
            auto v = rgbe_to_float({static_cast<std::uint8_t>(m), 0, 0, static_cast<std::uint8_t>(e)});
            EXPECT_EQ(static_cast<double>(v[0]), std::ldexp(static_cast<double>(m), e - 136)) << m << " " << e;
        }
}

TEST(Radiance, ReadsFlatScanlines)
{
    auto img = read_radiance_hdr(flat_file(2, 1, {{128, 128, 128, 129}, {64, 0, 32, 130}}));
    ASSERT_EQ(img.width, 2);
    ASSERT_EQ(img.height, 1);
    EXPECT_EQ(img(0, 0, 0), 1.0f);
    EXPECT_EQ(img(1, 0, 0), 1.0f);
    EXPECT_EQ(img(1, 0, 1), 0.0f);
    EXPECT_EQ(img(1, 0, 2), 0.5f);
}

TEST(Radiance, ZeroImageRoundTrips)
{
    HdrImage z(1, 1);
    auto     back = read_radiance_hdr(write_radiance_hdr(z));
    EXPECT_EQ(back.data, z.data);
}

TEST(Radiance, HeaderCarriesResolution)
{
    auto        bytes = write_radiance_hdr(random_image(2, 2, 3));
    std::string text(bytes.begin(), bytes.end());
    EXPECT_EQ(text.rfind("#?RADIANCE\n", 0), 0u);
    EXPECT_NE(text.find("\n-Y 2 +X 2\n"), std::string::npos);
}

class RadianceRoundTrip : public ::testing::TestWithParam<std::pair<int, int>>
{
};

TEST_P(RadianceRoundTrip, WithinQuantizationBound)
{
    auto [w, h] = GetParam();
    for (std::uint64_t seed = 0; seed < 6; ++seed)
    {
        auto img  = random_image(w, h, seed * 31 + static_cast<std::uint64_t>(w));
        auto back = read_radiance_hdr(write_radiance_hdr(img));
        ASSERT_TRUE(back.same_shape(img));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
            {
                double mx = std::max({img(x, y, 0), img(x, y, 1), img(x, y, 2)});
                for (int c = 0; c < 3; ++c)
                    ASSERT_LE(std::abs(back(x, y, c) - img(x, y, c)), mx / 256.0) << x << "," << y << "," << c;
            }
    }
}

// Widths below 8 use flat scanlines, the rest RLE.
INSTANTIATE_TEST_SUITE_P(Sizes, RadianceRoundTrip,
                         ::testing::Values(std::pair{2, 2}, std::pair{7, 3}, std::pair{8, 1}, std::pair{64, 32},
                                           std::pair{257, 5}));

TEST(Radiance, RleRunsRoundTrip)
{
    HdrImage img(300, 2);
    for (int x = 0; x < 300; ++x)
        for (int c = 0; c < 3; ++c)
            img(x, 0, c) = x < 200 ? 3.0f : static_cast<float>(x);
    auto bytes = write_radiance_hdr(img);
    EXPECT_LT(bytes.size(), 300u * 2 * 4); // runs compress
    auto back = read_radiance_hdr(bytes);
    for (int x = 0; x < 200; ++x)
        EXPECT_EQ(back(x, 0, 1), 3.0f);
    EXPECT_EQ(back(5, 1, 0), 0.0f);
}

TEST(Radiance, ReadsOldStyleRunLengths)
{
    // Old-style runs repeat the previous pixel (1,1,1,e) count times.
    std::vector<Rgbe> px{{128, 128, 128, 129}, {1, 1, 1, 2}};
    auto              img = read_radiance_hdr(flat_file(3, 1, px));
    for (int x = 0; x < 3; ++x)
        EXPECT_EQ(img(x, 0, 0), 1.0f);
}

TEST(Radiance, Errors)
{
    EXPECT_THROW(read_radiance_hdr(to_bytes("P6\n1 1\n255\n")), FormatError);
    EXPECT_THROW(read_radiance_hdr(to_bytes("#?RADIANCE\n\nbogus\n")), FormatError);
    EXPECT_THROW(read_radiance_hdr(flat_file(2, 2, {{1, 1, 1, 1}}, "+Y 2 +X 2")), UnsupportedError);
    EXPECT_THROW(read_radiance_hdr(flat_file(2, 2, {{1, 1, 1, 1}}, "-Y 2 -X 2")), UnsupportedError);
    EXPECT_THROW(read_radiance_hdr(flat_file(2, 2, {{10, 10, 10, 129}, {10, 10, 10, 129}, {10, 10, 10, 129}})), TruncationError);
    auto ok = write_radiance_hdr(random_image(16, 4, 9));
    ok.resize(ok.size() - 3);
    EXPECT_THROW(read_radiance_hdr(ok), TruncationError);
}

TEST(Tonemap, SpecExamples)
{
    HdrImage img(3, 1);
    img(0, 0, 0) = 1.0f;
    img(1, 0, 0) = 0.0f;
    img(2, 0, 0) = 0.5f;
    auto lin     = tonemap(img, 1.0, 1.0);
    EXPECT_EQ(lin(0, 0, 0), 255);
    EXPECT_EQ(lin(1, 0, 0), 0);
    auto g = tonemap(img);
    EXPECT_EQ(g(2, 0, 0), static_cast<int>(std::lround(255.0 * std::pow(0.5, 1.0 / 2.2))));
    EXPECT_EQ(g(2, 0, 0), 186);
}

TEST(Tonemap, MonotoneAndLinearBelowClip)
{
    HdrImage img(256, 1);
    for (int x = 0; x < 256; ++x)
        for (int c = 0; c < 3; ++c)
            img(x, 0, c) = static_cast<float>(x) / 200.0f;
    auto g = tonemap(img, 1.3, 2.2);
    for (int x = 1; x < 256; ++x)
        EXPECT_LE(g(x - 1, 0, 0), g(x, 0, 0));
    auto l = tonemap(img, 0.7, 1.0);
    for (int x = 0; x < 256; ++x)
        if (0.7 * img(x, 0, 0) <= 1.0)
            EXPECT_EQ(l(x, 0, 0), std::lround(255.0 * 0.7 * static_cast<double>(img(x, 0, 0))));
}

TEST(Tonemap, RejectsBadParameters)
{
    HdrImage img(1, 1);
    EXPECT_THROW(tonemap(img, 0.0), ParameterError);
    EXPECT_THROW(tonemap(img, 1.0, -1.0), ParameterError);
}

TEST(Tonemap, AutoExposureMapsPercentileToTarget)
{
    HdrImage img(100, 1);
    for (int x = 0; x < 100; ++x)
        for (int c = 0; c < 3; ++c)
            img(x, 0, c) = static_cast<float>(x + 1);
    // Index floor(0.99 * 99) = 98 holds luminance 99.
    EXPECT_NEAR(auto_exposure(img), 0.95 / 99.0, 1e-12);
    EXPECT_EQ(auto_exposure(HdrImage(4, 4)), 1.0);
}

TEST(Png, WhitePixel)
{
    LdrImage img(1, 1, 255);
    auto     back = read_png(write_png(img));
    EXPECT_EQ(back, img);
    EXPECT_EQ(oracle_png_decode(write_png(img)), img);
}

TEST(Png, GradientMatchesIndependentDecoder)
{
    LdrImage img(2, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<std::uint8_t>(i * 13);
    auto bytes = write_png(img);
    EXPECT_EQ(oracle_png_decode(bytes), img);
    EXPECT_EQ(read_png(bytes), img);
}

TEST(Png, RandomRoundTripBothModes)
{
    std::mt19937 rng(5);
    LdrImage     img(37, 23);
    for (auto& v : img.data)
        v = static_cast<std::uint8_t>(rng());
    for (bool fast : {false, true})
    {
        auto bytes = write_png(img, fast);
        EXPECT_EQ(read_png(bytes), img);
        EXPECT_EQ(oracle_png_decode(bytes), img);
    }
}

TEST(Png, RejectsGarbage) { EXPECT_THROW(read_png(to_bytes("not a png")), Error); }
