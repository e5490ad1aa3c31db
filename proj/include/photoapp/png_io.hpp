// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <cstring>
#include <filesystem>
#include <span>
#include <string>

#include "photoapp/error.hpp"
#include "photoapp/file_io.hpp"
#include "photoapp/image.hpp"

namespace photoapp {

/// 8-bit RGB PNG, no alpha. `fast` trades compression ratio for encode speed.
inline Bytes write_png(const LdrImage& img, bool fast = false)
{
    if (img.data.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3)
        throw StructuralError("LDR image data length does not match its dimensions");
    if (img.width <= 0 || img.height <= 0)
        throw ParameterError("cannot encode an empty PNG");

    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width   = static_cast<png_uint_32>(img.width);
    image.height  = static_cast<png_uint_32>(img.height);
    image.format  = PNG_FORMAT_RGB;
    image.flags   = fast ? PNG_IMAGE_FLAG_FAST : 0;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data.data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    Bytes out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data.data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

/// Decodes any PNG to 8-bit RGB (alpha is composited away by libpng).
inline LdrImage read_png(std::span<const std::uint8_t> bytes)
{
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw FormatError(std::string("PNG decode failed: ") + image.message);
    image.format = PNG_FORMAT_RGB;
    LdrImage out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr))
    {
        png_image_free(&image);
        throw FormatError(std::string("PNG decode failed: ") + image.message);
    }
    return out;
}

inline void save_png(const std::filesystem::path& path, const LdrImage& img) { write_file_atomic(path, write_png(img)); }

inline LdrImage load_png(const std::filesystem::path& path) { return read_png(read_file(path)); }

} // namespace photoapp
