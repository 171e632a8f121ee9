// Copyright 2026 The refuge-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Grayscale BMP codec for tri-level submission masks. Emits the smallest
// faithful form (8-bit palettized, identity gray ramp, bottom-up rows);
// accepts 8-bit palettized and 24-bit uncompressed files on input.

#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "refuge/errors.hpp"
#include "refuge/mask.hpp"

namespace refuge {

/// Lenient decoding snaps each gray value to the nearest of {0, 128, 255};
/// Strict rejects anything off-palette and reports the pixel coordinate.
enum class DecodeMode { Lenient, Strict };

namespace detail {

inline std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (std::uint16_t(p[1]) << 8));
}
inline std::uint32_t read_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::int32_t read_i32(const std::uint8_t* p) {
    return static_cast<std::int32_t>(read_u32(p));
}
inline void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(std::uint8_t(x & 0xff));
    v.push_back(std::uint8_t(x >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(std::uint8_t(x & 0xff));
    v.push_back(std::uint8_t((x >> 8) & 0xff));
    v.push_back(std::uint8_t((x >> 16) & 0xff));
    v.push_back(std::uint8_t((x >> 24) & 0xff));
}

inline std::size_t row_stride(std::size_t width, std::size_t bytes_per_pixel) {
    return (width * bytes_per_pixel + 3u) & ~std::size_t{3};
}

inline PixelLabel snap_gray(std::uint8_t g, DecodeMode mode, int x, int y) {
    if (g == kCupGray) return PixelLabel::Cup;
    if (g == kDiscGray) return PixelLabel::Disc;
    if (g == kBackgroundGray) return PixelLabel::Background;
    if (mode == DecodeMode::Strict)
        throw StrictValueViolation("strict decode: gray value " + std::to_string(int(g)) +
                                   " at pixel (" + std::to_string(x) + ", " +
                                   std::to_string(y) + ") is not one of {0, 128, 255}");
    // nearest of the three anchors; equidistant values take the lower anchor
    int dc = std::abs(int(g) - int(kCupGray));
    int dd = std::abs(int(g) - int(kDiscGray));
    int db = std::abs(int(g) - int(kBackgroundGray));
    if (dc <= dd && dc <= db) return PixelLabel::Cup;
    if (dd <= db) return PixelLabel::Disc;
    return PixelLabel::Background;
}

}  // namespace detail

inline LabelMask decode_mask(const std::vector<std::uint8_t>& bytes,
                             DecodeMode mode = DecodeMode::Lenient) {
    using namespace detail;
    if (bytes.size() < 54) throw MalformedHeader("file too small for BMP headers");
    if (bytes[0] != 'B' || bytes[1] != 'M') throw MalformedHeader("missing BM magic");

    const std::uint32_t off_bits = read_u32(&bytes[10]);
    const std::uint32_t info_size = read_u32(&bytes[14]);
    if (info_size < 40) throw MalformedHeader("info header smaller than 40 bytes");
    if (std::size_t(14) + info_size > bytes.size())
        throw MalformedHeader("info header exceeds file size");

    const std::int32_t raw_width = read_i32(&bytes[18]);
    const std::int32_t raw_height = read_i32(&bytes[22]);
    const std::uint16_t planes = read_u16(&bytes[26]);
    const std::uint16_t bit_count = read_u16(&bytes[28]);
    const std::uint32_t compression = read_u32(&bytes[30]);
    std::uint32_t clr_used = read_u32(&bytes[46]);

    if (raw_width <= 0 || raw_height == 0) throw MalformedHeader("non-positive dimensions");
    if (planes != 1) throw MalformedHeader("planes field must be 1");
    if (compression != 0) throw UnsupportedEncoding("compressed BMP not supported");
    if (bit_count != 8 && bit_count != 24)
        throw UnsupportedEncoding("bit depth " + std::to_string(bit_count) +
                                  " not supported (expected 8 or 24)");

    const bool top_down = raw_height < 0;
    const int width = raw_width;
    const int height = top_down ? -raw_height : raw_height;

    // Palette gray lookup (8-bit only). Entries are B,G,R,reserved.
    std::vector<std::uint8_t> palette_gray;
    if (bit_count == 8) {
        if (clr_used == 0) clr_used = 256;
        if (clr_used > 256) throw MalformedHeader("palette size exceeds 256 entries");
        const std::size_t pal_off = std::size_t(14) + info_size;
        if (pal_off + std::size_t(clr_used) * 4 > bytes.size())
            throw MalformedHeader("palette exceeds file size");
        palette_gray.resize(clr_used);
        for (std::uint32_t i = 0; i < clr_used; ++i) {
            const std::uint8_t b = bytes[pal_off + 4 * i];
            const std::uint8_t g = bytes[pal_off + 4 * i + 1];
            const std::uint8_t r = bytes[pal_off + 4 * i + 2];
            if (r != g || g != b)
                throw UnsupportedEncoding("non-gray palette entry " + std::to_string(i));
            palette_gray[i] = r;
        }
    }

    const std::size_t stride = row_stride(std::size_t(width), bit_count == 8 ? 1 : 3);
    if (std::size_t(off_bits) < std::size_t(14) + info_size)
        throw MalformedHeader("pixel data offset overlaps headers");
    if (std::size_t(off_bits) + stride * std::size_t(height) > bytes.size())
        throw MalformedHeader("pixel data exceeds file size");

    LabelMask mask(width, height);
    for (int y = 0; y < height; ++y) {
        const int file_row = top_down ? y : height - 1 - y;
        const std::uint8_t* row = &bytes[off_bits + stride * std::size_t(file_row)];
        for (int x = 0; x < width; ++x) {
            std::uint8_t gray;
            if (bit_count == 8) {
                const std::uint8_t idx = row[x];
                if (idx >= palette_gray.size())
                    throw MalformedHeader("pixel index " + std::to_string(int(idx)) +
                                          " outside palette");
                gray = palette_gray[idx];
            } else {
                const std::uint8_t b = row[3 * x];
                const std::uint8_t g = row[3 * x + 1];
                const std::uint8_t r = row[3 * x + 2];
                if (r != g || g != b)
                    throw UnsupportedEncoding("non-gray pixel at (" + std::to_string(x) +
                                              ", " + std::to_string(y) + ")");
                gray = r;
            }
            mask.set(x, y, snap_gray(gray, mode, x, y));
        }
    }
    return mask;
}

inline std::vector<std::uint8_t> encode_mask(const LabelMask& mask) {
    using namespace detail;
    const std::size_t stride = row_stride(std::size_t(mask.width), 1);
    const std::size_t pixel_bytes = stride * std::size_t(mask.height);
    const std::uint32_t off_bits = 14 + 40 + 256 * 4;
    const std::uint32_t file_size = static_cast<std::uint32_t>(off_bits + pixel_bytes);

    std::vector<std::uint8_t> out;
    out.reserve(file_size);
    out.push_back('B');
    out.push_back('M');
    put_u32(out, file_size);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u32(out, off_bits);

    put_u32(out, 40);  // BITMAPINFOHEADER
    put_u32(out, std::uint32_t(mask.width));
    put_u32(out, std::uint32_t(mask.height));  // positive: bottom-up
    put_u16(out, 1);
    put_u16(out, 8);
    put_u32(out, 0);  // BI_RGB
    put_u32(out, static_cast<std::uint32_t>(pixel_bytes));
    put_u32(out, 2835);  // 72 dpi
    put_u32(out, 2835);
    put_u32(out, 256);
    put_u32(out, 0);

    for (int i = 0; i < 256; ++i) {
        out.push_back(std::uint8_t(i));
        out.push_back(std::uint8_t(i));
        out.push_back(std::uint8_t(i));
        out.push_back(0);
    }

    for (int y = mask.height - 1; y >= 0; --y) {
        for (int x = 0; x < mask.width; ++x) out.push_back(gray_of(mask.at(x, y)));
        for (std::size_t p = std::size_t(mask.width); p < stride; ++p) out.push_back(0);
    }
    return out;
}

inline LabelMask load_mask(const std::string& path, DecodeMode mode = DecodeMode::Lenient) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mask file: " + path);
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    return decode_mask(bytes, mode);
}

inline void save_mask(const LabelMask& mask, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_mask(mask);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write mask file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write on mask file: " + path);
}

}  // namespace refuge
