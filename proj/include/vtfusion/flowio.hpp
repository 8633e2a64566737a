#pragma once

// Image and flow file I/O.
//
// Images: 8-bit PNG (gray or RGB) plus binary PPM (P6) and PGM (P5).
// Round trips are lossless for 8-bit data; samples convert to normalized
// doubles on read and back with round-to-nearest on write.
//
// Flow: the Middlebury ".flo" layout, little-endian:
//   bytes 0-3   tag "PIEH", reads as the float 202021.25 (endianness check)
//   bytes 4-7   int32 width
//   bytes 8-11  int32 height
//   rest        row-major interleaved (u, v) float32 pairs
// Values with magnitude > 1e9 are treated as unknown and flagged invalid;
// invalid pixels are written back with the 1e10 sentinel.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "vtfusion/core.hpp"

namespace vtfusion {

constexpr float kFlowTag = 202021.25f;
constexpr double kFlowUnknown = 1e9;

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw std::runtime_error("io: cannot open " + path);
    return f;
}

inline std::uint8_t to_byte(double v) {
    const long r = std::lround(clamp01(v) * 255.0);
    return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

// Skips PNM whitespace and # comments, then parses one non-negative integer.
inline int pnm_int(std::FILE* f, const std::string& path) {
    int c = std::fgetc(f);
    while (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') {
        if (c == '#')
            while (c != '\n' && c != EOF) c = std::fgetc(f);
        c = std::fgetc(f);
    }
    if (c < '0' || c > '9') throw std::runtime_error("io: corrupt PNM header in " + path);
    long val = 0;
    while (c >= '0' && c <= '9') {
        val = val * 10 + (c - '0');
        if (val > 1000000000L) throw std::runtime_error("io: dimension overflow in " + path);
        c = std::fgetc(f);
    }
    return static_cast<int>(val);
}

inline ImageBuffer read_pnm(std::FILE* f, const std::string& path) {
    const int p0 = std::fgetc(f);
    const int p1 = std::fgetc(f);
    if (p0 != 'P' || (p1 != '5' && p1 != '6'))
        throw std::runtime_error("io: unsupported PNM type in " + path);
    const int channels = p1 == '6' ? 3 : 1;
    const int w = pnm_int(f, path);
    const int h = pnm_int(f, path);
    const int maxval = pnm_int(f, path);
    if (maxval != 255 && maxval != 65535)
        throw std::runtime_error("io: unsupported PNM maxval in " + path);
    if (w < 1 || h < 1 || w > 65536 || h > 65536)
        throw std::runtime_error("io: bad PNM dimensions in " + path);
    ImageBuffer img(w, h, channels);
    const std::size_t n = img.data.size();
    if (maxval == 255) {
        std::vector<std::uint8_t> raw(n);
        if (std::fread(raw.data(), 1, n, f) != n)
            throw std::runtime_error("io: truncated PNM data in " + path);
        for (std::size_t i = 0; i < n; ++i) img.data[i] = raw[i] / 255.0;
    } else {
        std::vector<std::uint8_t> raw(n * 2);  // big-endian 16-bit samples
        if (std::fread(raw.data(), 1, raw.size(), f) != raw.size())
            throw std::runtime_error("io: truncated PNM data in " + path);
        for (std::size_t i = 0; i < n; ++i)
            img.data[i] = ((raw[2 * i] << 8) | raw[2 * i + 1]) / 65535.0;
    }
    return img;
}

inline ImageBuffer read_png_file(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("io: png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("io: png init failed");
    }
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("io: corrupt PNG " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    if (w < 1 || h < 1 || w > 65536 || h > 65536) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("io: bad PNG dimensions in " + path);
    }
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("io: unsupported PNG channel count in " + path);
    }
    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    raw.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageBuffer img(static_cast<int>(w), static_cast<int>(h), channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

}  // namespace detail

inline ImageBuffer read_image(const std::string& path) {
    auto f = detail::open_file(path, "rb");
    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, f.get()) != 2)
        throw std::runtime_error("io: truncated file " + path);
    std::rewind(f.get());
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
        return detail::read_pnm(f.get(), path);
    if (magic[0] == 0x89 && magic[1] == 'P')
        return detail::read_png_file(f.get(), path);
    throw std::runtime_error("io: unsupported image format in " + path);
}

inline void write_png(const std::string& path, const ImageBuffer& img) {
    auto f = detail::open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("io: png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("io: png init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("io: cannot write PNG " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<std::uint8_t> row(stride);
    for (int y = 0; y < img.height; ++y) {
        for (std::size_t i = 0; i < stride; ++i)
            row[i] = detail::to_byte(img.data[y * stride + i]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline void write_pnm(const std::string& path, const ImageBuffer& img) {
    auto f = detail::open_file(path, "wb");
    std::fprintf(f.get(), "P%c\n%d %d\n255\n", img.channels == 3 ? '6' : '5', img.width, img.height);
    std::vector<std::uint8_t> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = detail::to_byte(img.data[i]);
    if (std::fwrite(raw.data(), 1, raw.size(), f.get()) != raw.size())
        throw std::runtime_error("io: cannot write " + path);
}

inline void write_image(const std::string& path, const ImageBuffer& img) {
    const auto dot = path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".png") return write_png(path, img);
    if (ext == ".ppm" || ext == ".pgm") return write_pnm(path, img);
    throw std::runtime_error("io: unsupported output extension for " + path);
}

// 16-bit big-endian PGM; values are scaled by `scale` and rounded.
inline void write_pgm16(const std::string& path, const DistanceMap& dm, double scale = 1.0) {
    auto f = detail::open_file(path, "wb");
    std::fprintf(f.get(), "P5\n%d %d\n65535\n", dm.width, dm.height);
    std::vector<std::uint8_t> raw(dm.d.size() * 2);
    for (std::size_t i = 0; i < dm.d.size(); ++i) {
        long v = std::lround(dm.d[i] * scale);
        v = v < 0 ? 0 : (v > 65535 ? 65535 : v);
        raw[2 * i] = static_cast<std::uint8_t>(v >> 8);
        raw[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    if (std::fwrite(raw.data(), 1, raw.size(), f.get()) != raw.size())
        throw std::runtime_error("io: cannot write " + path);
}

inline void write_mask_pgm(const std::string& path, const BinaryMask& m) {
    ImageBuffer img(m.width, m.height, 1);
    for (std::size_t i = 0; i < m.bits.size(); ++i) img.data[i] = m.bits[i] ? 1.0 : 0.0;
    write_pnm(path, img);
}

inline void write_weights_pgm(const std::string& path, const WeightMap& w) {
    ImageBuffer img(w.width, w.height, 1);
    for (std::size_t i = 0; i < w.w.size(); ++i) img.data[i] = clamp01(w.w[i]);
    write_pnm(path, img);
}

inline FlowField read_flow(const std::string& path) {
    auto f = detail::open_file(path, "rb");
    float tag = 0.0f;
    std::int32_t w = 0, h = 0;
    if (std::fread(&tag, sizeof(tag), 1, f.get()) != 1 ||
        std::fread(&w, sizeof(w), 1, f.get()) != 1 ||
        std::fread(&h, sizeof(h), 1, f.get()) != 1)
        throw std::runtime_error("io: truncated flow header in " + path);
    if (tag != kFlowTag) throw std::runtime_error("io: bad flow magic in " + path);
    if (w < 1 || h < 1 || w > 99999 || h > 99999)
        throw std::runtime_error("io: bad flow dimensions in " + path);
    FlowField flow(w, h);
    std::vector<float> raw(static_cast<std::size_t>(w) * h * 2);
    if (std::fread(raw.data(), sizeof(float), raw.size(), f.get()) != raw.size())
        throw std::runtime_error("io: flow payload shorter than header promises in " + path);
    if (std::fgetc(f.get()) != EOF)
        throw std::runtime_error("io: flow payload longer than header promises in " + path);
    for (std::size_t i = 0; i < flow.size(); ++i) {
        const double fu = raw[2 * i], fv = raw[2 * i + 1];
        flow.u[i] = fu;
        flow.v[i] = fv;
        flow.valid[i] = (std::abs(fu) <= kFlowUnknown && std::abs(fv) <= kFlowUnknown &&
                         std::isfinite(fu) && std::isfinite(fv))
                            ? 1
                            : 0;
    }
    return flow;
}

inline void write_flow(const std::string& path, const FlowField& flow) {
    auto f = detail::open_file(path, "wb");
    const std::int32_t w = flow.width, h = flow.height;
    if (std::fwrite("PIEH", 1, 4, f.get()) != 4 ||
        std::fwrite(&w, sizeof(w), 1, f.get()) != 1 ||
        std::fwrite(&h, sizeof(h), 1, f.get()) != 1)
        throw std::runtime_error("io: cannot write flow header to " + path);
    std::vector<float> raw(flow.size() * 2);
    for (std::size_t i = 0; i < flow.size(); ++i) {
        if (flow.valid[i]) {
            raw[2 * i] = static_cast<float>(flow.u[i]);
            raw[2 * i + 1] = static_cast<float>(flow.v[i]);
        } else {
            raw[2 * i] = raw[2 * i + 1] = 1e10f;
        }
    }
    if (std::fwrite(raw.data(), sizeof(float), raw.size(), f.get()) != raw.size())
        throw std::runtime_error("io: cannot write flow data to " + path);
}

}  // namespace vtfusion
