#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vtfusion {

// H x W x C raster, row-major, interleaved channels. Samples are normalized
// reals in [0,1]; conversion to/from 8-bit happens only at file I/O.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w < 1 || h < 1 || (c != 1 && c != 3))
            throw std::invalid_argument("ImageBuffer: bad dimensions " + std::to_string(w) +
                                        "x" + std::to_string(h) + "x" + std::to_string(c));
    }

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
    double& at(int y, int x, int c) { return data[idx(y, x) * channels + c]; }
    double at(int y, int x, int c) const { return data[idx(y, x) * channels + c]; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_size(const ImageBuffer& o) const { return width == o.width && height == o.height; }
};

// Per-pixel displacement field on the target grid. u is horizontal (columns),
// v is vertical (rows), both in pixels. `valid` marks pixels whose displacement
// is meaningful.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<std::uint8_t> valid;

    FlowField() = default;
    FlowField(int w, int h, double fu = 0.0, double fv = 0.0, bool ok = true)
        : width(w), height(h),
          u(static_cast<std::size_t>(w) * h, fu),
          v(static_cast<std::size_t>(w) * h, fv),
          valid(static_cast<std::size_t>(w) * h, ok ? 1 : 0) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("FlowField: bad dimensions");
    }

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
    std::size_t size() const { return u.size(); }
    bool all_valid() const {
        for (auto b : valid)
            if (!b) return false;
        return true;
    }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b ? 1 : 0;
        return n;
    }
};

// Soft blending weights, each in [0,1].
struct WeightMap {
    int width = 0;
    int height = 0;
    std::vector<double> w;

    WeightMap() = default;
    WeightMap(int wd, int ht, double fill = 0.0)
        : width(wd), height(ht), w(static_cast<std::size_t>(wd) * ht, fill) {}

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
};

// Per-pixel distance-to-boundary values in pixels.
struct DistanceMap {
    int width = 0;
    int height = 0;
    std::vector<double> d;

    DistanceMap() = default;
    DistanceMap(int w, int h, double fill = 0.0)
        : width(w), height(h), d(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace vtfusion
