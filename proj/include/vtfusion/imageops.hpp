#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "vtfusion/config.hpp"
#include "vtfusion/core.hpp"

namespace vtfusion {

// Summed-area table with the exclusive-prefix convention:
// table(r, c) = sum of the image over rows < r and cols < c.
// Tables are (height+1) x (width+1) per channel, so rectangle sums are four
// lookups and box filtering costs O(n) independent of the window size.
struct IntegralImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> table;  // channel-major planes of (h+1)*(w+1)

    std::size_t plane_size() const {
        return static_cast<std::size_t>(width + 1) * (height + 1);
    }
    double entry(int r, int c, int ch) const {
        return table[ch * plane_size() + static_cast<std::size_t>(r) * (width + 1) + c];
    }
    // Sum over rows [r0, r1) and cols [c0, c1).
    double rect_sum(int r0, int c0, int r1, int c1, int ch = 0) const {
        const double* t = table.data() + ch * plane_size();
        const std::size_t stride = width + 1;
        return t[r1 * stride + c1] - t[r0 * stride + c1] - t[r1 * stride + c0] + t[r0 * stride + c0];
    }
};

namespace detail {

inline void integral_plane(const double* src, int w, int h, int src_stride_px, double* out) {
    const std::size_t ts = w + 1;
    for (int c = 0; c <= w; ++c) out[c] = 0.0;
    for (int r = 0; r < h; ++r) {
        double rowsum = 0.0;
        out[(r + 1) * ts] = 0.0;
        for (int c = 0; c < w; ++c) {
            rowsum += src[(static_cast<std::size_t>(r) * w + c) * src_stride_px];
            out[(r + 1) * ts + c + 1] = out[r * ts + c + 1] + rowsum;
        }
    }
}

// Border-aware box mean of one scalar plane: each output is the mean of the
// in-bounds samples of the k x k window centered at it.
inline std::vector<double> box_filter_plane(const std::vector<double>& src, int w, int h, int k) {
    const int kk = normalized_kernel(k);
    const int r = kk / 2;
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1));
    integral_plane(src.data(), w, h, 1, sat.data());
    std::vector<double> out(src.size());
    const std::size_t ts = w + 1;
    for (int y = 0; y < h; ++y) {
        const int r0 = std::max(0, y - r), r1 = std::min(h, y + r + 1);
        for (int x = 0; x < w; ++x) {
            const int c0 = std::max(0, x - r), c1 = std::min(w, x + r + 1);
            const double s = sat[r1 * ts + c1] - sat[r0 * ts + c1] - sat[r1 * ts + c0] + sat[r0 * ts + c0];
            out[static_cast<std::size_t>(y) * w + x] = s / ((r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

}  // namespace detail

inline IntegralImage integral_image(const ImageBuffer& img) {
    IntegralImage ii;
    ii.width = img.width;
    ii.height = img.height;
    ii.channels = img.channels;
    ii.table.resize(ii.plane_size() * img.channels);
    for (int c = 0; c < img.channels; ++c)
        detail::integral_plane(img.data.data() + c, img.width, img.height, img.channels,
                               ii.table.data() + c * ii.plane_size());
    return ii;
}

inline ImageBuffer box_filter(const ImageBuffer& img, int k) {
    ImageBuffer out(img.width, img.height, img.channels);
    std::vector<double> plane(img.pixel_count());
    for (int c = 0; c < img.channels; ++c) {
        for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = img.data[i * img.channels + c];
        const auto f = detail::box_filter_plane(plane, img.width, img.height, k);
        for (std::size_t i = 0; i < plane.size(); ++i) out.data[i * img.channels + c] = f[i];
    }
    return out;
}

inline FlowField box_filter(const FlowField& f, int k) {
    FlowField out(f.width, f.height);
    out.u = detail::box_filter_plane(f.u, f.width, f.height, k);
    out.v = detail::box_filter_plane(f.v, f.width, f.height, k);
    return out;
}

// Bilinear interpolation of the four lattice neighbors. Coordinates outside
// [0, W-1] x [0, H-1] clamp to the edge; the return value reports whether the
// original coordinates were in range.
inline bool bilinear_sample(const ImageBuffer& img, double x, double y, double* out) {
    const bool in_range = x >= 0.0 && x <= img.width - 1 && y >= 0.0 && y <= img.height - 1;
    const double cx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y0 = static_cast<int>(std::floor(cy));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;
    for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
        const double bot = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
        out[c] = top * (1.0 - fy) + bot * fy;
    }
    return in_range;
}

inline double flow_mag(double u, double v) { return std::sqrt(u * u + v * v); }

inline ImageBuffer flow_magnitude(const FlowField& f) {
    ImageBuffer out(f.width, f.height, 1);
    for (std::size_t i = 0; i < f.size(); ++i) out.data[i] = flow_mag(f.u[i], f.v[i]);
    return out;
}

// Align-corners bilinear resize; pass-through when sizes already match.
inline ImageBuffer resize_bilinear(const ImageBuffer& img, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw std::invalid_argument("resize: bad target size");
    if (new_w == img.width && new_h == img.height) return img;
    ImageBuffer out(new_w, new_h, img.channels);
    const double sx = new_w > 1 ? static_cast<double>(img.width - 1) / (new_w - 1) : 0.0;
    const double sy = new_h > 1 ? static_cast<double>(img.height - 1) / (new_h - 1) : 0.0;
    double px[3];
    for (int y = 0; y < new_h; ++y)
        for (int x = 0; x < new_w; ++x) {
            bilinear_sample(img, x * sx, y * sy, px);
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = px[c];
        }
    return out;
}

// Separable Gaussian blur with edge replication; radius covers 3 sigma.
inline ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kern(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kern[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kern[i + radius];
    }
    for (double& kv : kern) kv /= sum;

    ImageBuffer tmp(img.width, img.height, img.channels);
    ImageBuffer out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int xx = std::clamp(x + i, 0, img.width - 1);
                    acc += kern[i + radius] * img.at(y, xx, c);
                }
                tmp.at(y, x, c) = acc;
            }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int yy = std::clamp(y + i, 0, img.height - 1);
                    acc += kern[i + radius] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = acc;
            }
    return out;
}

}  // namespace vtfusion
