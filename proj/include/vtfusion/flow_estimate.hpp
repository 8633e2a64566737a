#pragma once

// Diagnostic coarse-to-fine block matcher. It exists so the CLI can run
// without a precomputed flow file; it recovers integer shifts on synthetic
// pairs and is not meant to compete with a real optical-flow method.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vtfusion/core.hpp"

namespace vtfusion {

namespace detail {

struct GrayPlane {
    int w = 0, h = 0;
    std::vector<double> v;
    double at(int y, int x) const {
        return v[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    }
};

inline GrayPlane to_gray(const ImageBuffer& img) {
    GrayPlane g;
    g.w = img.width;
    g.h = img.height;
    g.v.resize(img.pixel_count());
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        double s = 0.0;
        for (int c = 0; c < img.channels; ++c) s += img.data[i * img.channels + c];
        g.v[i] = s / img.channels;
    }
    return g;
}

inline GrayPlane downsample2(const GrayPlane& src) {
    GrayPlane out;
    out.w = (src.w + 1) / 2;
    out.h = (src.h + 1) / 2;
    out.v.resize(static_cast<std::size_t>(out.w) * out.h);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            const double s = src.at(2 * y, 2 * x) + src.at(2 * y, 2 * x + 1) +
                             src.at(2 * y + 1, 2 * x) + src.at(2 * y + 1, 2 * x + 1);
            out.v[static_cast<std::size_t>(y) * out.w + x] = s * 0.25;
        }
    return out;
}

constexpr int kBlockRadius = 3;  // 7x7 SAD blocks

inline double block_sad(const GrayPlane& a, const GrayPlane& b, int ax, int ay, int bx, int by) {
    double sad = 0.0;
    for (int dy = -kBlockRadius; dy <= kBlockRadius; ++dy)
        for (int dx = -kBlockRadius; dx <= kBlockRadius; ++dx)
            sad += std::abs(a.at(ay + dy, ax + dx) - b.at(by + dy, bx + dx));
    return sad;
}

inline double block_stddev(const GrayPlane& a, int x, int y) {
    double s = 0.0, s2 = 0.0;
    const int n = (2 * kBlockRadius + 1) * (2 * kBlockRadius + 1);
    for (int dy = -kBlockRadius; dy <= kBlockRadius; ++dy)
        for (int dx = -kBlockRadius; dx <= kBlockRadius; ++dx) {
            const double v = a.at(y + dy, x + dx);
            s += v;
            s2 += v * v;
        }
    const double mean = s / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    return std::sqrt(var);
}

// Integer search around an initial guess. Ties prefer the smaller
// displacement, then the first candidate in scan order.
inline void search_level(const GrayPlane& wide, const GrayPlane& tele,
                         std::vector<int>& du, std::vector<int>& dv, int radius) {
    for (int y = 0; y < wide.h; ++y)
        for (int x = 0; x < wide.w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * wide.w + x;
            const int iu = du[i], iv = dv[i];
            double best_sad = -1.0;
            long best_d2 = 0;
            int best_u = iu, best_v = iv;
            for (int cy = -radius; cy <= radius; ++cy)
                for (int cx = -radius; cx <= radius; ++cx) {
                    const int cu = iu + cx, cv = iv + cy;
                    const double sad = block_sad(wide, tele, x, y, x + cu, y + cv);
                    const long d2 = static_cast<long>(cu) * cu + static_cast<long>(cv) * cv;
                    if (best_sad < 0.0 || sad < best_sad || (sad == best_sad && d2 < best_d2)) {
                        best_sad = sad;
                        best_d2 = d2;
                        best_u = cu;
                        best_v = cv;
                    }
                }
            du[i] = best_u;
            dv[i] = best_v;
        }
}

}  // namespace detail

// Backward flow on the wide grid: wide(p) ~ tele(p + F(p)). Low-texture
// pixels are flagged invalid so callers can treat them as low confidence.
inline FlowField estimate_flow_diagnostic(const ImageBuffer& wide, const ImageBuffer& tele,
                                          int levels, int search_radius) {
    if (!wide.same_size(tele))
        throw std::invalid_argument("estimate_flow: image dimensions differ");
    if (levels < 1 || search_radius < 1)
        throw std::invalid_argument("estimate_flow: levels and radius must be >= 1");

    std::vector<detail::GrayPlane> wp{detail::to_gray(wide)};
    std::vector<detail::GrayPlane> tp{detail::to_gray(tele)};
    while (static_cast<int>(wp.size()) < levels && std::min(wp.back().w, wp.back().h) >= 16) {
        wp.push_back(detail::downsample2(wp.back()));
        tp.push_back(detail::downsample2(tp.back()));
    }
    const int nlevels = static_cast<int>(wp.size());

    const int coarse_radius =
        std::max(1, (search_radius + (1 << (nlevels - 1)) - 1) >> (nlevels - 1));
    std::vector<int> du(wp.back().v.size(), 0), dv(wp.back().v.size(), 0);
    detail::search_level(wp.back(), tp.back(), du, dv, coarse_radius);

    for (int level = nlevels - 2; level >= 0; --level) {
        const auto& wl = wp[level];
        const auto& prev = wp[level + 1];
        std::vector<int> nu(wl.v.size()), nv(wl.v.size());
        for (int y = 0; y < wl.h; ++y)
            for (int x = 0; x < wl.w; ++x) {
                const std::size_t pi =
                    static_cast<std::size_t>(std::min(y / 2, prev.h - 1)) * prev.w +
                    std::min(x / 2, prev.w - 1);
                nu[static_cast<std::size_t>(y) * wl.w + x] = 2 * du[pi];
                nv[static_cast<std::size_t>(y) * wl.w + x] = 2 * dv[pi];
            }
        du.swap(nu);
        dv.swap(nv);
        detail::search_level(wl, tp[level], du, dv, 2);
    }

    FlowField flow(wide.width, wide.height);
    const auto& base = wp.front();
    for (std::size_t i = 0; i < flow.size(); ++i) {
        flow.u[i] = du[i];
        flow.v[i] = dv[i];
    }
    for (int y = 0; y < base.h; ++y)
        for (int x = 0; x < base.w; ++x)
            flow.valid[flow.idx(y, x)] = detail::block_stddev(base, x, y) > 1e-3 ? 1 : 0;
    return flow;
}

}  // namespace vtfusion
