#pragma once

// Occlusion detection from one backward flow field and the soft weights the
// blending stages consume.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vtfusion/config.hpp"
#include "vtfusion/core.hpp"
#include "vtfusion/imageops.hpp"
#include "vtfusion/view_transition.hpp"

namespace vtfusion {

// Foreground objects occlude on their left and upper sides. Every foreground
// pixel that touches a background pixel among its left, upper-left or upper
// neighbors contributes the axis-aligned rectangle spanning the flow
// difference toward the upper-left; the mask is the union of all such
// rectangles. Rectangles accumulate in a difference grid, so the cost stays
// O(n) no matter how large the flow contrasts are.
inline BinaryMask compute_occlusion(const FlowField& f, const FusionConfig& cfg) {
    if (!f.all_valid()) throw std::invalid_argument("compute_occlusion: flow must be fully valid");
    const int w = f.width, h = f.height;
    const int k = normalized_kernel(cfg.kernel);

    std::vector<double> mag(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) mag[i] = flow_mag(f.u[i], f.v[i]);
    const auto local_mean = detail::box_filter_plane(mag, w, h, k);

    std::vector<std::uint8_t> fg(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        fg[i] = mag[i] > local_mean[i] + kForegroundEps ? 1 : 0;

    std::vector<std::int32_t> diff(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    const auto add_rect = [&](int r0, int c0, int r1, int c1) {
        const std::size_t stride = w + 1;
        diff[static_cast<std::size_t>(r0) * stride + c0] += 1;
        diff[static_cast<std::size_t>(r0) * stride + c1 + 1] -= 1;
        diff[static_cast<std::size_t>(r1 + 1) * stride + c0] -= 1;
        diff[static_cast<std::size_t>(r1 + 1) * stride + c1 + 1] += 1;
    };

    const int nb[3][2] = {{0, -1}, {-1, -1}, {-1, 0}};  // left, upper-left, up
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            const std::size_t p = f.idx(j, i);
            if (!fg[p]) continue;
            for (const auto& d : nb) {
                const int y = j + d[0], x = i + d[1];
                if (y < 0 || x < 0) continue;
                const std::size_t q = f.idx(y, x);
                if (fg[q]) continue;
                const long dv = std::lround(std::abs(f.v[q] - f.v[p]));
                const long du = std::lround(std::abs(f.u[q] - f.u[p]));
                const int r0 = static_cast<int>(std::max(0L, j - dv));
                const int c0 = static_cast<int>(std::max(0L, i - du));
                add_rect(r0, c0, j, i);
            }
        }

    BinaryMask occ(w, h);
    std::vector<std::int64_t> row(static_cast<std::size_t>(w) + 1, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[x] += diff[static_cast<std::size_t>(y) * (w + 1) + x];
        std::int64_t acc = 0;
        for (int x = 0; x < w; ++x) {
            acc += row[x];
            occ.bits[occ.idx(y, x)] = acc > 0 ? 1 : 0;
        }
    }
    return occ;
}

namespace detail {

constexpr double kEdtInf = 1e20;

// 1D squared distance transform via the lower envelope of parabolas.
inline void edt_1d(const double* f, int n, double* d, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kEdtInf;
    z[1] = kEdtInf;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + static_cast<double>(q) * q) -
                    (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kEdtInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

// Exact squared Euclidean distance to the marked set.
inline std::vector<double> edt_squared(const BinaryMask& m) {
    const int w = m.width, h = m.height;
    std::vector<double> dist(m.bits.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) dist[i] = m.bits[i] ? 0.0 : kEdtInf;

    const int n = std::max(w, h);
    std::vector<double> fcol(n), dcol(n), z(n + 1);
    std::vector<int> v(n);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) fcol[y] = dist[m.idx(y, x)];
        edt_1d(fcol.data(), h, dcol.data(), v.data(), z.data());
        for (int y = 0; y < h; ++y) dist[m.idx(y, x)] = dcol[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) fcol[x] = dist[m.idx(y, x)];
        edt_1d(fcol.data(), w, dcol.data(), v.data(), z.data());
        for (int x = 0; x < w; ++x) dist[m.idx(y, x)] = dcol[x];
    }
    return dist;
}

}  // namespace detail

// Weight 1 on the mask, then a linear falloff with Euclidean distance that
// reaches 0 at `width` pixels.
inline WeightMap soften_mask(const BinaryMask& m, double width) {
    WeightMap wm(m.width, m.height);
    if (width <= 0.0) {
        for (std::size_t i = 0; i < m.bits.size(); ++i) wm.w[i] = m.bits[i] ? 1.0 : 0.0;
        return wm;
    }
    const auto sq = detail::edt_squared(m);
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = std::sqrt(sq[i]);
        wm.w[i] = std::max(0.0, 1.0 - d / width);
    }
    return wm;
}

inline double occlusion_area_pct(const BinaryMask& m) {
    const std::size_t total = static_cast<std::size_t>(m.width) * m.height;
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(m.count()) / static_cast<double>(total);
}

inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const bool pa = a.bits[i] != 0, pb = b.bits[i] != 0;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vtfusion
