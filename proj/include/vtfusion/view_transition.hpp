#pragma once

// Flow revision that carries the telephoto image from the wide view into the
// mixed output view: a smooth target flow, a discontinuity-aware distance
// budget, a per-pixel clip, and a coordinate revision with hole filling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vtfusion/config.hpp"
#include "vtfusion/core.hpp"
#include "vtfusion/imageops.hpp"
#include "vtfusion/warp.hpp"

namespace vtfusion {

// Slack for magnitude-vs-local-mean comparisons; absorbs integral-image
// rounding so constant fields classify as all-background.
constexpr double kForegroundEps = 1e-6;

struct TargetFlowResult {
    FlowField fstar;
    BinaryMask foreground;
};

// Smooth per-pixel target values: pixels classify as foreground where their
// flow magnitude exceeds the local box mean's magnitude, class-conditional
// means are formed with box-filtered mask denominators, and the half-sum of
// the two gets one more box filter. A window that contains a single class
// leaves the other class's denominator near zero; those pixels fall back to
// the plain local mean.
inline TargetFlowResult target_flow(const FlowField& f, const FusionConfig& cfg) {
    if (!f.all_valid()) throw std::invalid_argument("target_flow: flow must be fully valid");
    const int k = normalized_kernel(cfg.kernel);
    const int w = f.width, h = f.height;
    const std::size_t n = f.size();

    const FlowField mean = box_filter(f, k);

    TargetFlowResult res{FlowField(w, h), BinaryMask(w, h)};
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool fg = flow_mag(f.u[i], f.v[i]) > flow_mag(mean.u[i], mean.v[i]) + kForegroundEps;
        res.foreground.bits[i] = fg ? 1 : 0;
        m[i] = fg ? 1.0 : 0.0;
    }

    std::vector<double> fu_m(n), fv_m(n), fu_b(n), fv_b(n), inv_m(n);
    for (std::size_t i = 0; i < n; ++i) {
        fu_m[i] = f.u[i] * m[i];
        fv_m[i] = f.v[i] * m[i];
        inv_m[i] = 1.0 - m[i];
        fu_b[i] = f.u[i] * inv_m[i];
        fv_b[i] = f.v[i] * inv_m[i];
    }
    const auto m_box = detail::box_filter_plane(m, w, h, k);
    const auto b_box = detail::box_filter_plane(inv_m, w, h, k);
    const auto fum_box = detail::box_filter_plane(fu_m, w, h, k);
    const auto fvm_box = detail::box_filter_plane(fv_m, w, h, k);
    const auto fub_box = detail::box_filter_plane(fu_b, w, h, k);
    const auto fvb_box = detail::box_filter_plane(fv_b, w, h, k);

    constexpr double kDenomEps = 1e-6;
    std::vector<double> avg_u(n), avg_v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ffu = m_box[i] < kDenomEps ? mean.u[i] : fum_box[i] / m_box[i];
        const double ffv = m_box[i] < kDenomEps ? mean.v[i] : fvm_box[i] / m_box[i];
        const double fbu = b_box[i] < kDenomEps ? mean.u[i] : fub_box[i] / b_box[i];
        const double fbv = b_box[i] < kDenomEps ? mean.v[i] : fvb_box[i] / b_box[i];
        avg_u[i] = 0.5 * (ffu + fbu);
        avg_v[i] = 0.5 * (ffv + fbv);
    }
    res.fstar.u = detail::box_filter_plane(avg_u, w, h, k);
    res.fstar.v = detail::box_filter_plane(avg_v, w, h, k);
    return res;
}

// Distance to the overlap boundary, relaxed by flow discontinuities: pixels
// whose 4-neighbor flow-magnitude step exceeds the gradient threshold are
// non-connected points; a ray that would cross one no longer ties the pixel
// to that boundary. A pixel blocked in all four axis directions gets
// D_max = max(width, height).
inline DistanceMap distance_map(const FlowField& f, const FusionConfig& cfg) {
    const int w = f.width, h = f.height;
    const double dmax = static_cast<double>(std::max(w, h));
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> mag(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) mag[i] = flow_mag(f.u[i], f.v[i]);

    std::vector<std::uint8_t> nc(f.size(), 0);
    const double tau = cfg.gradient_threshold;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = f.idx(y, x);
            const double m0 = mag[i];
            const bool hit = (x > 0 && std::abs(m0 - mag[i - 1]) > tau) ||
                             (x + 1 < w && std::abs(m0 - mag[i + 1]) > tau) ||
                             (y > 0 && std::abs(m0 - mag[i - w]) > tau) ||
                             (y + 1 < h && std::abs(m0 - mag[i + w]) > tau);
            nc[i] = hit ? 1 : 0;
        }

    DistanceMap dm(w, h, inf);
    // each direction: the ray length to that boundary, or inf once a
    // non-connected point lies strictly between the pixel and the boundary
    for (int y = 0; y < h; ++y) {
        bool blocked = false;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = f.idx(y, x);
            dm.d[i] = std::min(dm.d[i], blocked ? inf : static_cast<double>(x));
            blocked = blocked || nc[i];
        }
        blocked = false;
        for (int x = w - 1; x >= 0; --x) {
            const std::size_t i = f.idx(y, x);
            dm.d[i] = std::min(dm.d[i], blocked ? inf : static_cast<double>(w - 1 - x));
            blocked = blocked || nc[i];
        }
    }
    for (int x = 0; x < w; ++x) {
        bool blocked = false;
        for (int y = 0; y < h; ++y) {
            const std::size_t i = f.idx(y, x);
            dm.d[i] = std::min(dm.d[i], blocked ? inf : static_cast<double>(y));
            blocked = blocked || nc[i];
        }
        blocked = false;
        for (int y = h - 1; y >= 0; --y) {
            const std::size_t i = f.idx(y, x);
            dm.d[i] = std::min(dm.d[i], blocked ? inf : static_cast<double>(h - 1 - y));
            blocked = blocked || nc[i];
        }
    }
    for (double& v : dm.d)
        if (!(v < dmax)) v = dmax;
    return dm;
}

namespace detail {

// Clamp one component to [base - bound, base + bound] and keep the inequality
// exact in double arithmetic, so downstream bound checks never see a
// rounding-induced violation.
inline double clip_component(double base, double target, double bound) {
    const double delta = std::clamp(target - base, -bound, bound);
    double out = base + delta;
    while (out - base > bound) out = std::nextafter(out, base);
    while (base - out > bound) out = std::nextafter(out, base);
    return out;
}

}  // namespace detail

// Per-component clamp of the target flow to within ratio * distance of the
// original flow. A zero-distance pixel keeps its original flow exactly.
inline FlowField clip_flow(const FlowField& f, const FlowField& fstar, const DistanceMap& dist,
                           double ratio) {
    if (f.width != fstar.width || f.height != fstar.height || f.width != dist.width ||
        f.height != dist.height)
        throw std::invalid_argument("clip_flow: field sizes differ");
    FlowField out(f.width, f.height);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double bound = ratio * dist.d[i];
        out.u[i] = detail::clip_component(f.u[i], fstar.u[i], bound);
        out.v[i] = detail::clip_component(f.v[i], fstar.v[i], bound);
    }
    return out;
}

// Fill invalid pixels from the nearest valid pixel along the four axis
// directions, preferring the candidate with the smallest flow magnitude
// (background flow). Sweeps are Jacobi-style against a snapshot of the
// validity mask, so results do not depend on traversal order; magnitude ties
// resolve left, up, right, down.
inline FlowField fill_empty(const FlowField& f) {
    FlowField cur = f;
    const int w = f.width, h = f.height;
    std::size_t remaining = 0;
    for (auto b : cur.valid) remaining += b ? 0 : 1;

    struct Cand {
        double u = 0.0, v = 0.0;
        bool has = false;
    };
    std::vector<Cand> dir[4];  // left, up, right, down

    while (remaining > 0) {
        for (auto& d : dir) d.assign(cur.size(), Cand{});
        for (int y = 0; y < h; ++y) {
            Cand run;
            for (int x = 0; x < w; ++x) {
                const std::size_t i = cur.idx(y, x);
                dir[0][i] = run;
                if (cur.valid[i]) run = {cur.u[i], cur.v[i], true};
            }
            run = Cand{};
            for (int x = w - 1; x >= 0; --x) {
                const std::size_t i = cur.idx(y, x);
                dir[2][i] = run;
                if (cur.valid[i]) run = {cur.u[i], cur.v[i], true};
            }
        }
        for (int x = 0; x < w; ++x) {
            Cand run;
            for (int y = 0; y < h; ++y) {
                const std::size_t i = cur.idx(y, x);
                dir[1][i] = run;
                if (cur.valid[i]) run = {cur.u[i], cur.v[i], true};
            }
            run = Cand{};
            for (int y = h - 1; y >= 0; --y) {
                const std::size_t i = cur.idx(y, x);
                dir[3][i] = run;
                if (cur.valid[i]) run = {cur.u[i], cur.v[i], true};
            }
        }

        FlowField next = cur;
        std::size_t filled = 0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (cur.valid[i]) continue;
            int best = -1;
            double best_mag = 0.0;
            for (int d = 0; d < 4; ++d) {
                if (!dir[d][i].has) continue;
                const double mag = flow_mag(dir[d][i].u, dir[d][i].v);
                if (best < 0 || mag < best_mag) {
                    best = d;
                    best_mag = mag;
                }
            }
            if (best < 0) continue;
            next.u[i] = dir[best][i].u;
            next.v[i] = dir[best][i].v;
            next.valid[i] = 1;
            ++filled;
        }
        if (filled == 0)
            throw std::runtime_error("fill_empty: flow field has no valid pixels to propagate");
        cur = std::move(next);
        remaining -= filled;
    }
    return cur;
}

// Coordinate revision of the adjusted flow: each pixel's value moves to its
// new position by forward warp and exposed pixels are filled with nearby
// background flow. The stored value is the adjusted flow itself; the
// ray-consistent switch stores 2f - fhat so the displaced pixel keeps
// sampling the identical telephoto ray.
inline FlowField transform_flow(const FlowField& f, const FlowField& fhat,
                                const FusionConfig& cfg = FusionConfig{}) {
    if (f.width != fhat.width || f.height != fhat.height)
        throw std::invalid_argument("transform_flow: field sizes differ");
    FlowField disp(f.width, f.height);
    for (std::size_t i = 0; i < f.size(); ++i) {
        disp.u[i] = fhat.u[i] - f.u[i];
        disp.v[i] = fhat.v[i] - f.v[i];
    }
    FlowField values = fhat;
    if (cfg.ray_consistent_transform) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            values.u[i] = 2.0 * f.u[i] - fhat.u[i];
            values.v[i] = 2.0 * f.v[i] - fhat.v[i];
        }
    }
    return fill_empty(forward_warp(values, disp));
}

inline WarpResult warp_tele(const ImageBuffer& tele, const FlowField& fto) {
    return backward_warp(tele, fto);
}

}  // namespace vtfusion
