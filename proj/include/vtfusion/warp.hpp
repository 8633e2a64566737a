#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vtfusion/config.hpp"
#include "vtfusion/core.hpp"
#include "vtfusion/imageops.hpp"

namespace vtfusion {

struct WarpResult {
    ImageBuffer image;
    BinaryMask validity;  // true where a sample was in range / a splat landed
};

// out(p) = bilinear(src, p + f(p)). Out-of-range samples clamp to the edge
// and are recorded invalid; invalid flow pixels sample at p itself.
inline WarpResult backward_warp(const ImageBuffer& src, const FlowField& f) {
    WarpResult res{ImageBuffer(f.width, f.height, src.channels), BinaryMask(f.width, f.height)};
    double px[3];
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const std::size_t i = f.idx(y, x);
            bool ok = f.valid[i] != 0;
            const double sx = ok ? x + f.u[i] : x;
            const double sy = ok ? y + f.v[i] : y;
            ok = bilinear_sample(src, sx, sy, px) && ok;
            for (int c = 0; c < src.channels; ++c) res.image.at(y, x, c) = px[c];
            res.validity.bits[i] = ok ? 1 : 0;
        }
    return res;
}

namespace detail {

// Destination conflicts keep the splat with the largest displacement
// magnitude (foreground priority); exact ties go to the larger source raster
// index. Scanning sources in ascending raster order with >= makes the winner
// a pure function of the candidate set, independent of schedule.
inline void splat_winners(const FlowField& disp, double offset_u, double offset_v,
                          std::vector<std::int64_t>& winner, std::vector<double>& key) {
    winner.assign(disp.size(), -1);
    key.assign(disp.size(), -1.0);
    for (int y = 0; y < disp.height; ++y)
        for (int x = 0; x < disp.width; ++x) {
            const std::size_t i = disp.idx(y, x);
            if (!disp.valid[i]) continue;
            const double du = disp.u[i] + offset_u;
            const double dv = disp.v[i] + offset_v;
            const long tx = std::lround(x + du);
            const long ty = std::lround(y + dv);
            if (tx < 0 || tx >= disp.width || ty < 0 || ty >= disp.height) continue;
            const std::size_t t = static_cast<std::size_t>(ty) * disp.width + tx;
            const double k = du * du + dv * dv;
            if (k >= key[t]) {
                key[t] = k;
                winner[t] = static_cast<std::int64_t>(i);
            }
        }
}

}  // namespace detail

// Push each source pixel to round(p + disp(p)). Unhit destinations are
// invalid; their image values stay zero.
inline WarpResult forward_warp(const ImageBuffer& src, const FlowField& disp,
                               double offset_u = 0.0, double offset_v = 0.0) {
    if (src.width != disp.width || src.height != disp.height)
        throw std::invalid_argument("forward_warp: source and displacement sizes differ");
    std::vector<std::int64_t> winner;
    std::vector<double> key;
    detail::splat_winners(disp, offset_u, offset_v, winner, key);
    WarpResult res{ImageBuffer(src.width, src.height, src.channels), BinaryMask(src.width, src.height)};
    for (std::size_t t = 0; t < winner.size(); ++t) {
        if (winner[t] < 0) continue;
        const std::size_t s = static_cast<std::size_t>(winner[t]);
        for (int c = 0; c < src.channels; ++c)
            res.image.data[t * src.channels + c] = src.data[s * src.channels + c];
        res.validity.bits[t] = 1;
    }
    return res;
}

// Forward warp of a flow field's values; validity marks hit destinations.
inline FlowField forward_warp(const FlowField& values, const FlowField& disp) {
    if (values.width != disp.width || values.height != disp.height)
        throw std::invalid_argument("forward_warp: value and displacement sizes differ");
    std::vector<std::int64_t> winner;
    std::vector<double> key;
    detail::splat_winners(disp, 0.0, 0.0, winner, key);
    FlowField out(values.width, values.height, 0.0, 0.0, false);
    for (std::size_t t = 0; t < winner.size(); ++t) {
        if (winner[t] < 0) continue;
        const std::size_t s = static_cast<std::size_t>(winner[t]);
        out.u[t] = values.u[s];
        out.v[t] = values.v[s];
        out.valid[t] = 1;
    }
    return out;
}

// Average of forward warps over the configured sub-pixel offset grid. Each
// pixel averages only the warps in which it was hit and is invalid only when
// every warp missed it.
inline WarpResult multi_warp_average(const ImageBuffer& src, const FlowField& disp,
                                     const FusionConfig& cfg) {
    if (src.width != disp.width || src.height != disp.height)
        throw std::invalid_argument("multi_warp_average: source and displacement sizes differ");
    const auto grid = offset_grid(cfg);
    std::vector<double> sum(src.data.size(), 0.0);
    std::vector<std::uint32_t> hits(src.pixel_count(), 0);
    std::vector<std::int64_t> winner;
    std::vector<double> key;
    for (const auto& [ou, ov] : grid) {
        detail::splat_winners(disp, ou, ov, winner, key);
        for (std::size_t t = 0; t < winner.size(); ++t) {
            if (winner[t] < 0) continue;
            const std::size_t s = static_cast<std::size_t>(winner[t]);
            for (int c = 0; c < src.channels; ++c)
                sum[t * src.channels + c] += src.data[s * src.channels + c];
            ++hits[t];
        }
    }
    WarpResult res{ImageBuffer(src.width, src.height, src.channels), BinaryMask(src.width, src.height)};
    for (std::size_t t = 0; t < hits.size(); ++t) {
        if (!hits[t]) continue;
        for (int c = 0; c < src.channels; ++c)
            res.image.data[t * src.channels + c] = sum[t * src.channels + c] / hits[t];
        res.validity.bits[t] = 1;
    }
    return res;
}

}  // namespace vtfusion
