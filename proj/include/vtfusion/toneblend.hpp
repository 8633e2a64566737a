#pragma once

// Tone matching of the transformed telephoto image to the transformed wide
// image, Laplacian-pyramid blending, and the overlap / full-view composites.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vtfusion/config.hpp"
#include "vtfusion/core.hpp"
#include "vtfusion/occlusion.hpp"
#include "vtfusion/warp.hpp"

namespace vtfusion {

// Monotone CDF-matching lookup over 256 bins: each source bin maps to the
// smallest reference bin whose cumulative count reaches the source CDF.
inline std::array<int, 256> histogram_match_lut(const std::array<std::uint64_t, 256>& src_hist,
                                                const std::array<std::uint64_t, 256>& ref_hist) {
    std::array<int, 256> lut{};
    std::uint64_t src_cum = 0, ref_cum = ref_hist[0];
    int g_ref = 0;
    for (int g = 0; g < 256; ++g) {
        src_cum += src_hist[g];
        while (g_ref < 255 && ref_cum < src_cum) {
            ++g_ref;
            ref_cum += ref_hist[g_ref];
        }
        lut[g] = g_ref;
    }
    return lut;
}

namespace detail {

inline int value_bin(double v) {
    int b = static_cast<int>(v * 256.0);
    return b < 0 ? 0 : (b > 255 ? 255 : b);
}

inline double bin_value(int b) { return (b + 0.5) / 256.0; }

}  // namespace detail

// Per-block histogram matching of `src` toward `ref` over overlapping
// block x block tiles placed every `stride` pixels (edge blocks clipped).
// Histograms use only mutually valid pixels; the resulting lookup applies to
// every pixel of the block and each pixel averages the outputs of all blocks
// that cover it. Blocks with fewer than 16 valid pixels contribute nothing;
// pixels covered by no contributing block pass through unchanged.
inline ImageBuffer regional_histogram_match(const ImageBuffer& src, const ImageBuffer& ref,
                                            const BinaryMask& valid, const FusionConfig& cfg) {
    if (!src.same_size(ref) || src.channels != ref.channels)
        throw std::invalid_argument("histogram_match: source and reference shapes differ");
    if (src.width != valid.width || src.height != valid.height)
        throw std::invalid_argument("histogram_match: validity mask shape differs");
    const int w = src.width, h = src.height, nc = src.channels;
    const int block = cfg.rhe_block, stride = cfg.rhe_stride;
    if (stride < 1 || block < 1 || stride > block)
        throw std::invalid_argument("histogram_match: bad block/stride");

    std::vector<double> sum(src.data.size(), 0.0);
    std::vector<double> comp(src.data.size(), 0.0);  // Kahan compensation
    std::vector<std::uint32_t> cnt(src.pixel_count(), 0);

    std::array<std::uint64_t, 256> hs{}, hr{};
    for (int by = 0; by < h; by += stride)
        for (int bx = 0; bx < w; bx += stride) {
            const int y1 = std::min(by + block, h);
            const int x1 = std::min(bx + block, w);
            std::size_t nvalid = 0;
            for (int y = by; y < y1; ++y)
                for (int x = bx; x < x1; ++x) nvalid += valid.bits[valid.idx(y, x)] ? 1 : 0;
            if (nvalid < 16) continue;

            for (int c = 0; c < nc; ++c) {
                hs.fill(0);
                hr.fill(0);
                for (int y = by; y < y1; ++y)
                    for (int x = bx; x < x1; ++x) {
                        if (!valid.bits[valid.idx(y, x)]) continue;
                        ++hs[detail::value_bin(src.at(y, x, c))];
                        ++hr[detail::value_bin(ref.at(y, x, c))];
                    }
                const auto lut = histogram_match_lut(hs, hr);
                for (int y = by; y < y1; ++y)
                    for (int x = bx; x < x1; ++x) {
                        const std::size_t i = src.idx(y, x) * nc + c;
                        const double term =
                            detail::bin_value(lut[detail::value_bin(src.data[i])]) - comp[i];
                        const double t = sum[i] + term;
                        comp[i] = (t - sum[i]) - term;
                        sum[i] = t;
                    }
            }
            for (int y = by; y < y1; ++y)
                for (int x = bx; x < x1; ++x) ++cnt[src.idx(y, x)];
        }

    ImageBuffer out(w, h, nc);
    for (std::size_t p = 0; p < cnt.size(); ++p)
        for (int c = 0; c < nc; ++c)
            out.data[p * nc + c] = cnt[p] ? sum[p * nc + c] / cnt[p] : src.data[p * nc + c];
    return out;
}

namespace detail {

// 5-tap [1 4 6 4 1]/16 separable blur with edge replication.
inline ImageBuffer blur5(const ImageBuffer& img) {
    static constexpr double kK[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    ImageBuffer tmp(img.width, img.height, img.channels);
    ImageBuffer out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t)
                    acc += kK[t + 2] * img.at(y, std::clamp(x + t, 0, img.width - 1), c);
                tmp.at(y, x, c) = acc;
            }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t)
                    acc += kK[t + 2] * tmp.at(std::clamp(y + t, 0, img.height - 1), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

inline ImageBuffer pyr_down(const ImageBuffer& img) {
    const ImageBuffer b = blur5(img);
    ImageBuffer out((img.width + 1) / 2, (img.height + 1) / 2, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = b.at(2 * y, 2 * x, c);
    return out;
}

// Zero-insertion upsampling followed by the same kernel with gain 4,
// evaluated in closed form: even taps (s[i-1] + 6 s[i] + s[i+1]) / 8 and odd
// taps (s[i] + s[i+1]) / 2, with replicated small-image indices.
inline ImageBuffer pyr_up(const ImageBuffer& img, int target_w, int target_h) {
    ImageBuffer horiz(target_w, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < target_w; ++x) {
            const int i = x / 2;
            for (int c = 0; c < img.channels; ++c) {
                double v;
                if (x % 2 == 0) {
                    const double sm = img.at(y, std::max(i - 1, 0), c);
                    const double s0 = img.at(y, i, c);
                    const double sp = img.at(y, std::min(i + 1, img.width - 1), c);
                    v = (sm + 6.0 * s0 + sp) / 8.0;
                } else {
                    const double s0 = img.at(y, i, c);
                    const double sp = img.at(y, std::min(i + 1, img.width - 1), c);
                    v = 0.5 * (s0 + sp);
                }
                horiz.at(y, x, c) = v;
            }
        }
    ImageBuffer out(target_w, target_h, img.channels);
    for (int y = 0; y < target_h; ++y) {
        const int i = y / 2;
        for (int x = 0; x < target_w; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double v;
                if (y % 2 == 0) {
                    const double sm = horiz.at(std::max(i - 1, 0), x, c);
                    const double s0 = horiz.at(i, x, c);
                    const double sp = horiz.at(std::min(i + 1, img.height - 1), x, c);
                    v = (sm + 6.0 * s0 + sp) / 8.0;
                } else {
                    const double s0 = horiz.at(i, x, c);
                    const double sp = horiz.at(std::min(i + 1, img.height - 1), x, c);
                    v = 0.5 * (s0 + sp);
                }
                out.at(y, x, c) = v;
            }
    }
    return out;
}

inline std::vector<ImageBuffer> gaussian_pyramid(const ImageBuffer& img, int levels) {
    std::vector<ImageBuffer> g{img};
    for (int l = 1; l < levels; ++l) g.push_back(pyr_down(g.back()));
    return g;
}

inline std::vector<ImageBuffer> laplacian_pyramid(const ImageBuffer& img, int levels) {
    auto g = gaussian_pyramid(img, levels);
    std::vector<ImageBuffer> lap;
    lap.reserve(levels);
    for (int l = 0; l + 1 < levels; ++l) {
        const ImageBuffer up = pyr_up(g[l + 1], g[l].width, g[l].height);
        ImageBuffer band(g[l].width, g[l].height, g[l].channels);
        for (std::size_t i = 0; i < band.data.size(); ++i)
            band.data[i] = g[l].data[i] - up.data[i];
        lap.push_back(std::move(band));
    }
    lap.push_back(g.back());
    return lap;
}

}  // namespace detail

// Classic multi-band blend: Laplacian pyramids of the two images, a Gaussian
// pyramid of the weights, per-level out = w*a + (1-w)*b, then collapse.
// Weight 1 selects `a`.
inline ImageBuffer pyramid_blend(const ImageBuffer& a, const ImageBuffer& b, const WeightMap& w,
                                 int levels) {
    if (levels < 1) throw std::invalid_argument("pyramid_blend: levels must be >= 1");
    if (!a.same_size(b) || a.channels != b.channels || a.width != w.width || a.height != w.height)
        throw std::invalid_argument("pyramid_blend: input shapes differ");

    ImageBuffer wimg(w.width, w.height, 1);
    wimg.data = w.w;
    const auto la = detail::laplacian_pyramid(a, levels);
    const auto lb = detail::laplacian_pyramid(b, levels);
    const auto gw = detail::gaussian_pyramid(wimg, levels);

    std::vector<ImageBuffer> blended(levels);
    for (int l = 0; l < levels; ++l) {
        blended[l] = ImageBuffer(la[l].width, la[l].height, la[l].channels);
        for (int y = 0; y < la[l].height; ++y)
            for (int x = 0; x < la[l].width; ++x) {
                const double wv = gw[l].at(y, x, 0);
                for (int c = 0; c < la[l].channels; ++c)
                    blended[l].at(y, x, c) = wv * la[l].at(y, x, c) + (1.0 - wv) * lb[l].at(y, x, c);
            }
    }
    ImageBuffer acc = std::move(blended[levels - 1]);
    for (int l = levels - 2; l >= 0; --l) {
        const ImageBuffer up = detail::pyr_up(acc, blended[l].width, blended[l].height);
        acc = std::move(blended[l]);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += up.data[i];
    }
    return acc;
}

struct OverlapFusion {
    ImageBuffer image;             // blended overlap-region output
    ImageBuffer tele_tone_matched; // telephoto after regional histogram matching
    WeightMap weights;             // softened occlusion weights used in the blend
};

// Overlap-region composite: tone-match the transformed telephoto to the
// transformed wide image over mutually valid non-occluded pixels, then blend
// with softened occlusion weights so occluded regions take the wide image.
// Wide-image holes never enter histograms or the blend source: they are
// backfilled with matched telephoto content, which keeps the output free of
// unwritten pixels.
inline OverlapFusion fuse_overlap(const WarpResult& tele_o, const WarpResult& wide_o,
                                  const BinaryMask& occ, const FusionConfig& cfg) {
    if (!tele_o.image.same_size(wide_o.image) || tele_o.image.channels != wide_o.image.channels)
        throw std::invalid_argument("fuse_overlap: image shapes differ");
    const int w = tele_o.image.width, h = tele_o.image.height;

    BinaryMask mutual(w, h);
    for (std::size_t i = 0; i < mutual.bits.size(); ++i)
        mutual.bits[i] =
            (tele_o.validity.bits[i] && wide_o.validity.bits[i] && !occ.bits[i]) ? 1 : 0;

    OverlapFusion out;
    out.tele_tone_matched = regional_histogram_match(tele_o.image, wide_o.image, mutual, cfg);

    ImageBuffer wide_filled = wide_o.image;
    for (std::size_t p = 0; p < wide_o.validity.bits.size(); ++p)
        if (!wide_o.validity.bits[p])
            for (int c = 0; c < wide_filled.channels; ++c)
                wide_filled.data[p * wide_filled.channels + c] =
                    out.tele_tone_matched.data[p * wide_filled.channels + c];

    out.weights = soften_mask(occ, static_cast<double>(cfg.occ_soft_width));
    const int levels = resolve_pyramid_levels(cfg, w, h);
    out.image = pyramid_blend(wide_filled, out.tele_tone_matched, out.weights, levels);
    return out;
}

// Weights for the full-view composite: 1 deep inside the overlap rectangle
// with a linear inward ramp at every rectangle side that lies strictly inside
// the frame. Sides flush with the frame border need no seam and get none.
inline WeightMap overlap_frame_weights(int rect_w, int rect_h, int off_x, int off_y, int frame_w,
                                       int frame_h, int soft_width) {
    WeightMap wm(rect_w, rect_h, 1.0);
    if (soft_width <= 0) return wm;
    const bool left = off_x > 0, top = off_y > 0;
    const bool right = off_x + rect_w < frame_w, bottom = off_y + rect_h < frame_h;
    for (int y = 0; y < rect_h; ++y)
        for (int x = 0; x < rect_w; ++x) {
            double d = static_cast<double>(soft_width);
            if (left) d = std::min(d, static_cast<double>(x));
            if (right) d = std::min(d, static_cast<double>(rect_w - 1 - x));
            if (top) d = std::min(d, static_cast<double>(y));
            if (bottom) d = std::min(d, static_cast<double>(rect_h - 1 - y));
            wm.w[wm.idx(y, x)] = std::min(1.0, d / soft_width);
        }
    return wm;
}

// Places the overlap result into the full wide frame and pyramid-blends it
// against the wide content inside the rectangle. Pixels outside the overlap
// rectangle are copied from the wide image untouched.
inline ImageBuffer compose_full_view(const ImageBuffer& overlap, const ImageBuffer& wide_full,
                                     int off_x, int off_y, const FusionConfig& cfg) {
    if (overlap.channels != wide_full.channels)
        throw std::invalid_argument("compose_full_view: channel counts differ");
    if (off_x < 0 || off_y < 0 || off_x + overlap.width > wide_full.width ||
        off_y + overlap.height > wide_full.height)
        throw std::invalid_argument("compose_full_view: overlap rectangle exceeds the frame");

    ImageBuffer crop(overlap.width, overlap.height, overlap.channels);
    for (int y = 0; y < overlap.height; ++y)
        for (int x = 0; x < overlap.width; ++x)
            for (int c = 0; c < overlap.channels; ++c)
                crop.at(y, x, c) = wide_full.at(off_y + y, off_x + x, c);

    const WeightMap wm = overlap_frame_weights(overlap.width, overlap.height, off_x, off_y,
                                               wide_full.width, wide_full.height,
                                               cfg.overlap_soft_width);
    const int levels = resolve_pyramid_levels(cfg, overlap.width, overlap.height);
    const ImageBuffer blended = pyramid_blend(overlap, crop, wm, levels);

    ImageBuffer out = wide_full;
    for (int y = 0; y < overlap.height; ++y)
        for (int x = 0; x < overlap.width; ++x)
            for (int c = 0; c < overlap.channels; ++c)
                out.at(off_y + y, off_x + x, c) = blended.at(y, x, c);
    return out;
}

}  // namespace vtfusion
