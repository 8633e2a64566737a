#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vtfusion {

// All tunable constants of the fusion pipeline. Defaults follow the values
// the pipeline was designed around; every one of them can be overridden from
// the CLI or a key=value config file.
struct FusionConfig {
    int kernel = 600;                 // box filter window; even values round up to odd
    double ratio = 0.01;              // permitted flow change per pixel of boundary distance
    double gradient_threshold = 3.0;  // flow-magnitude step that marks a non-connected point
    int rhe_block = 200;              // histogram matching block size
    int rhe_stride = 30;              // histogram matching block stride
    int occ_soft_width = 15;          // soft zone around occlusion masks, pixels
    int overlap_soft_width = 100;     // soft zone inside the overlap border, pixels
    double offset_start = -0.5;       // multi-warp offset grid
    double offset_end = 0.5;
    double offset_step = 0.2;
    int pyramid_levels = 0;           // 0 = choose from image size
    bool ray_consistent_transform = false;  // alternative value rule in transform_flow

    void validate() const {
        if (kernel < 1) throw std::invalid_argument("config: kernel must be >= 1");
        if (ratio < 0.0) throw std::invalid_argument("config: ratio must be >= 0");
        if (gradient_threshold < 0.0) throw std::invalid_argument("config: grad-threshold must be >= 0");
        if (rhe_block < 1) throw std::invalid_argument("config: rhe-block must be >= 1");
        if (rhe_stride < 1) throw std::invalid_argument("config: rhe-stride must be >= 1");
        if (rhe_stride > rhe_block) throw std::invalid_argument("config: rhe-stride must be <= rhe-block");
        if (occ_soft_width < 0 || overlap_soft_width < 0)
            throw std::invalid_argument("config: soft widths must be >= 0");
        if (offset_step <= 0.0) throw std::invalid_argument("config: offset step must be > 0");
        if (offset_end < offset_start) throw std::invalid_argument("config: offset range is empty");
        if (pyramid_levels < 0) throw std::invalid_argument("config: pyramid levels must be >= 0");
    }
};

// Centered windows need odd extent; even requests widen by one pixel.
inline int normalized_kernel(int k) {
    if (k < 1) throw std::invalid_argument("box_filter: kernel must be >= 1");
    return (k % 2 == 1) ? k : k + 1;
}

// Offset grid of the multi-warp average. The literal bounds never include
// zero for the default -0.5..0.5 step 0.2 grid.
inline std::vector<double> offset_values(const FusionConfig& cfg) {
    const int n = static_cast<int>(std::floor((cfg.offset_end - cfg.offset_start) / cfg.offset_step + 1e-9)) + 1;
    std::vector<double> vals;
    vals.reserve(n);
    for (int i = 0; i < n; ++i) vals.push_back(cfg.offset_start + i * cfg.offset_step);
    return vals;
}

inline std::vector<std::pair<double, double>> offset_grid(const FusionConfig& cfg) {
    const auto vals = offset_values(cfg);
    std::vector<std::pair<double, double>> grid;
    grid.reserve(vals.size() * vals.size());
    for (double u : vals)
        for (double v : vals) grid.emplace_back(u, v);
    return grid;
}

// Keeps the coarsest pyramid level at >= 8 px for typical inputs.
inline int auto_pyramid_levels(int width, int height) {
    const int m = width < height ? width : height;
    int l = static_cast<int>(std::floor(std::log2(static_cast<double>(m)))) - 3;
    if (l < 3) l = 3;
    if (l > 8) l = 8;
    // never decompose below 1 px
    int cap = 1;
    for (int s = m; s > 1; s = (s + 1) / 2) ++cap;
    return l < cap ? l : cap;
}

inline int resolve_pyramid_levels(const FusionConfig& cfg, int width, int height) {
    return cfg.pyramid_levels > 0 ? cfg.pyramid_levels : auto_pyramid_levels(width, height);
}

}  // namespace vtfusion
