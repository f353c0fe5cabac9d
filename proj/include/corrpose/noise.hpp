#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "corrpose/metrics.hpp"
#include "corrpose/raster.hpp"
#include "corrpose/rng.hpp"

namespace corrpose {

// Synthetic degradation of a perfect correspondence map, standing in for the
// prediction error of a dense-correspondence network.
struct CorruptionParams {
    double uv_jitter_sigma = 0.0;  // Gaussian sigma on u/v, in class units
    double outlier_rate = 0.0;     // fraction of foreground pixels with (u,v) replaced uniformly
    double dropout_rate = 0.0;     // fraction of foreground pixels flipped to background
    int occlusion_boxes = 0;       // rectangles (each <= 20% of an object's bbox area) zeroed
    std::uint64_t seed = 0;
};

namespace detail {

inline void clear_pixel(CorrespondenceMap& m, std::size_t i) {
    m.id[i] = 0;
    m.u_class[i] = 0;
    m.v_class[i] = 0;
    m.depth[i] = 0.0f;
}

}  // namespace detail

// Applies, in order: occlusion boxes, dropout, uniform (u,v) outliers,
// clamped Gaussian jitter. Background pixels are never touched and no pixel
// ever becomes foreground. Deterministic in (map, params).
inline CorrespondenceMap corrupt(const CorrespondenceMap& map, const CorruptionParams& params) {
    assert(params.outlier_rate >= 0.0 && params.outlier_rate <= 1.0);
    assert(params.dropout_rate >= 0.0 && params.dropout_rate <= 1.0);
    assert(params.uv_jitter_sigma >= 0.0);
    assert(params.occlusion_boxes >= 0);

    CorrespondenceMap out = map;
    Rng rng(params.seed);

    if (params.occlusion_boxes > 0) {
        const auto boxes = tight_boxes(out);
        std::vector<int> ids;
        for (const auto& [id, box] : boxes) ids.push_back(id);
        for (int n = 0; n < params.occlusion_boxes && !ids.empty(); ++n) {
            const Box& b = boxes.at(ids[std::size_t(n) % ids.size()]);
            const int bx = int(b.x0), by = int(b.y0);
            const int bw = int(b.x1 - b.x0), bh = int(b.y1 - b.y0);
            const double max_area = 0.2 * bw * bh;
            const int wmax = std::max(1, std::min(bw, int(max_area)));
            const int w = 1 + int(rng.below(std::uint64_t(wmax)));
            const int hmax = std::max(1, std::min(bh, int(max_area / w)));
            const int h = 1 + int(rng.below(std::uint64_t(hmax)));
            const int x0 = bx + int(rng.below(std::uint64_t(bw - w + 1)));
            const int y0 = by + int(rng.below(std::uint64_t(bh - h + 1)));
            for (int y = y0; y < y0 + h; ++y)
                for (int x = x0; x < x0 + w; ++x)
                    if (out.foreground(x, y)) detail::clear_pixel(out, out.index(x, y));
        }
    }

    if (params.dropout_rate > 0.0) {
        for (std::size_t i = 0; i < out.pixel_count(); ++i) {
            if (out.id[i] == 0) continue;
            if (rng.uniform() < params.dropout_rate) detail::clear_pixel(out, i);
        }
    }

    if (params.outlier_rate > 0.0) {
        for (std::size_t i = 0; i < out.pixel_count(); ++i) {
            if (out.id[i] == 0) continue;
            if (rng.uniform() < params.outlier_rate) {
                out.u_class[i] = std::uint8_t(rng.below(256));
                out.v_class[i] = std::uint8_t(rng.below(256));
            }
        }
    }

    if (params.uv_jitter_sigma > 0.0) {
        for (std::size_t i = 0; i < out.pixel_count(); ++i) {
            if (out.id[i] == 0) continue;
            out.u_class[i] =
                std::uint8_t(quantize_uv(out.u_class[i] + rng.normal() * params.uv_jitter_sigma));
            out.v_class[i] =
                std::uint8_t(quantize_uv(out.v_class[i] + rng.normal() * params.uv_jitter_sigma));
        }
    }

    return out;
}

}  // namespace corrpose
