// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace promptcd {

/// Per-layer nonnegative attention grids over visual tokens.
/// Layout: layer-major, then row-major within a layer.
struct AttentionStack {
    int layers = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    double at(int layer, int row, int col) const {
        return data[index(layer, row, col)];
    }
    double& at(int layer, int row, int col) {
        return data[index(layer, row, col)];
    }
    std::size_t index(int layer, int row, int col) const {
        return (static_cast<std::size_t>(layer) * height + row) * width + col;
    }
    std::size_t cells_per_layer() const {
        return static_cast<std::size_t>(height) * width;
    }

    /// Dims positive, data length L*H*W, entries finite and >= 0.
    void validate() const;
};

/// Attention tensor file I/O. JSON form:
///   {"layers": L, "height": H, "width": W, "data": [floats...]}
/// Raw form: 16-byte header (magic "ATTN", three little-endian uint32 dims),
/// then L*H*W little-endian float32 values. Format is detected by the magic.
AttentionStack load_attention(const std::string& path);
void save_attention_json(const std::string& path, const AttentionStack& stack);
void save_attention_raw(const std::string& path, const AttentionStack& stack);

/// Scalar grid (fused attention, masks are Grid-shaped bools).
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * width + col];
    }
    double& at(int row, int col) {
        return values[static_cast<std::size_t>(row) * width + col];
    }
};

struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> on;

    bool at(int row, int col) const {
        return on[static_cast<std::size_t>(row) * width + col] != 0;
    }
    void set(int row, int col, bool v) {
        on[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0;
    }
    std::size_t count() const;
    bool empty_mask() const { return count() == 0; }
};

/// Inclusive cell/pixel bounding box.
struct Box {
    int x0 = 0;
    int y0 = 0;
    int x1 = -1;
    int y1 = -1;

    long long area() const {
        return x1 < x0 || y1 < y0 ? 0
                                  : static_cast<long long>(x1 - x0 + 1) * (y1 - y0 + 1);
    }
    bool contains(const Box& inner) const {
        return x0 <= inner.x0 && y0 <= inner.y0 && x1 >= inner.x1 && y1 >= inner.y1;
    }
};

/// Inclusive layer range with per-layer fusion weights summing to 1,
/// nondecreasing in layer index (deeper layers weigh more).
struct FusionSpec {
    int layer_lo = 20;
    int layer_hi = 25;
    std::vector<double> weights;

    /// Linear ramp w_l proportional to (l - lo + 1), normalized.
    static FusionSpec ramp(int lo, int hi);

    void validate(const AttentionStack& stack) const;
};

struct Component {
    std::vector<std::size_t> pixels; // linear indices, sorted
    Box bbox;
    double score = 0.0; // sum of grid values over the pixels
};

struct RegionSet {
    Mask mask;
    std::vector<Component> components; // sorted by score desc, ties by first pixel
};

struct RefineSpec {
    double top_p = 0.3;    // in (0, 1]
    int k_regions = 1;     // >= 1
    double epsilon = 1e-6; // > 0, regularizer in the attention quotient
    int pad = 0;
    int target_w = 0; // 0 = keep source image dims
    int target_h = 0;

    void validate() const;
};

/// Elementwise quotient pos / (neg + epsilon); cancels the shared generic
/// pattern when neg dominates epsilon.
AttentionStack contrast_attention(const AttentionStack& pos,
                                  const AttentionStack& neg,
                                  double epsilon);

/// Weighted sum of the layers in the fusion range.
Grid fuse_layers(const AttentionStack& stack, const FusionSpec& spec);

struct ThresholdResult {
    double tau = 0.0;
    Mask mask;
};

/// tau = largest value retaining at least ceil(top_p * N) pixels; the mask
/// keeps every pixel with value >= tau, so ties at tau are all retained.
ThresholdResult percentile_threshold(const Grid& grid, double top_p);

/// Mask of cells whose value, normalized by the grid maximum, reaches
/// `threshold`. Alternative reading of the sweep parameter.
ThresholdResult value_threshold(const Grid& grid, double threshold);

/// 8-connected components of the mask with cumulative scores from `grid`,
/// sorted by score descending (ties by scan order of the first pixel).
RegionSet connected_components(const Mask& mask, const Grid& grid);

/// Union of the top min(k, count) components.
Mask select_regions(const RegionSet& regions, int k);

} // namespace promptcd
