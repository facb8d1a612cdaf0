// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "promptcd/attention.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace promptcd {

/// 8-bit RGB, row-major, 3 bytes per pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

/// PNG I/O; inputs are converted to 8-bit RGB on load.
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

Image bilinear_resize(const Image& src, int out_w, int out_h);

struct RefineResult {
    Image image;
    Box crop_px;              // pre-resize pixel crop box (pad applied, clamped)
    bool empty_mask_fallback = false;
};

/// Apply the selected-region mask to the image: replicate each token cell to
/// its pixel block (remainder pixels join the last cell), blacken pixels
/// outside the mask, crop to the padded tight box, and resize to the target.
/// An empty mask returns the whole image resized, flagged.
RefineResult refine_image(const Image& img, const Mask& m_star, const RefineSpec& spec);

struct CarveDiagnostics {
    double p = 0.0; // threshold parameter used
    double tau = 0.0;
    double retained_frac = 0.0;
    std::size_t component_count = 0;
    std::vector<Box> boxes; // selected components, token-grid coords
    Box crop_px;
    bool empty_mask_fallback = false;
};

struct CarveResult {
    Image image;
    CarveDiagnostics diag;
};

/// Full pipeline: contrast -> fuse -> threshold -> components -> select ->
/// refine. `threshold_on_value` switches the sweep parameter from retained
/// proportion to a max-normalized attention threshold.
CarveResult carve(const AttentionStack& pos,
                  const AttentionStack& neg,
                  const Image& img,
                  const FusionSpec& fusion,
                  const RefineSpec& spec,
                  bool threshold_on_value = false);

std::string diagnostics_to_json(const CarveDiagnostics& diag);

} // namespace promptcd
