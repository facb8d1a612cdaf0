// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/image.hpp"

#include "promptcd/errors.hpp"

#include <nlohmann/json.hpp>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace promptcd {

using nlohmann::json;

Image Image::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = r;
        img.rgb[i + 1] = g;
        img.rgb[i + 2] = b;
    }
    return img;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw config_error("cannot open image: " + path);
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw error("libpng init failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw error("libpng init failed");
    }

    Image img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw config_error("failed to decode PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    // Normalize every input to 8-bit RGB.
    png_set_expand(png);
    if (bit_depth == 16) {
        png_set_strip_16(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw config_error("unsupported PNG layout: " + path);
    }

    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = img.rgb.data() + static_cast<std::size_t>(y) * w * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const std::string& path, const Image& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw std::invalid_argument("save_png: malformed image");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw config_error("cannot write image: " + path);
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw error("libpng init failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw error("libpng init failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw error("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3);
    }
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image bilinear_resize(const Image& src, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw std::invalid_argument("bilinear_resize: target dims must be positive");
    }
    Image dst;
    dst.width = out_w;
    dst.height = out_h;
    dst.rgb.resize(static_cast<std::size_t>(out_w) * out_h * 3);

    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < 3; ++ch) {
                const double v00 = src.rgb[src.offset(x0, y0) + ch];
                const double v10 = src.rgb[src.offset(x1, y0) + ch];
                const double v01 = src.rgb[src.offset(x0, y1) + ch];
                const double v11 = src.rgb[src.offset(x1, y1) + ch];
                const double top = v00 + (v10 - v00) * wx;
                const double bot = v01 + (v11 - v01) * wx;
                const double v = top + (bot - top) * wy;
                dst.rgb[dst.offset(x, y) + ch] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return dst;
}

namespace {

// Pixel -> token cell; remainder pixels fold into the last cell.
int cell_of(int pixel, int block, int cells) {
    return std::min(pixel / block, cells - 1);
}

} // namespace

RefineResult refine_image(const Image& img, const Mask& m_star, const RefineSpec& spec) {
    spec.validate();
    if (m_star.height <= 0 || m_star.width <= 0) {
        throw std::invalid_argument("refine_image: empty mask grid");
    }
    if (img.width < m_star.width || img.height < m_star.height) {
        throw std::invalid_argument("refine_image: image dims must be >= grid dims");
    }
    const int target_w = spec.target_w > 0 ? spec.target_w : img.width;
    const int target_h = spec.target_h > 0 ? spec.target_h : img.height;

    RefineResult result;
    if (m_star.empty_mask()) {
        result.image = bilinear_resize(img, target_w, target_h);
        result.crop_px = Box{0, 0, img.width - 1, img.height - 1};
        result.empty_mask_fallback = true;
        return result;
    }

    const int bw = img.width / m_star.width;
    const int bh = img.height / m_star.height;

    Image masked = img;
    Box tight{img.width, img.height, -1, -1};
    for (int y = 0; y < img.height; ++y) {
        const int cr = cell_of(y, bh, m_star.height);
        for (int x = 0; x < img.width; ++x) {
            const int cc = cell_of(x, bw, m_star.width);
            if (m_star.at(cr, cc)) {
                tight.x0 = std::min(tight.x0, x);
                tight.y0 = std::min(tight.y0, y);
                tight.x1 = std::max(tight.x1, x);
                tight.y1 = std::max(tight.y1, y);
            } else {
                const std::size_t off = masked.offset(x, y);
                masked.rgb[off] = 0;
                masked.rgb[off + 1] = 0;
                masked.rgb[off + 2] = 0;
            }
        }
    }

    Box crop;
    crop.x0 = std::max(0, tight.x0 - spec.pad);
    crop.y0 = std::max(0, tight.y0 - spec.pad);
    crop.x1 = std::min(img.width - 1, tight.x1 + spec.pad);
    crop.y1 = std::min(img.height - 1, tight.y1 + spec.pad);

    Image cropped;
    cropped.width = crop.x1 - crop.x0 + 1;
    cropped.height = crop.y1 - crop.y0 + 1;
    cropped.rgb.resize(static_cast<std::size_t>(cropped.width) * cropped.height * 3);
    for (int y = 0; y < cropped.height; ++y) {
        const std::uint8_t* src_row = masked.rgb.data() + masked.offset(crop.x0, crop.y0 + y);
        std::copy(src_row, src_row + static_cast<std::size_t>(cropped.width) * 3,
                  cropped.rgb.data() + cropped.offset(0, y));
    }

    result.image = bilinear_resize(cropped, target_w, target_h);
    result.crop_px = crop;
    return result;
}

CarveResult carve(const AttentionStack& pos,
                  const AttentionStack& neg,
                  const Image& img,
                  const FusionSpec& fusion,
                  const RefineSpec& spec,
                  bool threshold_on_value) {
    pos.validate();
    neg.validate();
    spec.validate();

    const AttentionStack contrasted = contrast_attention(pos, neg, spec.epsilon);
    const Grid fused = fuse_layers(contrasted, fusion);
    const ThresholdResult thr = threshold_on_value ? value_threshold(fused, spec.top_p)
                                                   : percentile_threshold(fused, spec.top_p);
    const RegionSet regions = connected_components(thr.mask, fused);
    const Mask selected = select_regions(regions, spec.k_regions);
    RefineResult refined = refine_image(img, selected, spec);

    CarveResult result;
    result.image = std::move(refined.image);
    result.diag.p = spec.top_p;
    result.diag.tau = thr.tau;
    result.diag.retained_frac =
        static_cast<double>(thr.mask.count()) / static_cast<double>(thr.mask.on.size());
    result.diag.component_count = regions.components.size();
    const std::size_t chosen = std::min<std::size_t>(
        static_cast<std::size_t>(spec.k_regions), regions.components.size());
    for (std::size_t i = 0; i < chosen; ++i) {
        result.diag.boxes.push_back(regions.components[i].bbox);
    }
    result.diag.crop_px = refined.crop_px;
    result.diag.empty_mask_fallback = refined.empty_mask_fallback;
    return result;
}

std::string diagnostics_to_json(const CarveDiagnostics& diag) {
    json boxes = json::array();
    for (const Box& b : diag.boxes) {
        boxes.push_back({b.x0, b.y0, b.x1, b.y1});
    }
    json doc = {{"p", diag.p},
                {"tau", diag.tau},
                {"retained_frac", diag.retained_frac},
                {"components", diag.component_count},
                {"boxes", boxes},
                {"crop_px", {diag.crop_px.x0, diag.crop_px.y0, diag.crop_px.x1, diag.crop_px.y1}},
                {"empty_mask_fallback", diag.empty_mask_fallback}};
    return doc.dump();
}

} // namespace promptcd
