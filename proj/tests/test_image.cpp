// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "promptcd/errors.hpp"
#include "promptcd/image.hpp"

#include <nlohmann/json.hpp>

#include <random>

using namespace promptcd;
using nlohmann::json;

namespace {

Image random_image(std::mt19937& rng, int w, int h) {
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& v : img.rgb) {
        v = static_cast<std::uint8_t>(byte(rng));
    }
    return img;
}

Mask mask_of(int h, int w, std::vector<std::uint8_t> on) {
    Mask m;
    m.height = h;
    m.width = w;
    m.on = std::move(on);
    return m;
}

struct BlobFixture {
    AttentionStack pos;
    AttentionStack neg;
    Image image;
    Box blob_px; // pixel bounding box of the bright cells
};

// 26-layer 8x8 stacks over a 64x64 image: a bright 2x2 cell blob at rows 2-3,
// cols 5-6 inside the fused range, uniform negative, low noise elsewhere.
BlobFixture blob_fixture(std::mt19937& rng) {
    BlobFixture fx;
    fx.pos.layers = 26;
    fx.pos.height = 8;
    fx.pos.width = 8;
    fx.pos.data.resize(26 * 64);
    std::uniform_real_distribution<double> noise(0.0, 1.0);
    for (double& v : fx.pos.data) {
        v = noise(rng);
    }
    for (int l = 20; l <= 25; ++l) {
        for (int r = 2; r <= 3; ++r) {
            for (int c = 5; c <= 6; ++c) {
                fx.pos.at(l, r, c) = 1000.0;
            }
        }
    }
    fx.neg = fx.pos;
    for (double& v : fx.neg.data) {
        v = 1.0;
    }
    fx.image = random_image(rng, 64, 64);
    fx.blob_px = Box{5 * 8, 2 * 8, 6 * 8 + 7, 3 * 8 + 7};
    return fx;
}

} // namespace

TEST_CASE("png round-trip preserves 8-bit RGB exactly") {
    std::mt19937 rng(1000);
    const Image img = random_image(rng, 37, 23);
    save_png("roundtrip.png", img);
    const Image back = load_png("roundtrip.png");
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.rgb == img.rgb);

    CHECK_THROWS_AS(load_png("missing.png"), config_error);
}

TEST_CASE("bilinear resize: identity and dimensions") {
    std::mt19937 rng(1001);
    const Image img = random_image(rng, 16, 12);
    const Image same = bilinear_resize(img, 16, 12);
    CHECK(same.rgb == img.rgb); // source centers map onto themselves

    const Image up = bilinear_resize(img, 33, 7);
    CHECK(up.width == 33);
    CHECK(up.height == 7);
    CHECK(up.rgb.size() == 33u * 7u * 3u);
}

TEST_CASE("refine: full mask with no padding is a plain resize") {
    std::mt19937 rng(1002);
    const Image img = random_image(rng, 64, 64);
    const Mask full = mask_of(4, 4, std::vector<std::uint8_t>(16, 1));
    RefineSpec spec;
    spec.target_w = 32;
    spec.target_h = 32;
    const RefineResult out = refine_image(img, full, spec);
    CHECK(!out.empty_mask_fallback);
    CHECK(out.crop_px.x0 == 0);
    CHECK(out.crop_px.y1 == 63);
    CHECK(out.image.rgb == bilinear_resize(img, 32, 32).rgb);
}

TEST_CASE("refine: single cell of a 2x2 grid crops one quadrant") {
    std::mt19937 rng(1003);
    const Image img = random_image(rng, 64, 64);
    Mask m = mask_of(2, 2, {0, 1, 0, 0}); // top-right cell
    RefineSpec spec;
    spec.target_w = 16;
    spec.target_h = 16;
    const RefineResult out = refine_image(img, m, spec);
    CHECK(out.crop_px.x0 == 32);
    CHECK(out.crop_px.y0 == 0);
    CHECK(out.crop_px.x1 == 63);
    CHECK(out.crop_px.y1 == 31);

    spec.pad = 4;
    const RefineResult padded = refine_image(img, m, spec);
    CHECK(padded.crop_px.x0 == 28); // clamped at the image border elsewhere
    CHECK(padded.crop_px.y1 == 35);
    CHECK(padded.crop_px.x1 == 63);
}

TEST_CASE("refine: pixels outside the mask are blackened before the crop") {
    const Image img = Image::filled(4, 4, 200, 100, 50);
    Mask m = mask_of(2, 2, {1, 1, 0, 0}); // top row of cells only
    RefineSpec spec;
    spec.target_w = 4;
    spec.target_h = 4;
    const RefineResult out = refine_image(img, m, spec);
    // Crop is the top half (4x2) resized back to 4x4; content rows stay flat.
    CHECK(out.crop_px.y0 == 0);
    CHECK(out.crop_px.y1 == 1);
    CHECK(out.image.rgb[out.image.offset(0, 0)] == 200);
}

TEST_CASE("refine: empty mask falls back to the resized original") {
    std::mt19937 rng(1004);
    const Image img = random_image(rng, 20, 20);
    const Mask empty = mask_of(2, 2, {0, 0, 0, 0});
    RefineSpec spec;
    spec.target_w = 10;
    spec.target_h = 10;
    const RefineResult out = refine_image(img, empty, spec);
    CHECK(out.empty_mask_fallback);
    CHECK(out.image.rgb == bilinear_resize(img, 10, 10).rgb);
}

TEST_CASE("refine: output dims always match the target") {
    std::mt19937 rng(1005);
    for (int it = 0; it < 50; ++it) {
        std::uniform_int_distribution<int> dim(8, 40);
        const int w = dim(rng);
        const int h = dim(rng);
        const Image img = random_image(rng, w, h);
        std::uniform_int_distribution<int> grid_d(1, 6);
        const int gw = std::min(grid_d(rng), w);
        const int gh = std::min(grid_d(rng), h);
        Mask m = mask_of(gh, gw, std::vector<std::uint8_t>(
                                     static_cast<std::size_t>(gw) * gh, 0));
        std::uniform_int_distribution<int> cell(0, gw * gh - 1);
        m.on[static_cast<std::size_t>(cell(rng))] = 1;
        RefineSpec spec;
        spec.target_w = dim(rng);
        spec.target_h = dim(rng);
        std::uniform_int_distribution<int> pad_d(0, 10);
        spec.pad = pad_d(rng);
        const RefineResult out = refine_image(img, m, spec);
        CHECK(out.image.width == spec.target_w);
        CHECK(out.image.height == spec.target_h);
        CHECK(out.crop_px.x0 >= 0);
        CHECK(out.crop_px.y0 >= 0);
        CHECK(out.crop_px.x1 < w);
        CHECK(out.crop_px.y1 < h);
        CHECK(out.crop_px.area() > 0);
    }
}

TEST_CASE("carve: bright blob is contained in the crop, sweep areas shrink") {
    std::mt19937 rng(1006);
    const BlobFixture fx = blob_fixture(rng);
    const FusionSpec fusion = FusionSpec::ramp(20, 25);

    long long previous_area = -1;
    for (const double p : {0.6, 0.3, 0.1}) {
        RefineSpec spec;
        spec.top_p = p;
        spec.k_regions = 1;
        spec.target_w = 64;
        spec.target_h = 64;
        const CarveResult out = carve(fx.pos, fx.neg, fx.image, fusion, spec);
        CHECK(out.image.width == 64);
        CHECK(!out.diag.empty_mask_fallback);
        CHECK(out.diag.crop_px.contains(fx.blob_px));
        CHECK(out.diag.retained_frac >= p - 1e-9);
        if (previous_area >= 0) {
            CHECK(out.diag.crop_px.area() <= previous_area);
        }
        previous_area = out.diag.crop_px.area();
    }
}

TEST_CASE("carve: degenerate settings return the whole image resized") {
    std::mt19937 rng(1007);
    const BlobFixture fx = blob_fixture(rng);
    RefineSpec spec;
    spec.top_p = 1.0;
    spec.k_regions = 99;
    spec.pad = 500;
    spec.target_w = 48;
    spec.target_h = 48;
    const CarveResult out = carve(fx.pos, fx.neg, fx.image, FusionSpec::ramp(20, 25), spec);
    CHECK(out.diag.crop_px.area() == 64 * 64);
    CHECK(out.image.rgb == bilinear_resize(fx.image, 48, 48).rgb);
}

TEST_CASE("carve diagnostics serialize with the expected fields") {
    std::mt19937 rng(1008);
    const BlobFixture fx = blob_fixture(rng);
    RefineSpec spec;
    spec.target_w = 64;
    spec.target_h = 64;
    const CarveResult out = carve(fx.pos, fx.neg, fx.image, FusionSpec::ramp(20, 25), spec);
    const json doc = json::parse(diagnostics_to_json(out.diag));
    CHECK(doc.contains("tau"));
    CHECK(doc.contains("retained_frac"));
    CHECK(doc.contains("components"));
    CHECK(doc.at("boxes").is_array());
    CHECK(doc.at("crop_px").size() == 4);
}

TEST_CASE("value-threshold interpretation masks by normalized attention") {
    Grid g;
    g.height = 1;
    g.width = 4;
    g.values = {10.0, 6.0, 5.9, 1.0};
    const ThresholdResult r = value_threshold(g, 0.6);
    CHECK(r.tau == 6.0);
    CHECK(r.mask.count() == 2); // 10 and 6 survive; 5.9 falls below 0.6 * max
}
