// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/attention.hpp"

#include "promptcd/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace promptcd {

using nlohmann::json;

void AttentionStack::validate() const {
    if (layers <= 0 || height <= 0 || width <= 0) {
        throw config_error("attention stack: dims must be positive");
    }
    const std::size_t expected =
        static_cast<std::size_t>(layers) * height * width;
    if (data.size() != expected) {
        throw config_error("attention stack: data length " + std::to_string(data.size()) +
                           " != layers*height*width = " + std::to_string(expected));
    }
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0) {
            throw config_error("attention stack: entries must be finite and >= 0");
        }
    }
}

namespace {

constexpr char kRawMagic[4] = {'A', 'T', 'T', 'N'};

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

AttentionStack parse_attention_json(const std::string& text, const std::string& path) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error("attention file " + path + ": invalid JSON: " + e.what());
    }
    AttentionStack stack;
    try {
        stack.layers = doc.at("layers").get<int>();
        stack.height = doc.at("height").get<int>();
        stack.width = doc.at("width").get<int>();
        stack.data = doc.at("data").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw config_error("attention file " + path + ": missing field: " + e.what());
    }
    stack.validate();
    return stack;
}

AttentionStack parse_attention_raw(const std::string& bytes, const std::string& path) {
    if (bytes.size() < 16) {
        throw config_error("attention file " + path + ": truncated header");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    AttentionStack stack;
    stack.layers = static_cast<int>(read_u32_le(p + 4));
    stack.height = static_cast<int>(read_u32_le(p + 8));
    stack.width = static_cast<int>(read_u32_le(p + 12));
    if (stack.layers <= 0 || stack.height <= 0 || stack.width <= 0) {
        throw config_error("attention file " + path + ": bad dims");
    }
    const std::size_t n =
        static_cast<std::size_t>(stack.layers) * stack.height * stack.width;
    if (bytes.size() != 16 + n * 4) {
        throw config_error("attention file " + path + ": payload length mismatch");
    }
    stack.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t u = read_u32_le(p + 16 + i * 4);
        float f;
        std::memcpy(&f, &u, 4);
        stack.data[i] = static_cast<double>(f);
    }
    stack.validate();
    return stack;
}

} // namespace

AttentionStack load_attention(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open attention file: " + path);
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kRawMagic, 4) == 0) {
        return parse_attention_raw(bytes, path);
    }
    return parse_attention_json(bytes, path);
}

void save_attention_json(const std::string& path, const AttentionStack& stack) {
    stack.validate();
    json doc = {{"layers", stack.layers},
                {"height", stack.height},
                {"width", stack.width},
                {"data", stack.data}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw config_error("cannot write attention file: " + path);
    }
    out << doc.dump();
}

void save_attention_raw(const std::string& path, const AttentionStack& stack) {
    stack.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw config_error("cannot write attention file: " + path);
    }
    out.write(kRawMagic, 4);
    write_u32_le(out, static_cast<std::uint32_t>(stack.layers));
    write_u32_le(out, static_cast<std::uint32_t>(stack.height));
    write_u32_le(out, static_cast<std::uint32_t>(stack.width));
    for (double v : stack.data) {
        const float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        write_u32_le(out, u);
    }
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(on.begin(), on.end(), std::uint8_t{1}));
}

FusionSpec FusionSpec::ramp(int lo, int hi) {
    FusionSpec spec;
    spec.layer_lo = lo;
    spec.layer_hi = hi;
    const int n = hi - lo + 1;
    if (n <= 0) {
        throw config_error("fusion range is empty");
    }
    spec.weights.resize(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        spec.weights[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
        sum += static_cast<double>(i + 1);
    }
    for (double& w : spec.weights) {
        w /= sum;
    }
    return spec;
}

void FusionSpec::validate(const AttentionStack& stack) const {
    if (layer_lo < 0 || layer_lo > layer_hi || layer_hi >= stack.layers) {
        throw config_error("fusion layer range [" + std::to_string(layer_lo) + ", " +
                           std::to_string(layer_hi) + "] out of bounds for " +
                           std::to_string(stack.layers) + " layers");
    }
    const std::size_t n = static_cast<std::size_t>(layer_hi - layer_lo + 1);
    if (weights.size() != n) {
        throw config_error("fusion weights count != layer range size");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] < 0.0) {
            throw config_error("fusion weights must be nonnegative");
        }
        if (i > 0 && weights[i] < weights[i - 1]) {
            throw config_error("fusion weights must be nondecreasing in layer index");
        }
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw config_error("fusion weights must sum to 1");
    }
}

void RefineSpec::validate() const {
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw config_error("top_p must be in (0, 1]");
    }
    if (k_regions < 1) {
        throw config_error("k_regions must be >= 1");
    }
    if (!(epsilon > 0.0)) {
        throw config_error("epsilon must be > 0");
    }
    if (pad < 0) {
        throw config_error("pad must be >= 0");
    }
}

AttentionStack contrast_attention(const AttentionStack& pos,
                                  const AttentionStack& neg,
                                  double epsilon) {
    if (pos.layers != neg.layers || pos.height != neg.height || pos.width != neg.width) {
        throw std::invalid_argument("contrast_attention: dimension mismatch");
    }
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("contrast_attention: epsilon must be > 0");
    }
    AttentionStack out;
    out.layers = pos.layers;
    out.height = pos.height;
    out.width = pos.width;
    out.data.resize(pos.data.size());
    for (std::size_t i = 0; i < pos.data.size(); ++i) {
        out.data[i] = pos.data[i] / (neg.data[i] + epsilon);
    }
    return out;
}

Grid fuse_layers(const AttentionStack& stack, const FusionSpec& spec) {
    spec.validate(stack);
    Grid grid;
    grid.height = stack.height;
    grid.width = stack.width;
    grid.values.assign(stack.cells_per_layer(), 0.0);
    for (int l = spec.layer_lo; l <= spec.layer_hi; ++l) {
        const double w = spec.weights[static_cast<std::size_t>(l - spec.layer_lo)];
        const std::size_t base = static_cast<std::size_t>(l) * stack.cells_per_layer();
        for (std::size_t i = 0; i < grid.values.size(); ++i) {
            grid.values[i] += w * stack.data[base + i];
        }
    }
    return grid;
}

ThresholdResult percentile_threshold(const Grid& grid, double top_p) {
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw std::invalid_argument("percentile_threshold: top_p must be in (0, 1]");
    }
    if (grid.values.empty()) {
        throw std::invalid_argument("percentile_threshold: empty grid");
    }
    const std::size_t n = grid.values.size();
    const auto keep = static_cast<std::size_t>(std::ceil(top_p * static_cast<double>(n)));
    const std::size_t m = std::clamp<std::size_t>(keep, 1, n);

    std::vector<double> sorted = grid.values;
    std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end(),
                     std::greater<double>());
    ThresholdResult result;
    result.tau = sorted[m - 1]; // m-th largest value

    result.mask.height = grid.height;
    result.mask.width = grid.width;
    result.mask.on.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.mask.on[i] = grid.values[i] >= result.tau ? 1 : 0;
    }
    return result;
}

ThresholdResult value_threshold(const Grid& grid, double threshold) {
    if (grid.values.empty()) {
        throw std::invalid_argument("value_threshold: empty grid");
    }
    const double maxv = *std::max_element(grid.values.begin(), grid.values.end());
    ThresholdResult result;
    result.tau = maxv > 0.0 ? threshold * maxv : 0.0;
    result.mask.height = grid.height;
    result.mask.width = grid.width;
    result.mask.on.resize(grid.values.size());
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        result.mask.on[i] = grid.values[i] >= result.tau ? 1 : 0;
    }
    return result;
}

RegionSet connected_components(const Mask& mask, const Grid& grid) {
    if (mask.height != grid.height || mask.width != grid.width) {
        throw std::invalid_argument("connected_components: mask/grid dimension mismatch");
    }
    RegionSet out;
    out.mask = mask;

    const int h = mask.height;
    const int w = mask.width;
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    std::vector<std::size_t> stack_buf;

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t start = static_cast<std::size_t>(r) * w + c;
            if (!mask.on[start] || label[start] >= 0) {
                continue;
            }
            Component comp;
            const int id = static_cast<int>(out.components.size());
            stack_buf.clear();
            stack_buf.push_back(start);
            label[start] = id;
            while (!stack_buf.empty()) {
                const std::size_t cur = stack_buf.back();
                stack_buf.pop_back();
                comp.pixels.push_back(cur);
                comp.score += grid.values[cur];
                const int cr = static_cast<int>(cur) / w;
                const int cc = static_cast<int>(cur) % w;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) {
                            continue;
                        }
                        const int nr = cr + dr;
                        const int nc = cc + dc;
                        if (nr < 0 || nr >= h || nc < 0 || nc >= w) {
                            continue;
                        }
                        const std::size_t ni = static_cast<std::size_t>(nr) * w + nc;
                        if (mask.on[ni] && label[ni] < 0) {
                            label[ni] = id;
                            stack_buf.push_back(ni);
                        }
                    }
                }
            }
            std::sort(comp.pixels.begin(), comp.pixels.end());
            comp.bbox = Box{w, h, -1, -1};
            for (std::size_t px : comp.pixels) {
                const int pr = static_cast<int>(px) / w;
                const int pc = static_cast<int>(px) % w;
                comp.bbox.x0 = std::min(comp.bbox.x0, pc);
                comp.bbox.y0 = std::min(comp.bbox.y0, pr);
                comp.bbox.x1 = std::max(comp.bbox.x1, pc);
                comp.bbox.y1 = std::max(comp.bbox.y1, pr);
            }
            out.components.push_back(std::move(comp));
        }
    }

    std::stable_sort(out.components.begin(), out.components.end(),
                     [](const Component& a, const Component& b) { return a.score > b.score; });
    return out;
}

Mask select_regions(const RegionSet& regions, int k) {
    if (k < 1) {
        throw std::invalid_argument("select_regions: k must be >= 1");
    }
    Mask out;
    out.height = regions.mask.height;
    out.width = regions.mask.width;
    out.on.assign(regions.mask.on.size(), 0);
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(k), regions.components.size());
    for (std::size_t i = 0; i < take; ++i) {
        for (std::size_t px : regions.components[i].pixels) {
            out.on[px] = 1;
        }
    }
    return out;
}

} // namespace promptcd
