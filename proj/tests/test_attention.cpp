// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "promptcd/attention.hpp"
#include "promptcd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace promptcd;

namespace {

AttentionStack stack_of(int layers, int h, int w, double fill = 0.0) {
    AttentionStack s;
    s.layers = layers;
    s.height = h;
    s.width = w;
    s.data.assign(static_cast<std::size_t>(layers) * h * w, fill);
    return s;
}

Grid grid_of(int h, int w, std::vector<double> values) {
    Grid g;
    g.height = h;
    g.width = w;
    g.values = std::move(values);
    return g;
}

Grid random_grid(std::mt19937& rng, int h, int w, double lo = 0.0, double hi = 10.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Grid g;
    g.height = h;
    g.width = w;
    g.values.resize(static_cast<std::size_t>(h) * w);
    for (double& v : g.values) {
        v = u(rng);
    }
    return g;
}

int grid_argmax(const AttentionStack& s, int layer) {
    const std::size_t base = static_cast<std::size_t>(layer) * s.cells_per_layer();
    int best = 0;
    for (std::size_t i = 1; i < s.cells_per_layer(); ++i) {
        if (s.data[base + i] > s.data[base + best]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

} // namespace

TEST_CASE("contrast: uniform negative preserves positive argmax per layer") {
    std::mt19937 rng(900);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    AttentionStack pos = stack_of(3, 4, 5);
    for (double& v : pos.data) {
        v = u(rng);
    }
    const AttentionStack neg = stack_of(3, 4, 5, 0.8);
    const AttentionStack contrasted = contrast_attention(pos, neg, 1e-6);
    for (int l = 0; l < 3; ++l) {
        CHECK(grid_argmax(contrasted, l) == grid_argmax(pos, l));
    }
}

TEST_CASE("contrast: pos == neg keeps each layer's ordering") {
    std::mt19937 rng(901);
    std::uniform_real_distribution<double> u(0.01, 4.0);
    AttentionStack pos = stack_of(2, 3, 3);
    for (double& v : pos.data) {
        v = u(rng);
    }
    const AttentionStack contrasted = contrast_attention(pos, pos, 0.05);
    // a -> a/(a+eps) is strictly increasing, so pairwise order is unchanged.
    for (int l = 0; l < 2; ++l) {
        const std::size_t base = static_cast<std::size_t>(l) * pos.cells_per_layer();
        for (std::size_t i = 0; i < pos.cells_per_layer(); ++i) {
            for (std::size_t j = 0; j < pos.cells_per_layer(); ++j) {
                if (pos.data[base + i] > pos.data[base + j]) {
                    CHECK(contrasted.data[base + i] > contrasted.data[base + j]);
                }
            }
        }
    }
}

TEST_CASE("contrast: dimension and epsilon errors") {
    const AttentionStack a = stack_of(1, 2, 2, 1.0);
    const AttentionStack b = stack_of(1, 2, 3, 1.0);
    CHECK_THROWS_AS(contrast_attention(a, b, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(contrast_attention(a, a, 0.0), std::invalid_argument);
}

namespace {

// Constructs pos = generic * signal, neg = generic, with generic/epsilon in
// [r, r*(r+2)] (one pixel pinned at exactly r). Returns the max per-pixel
// relative deviation between the unit-sum normalizations of the contrasted
// map and the pure signal.
double cancellation_deviation(std::mt19937& rng, double r, double epsilon, int h, int w) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::uniform_real_distribution<double> gen_u(r * epsilon, r * (r + 2.0) * epsilon);
    std::uniform_real_distribution<double> sig_u(0.5, 2.0);
    std::vector<double> generic(n);
    std::vector<double> signal(n);
    for (std::size_t i = 0; i < n; ++i) {
        generic[i] = gen_u(rng);
        signal[i] = sig_u(rng);
    }
    generic[0] = r * epsilon; // pin min(generic)/epsilon = r exactly

    AttentionStack pos = stack_of(1, h, w);
    AttentionStack neg = stack_of(1, h, w);
    for (std::size_t i = 0; i < n; ++i) {
        pos.data[i] = generic[i] * signal[i];
        neg.data[i] = generic[i];
    }
    const AttentionStack contrasted = contrast_attention(pos, neg, epsilon);

    // Exact error factor of the quotient: generic / (generic + epsilon).
    for (std::size_t i = 0; i < n; ++i) {
        const double exact = signal[i] * (generic[i] / (generic[i] + epsilon));
        CHECK(std::abs(contrasted.data[i] - exact) <= 1e-12 * std::max(1.0, exact));
    }

    const double sum_c = std::accumulate(contrasted.data.begin(), contrasted.data.end(), 0.0);
    const double sum_s = std::accumulate(signal.begin(), signal.end(), 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = contrasted.data[i] / sum_c;
        const double b = signal[i] / sum_s;
        worst = std::max(worst, std::abs(a - b) / b);
    }
    return worst;
}

} // namespace

TEST_CASE("contrast cancellation: generic pattern divides out") {
    std::mt19937 rng(902);
    SUBCASE("min generic >= 100 epsilon keeps deviation under 2%") {
        const double dev = cancellation_deviation(rng, 100.0, 1e-3, 8, 8);
        CHECK(dev <= 0.02);
    }
    SUBCASE("deviation bound 1/(1+r) at r in {10, 100, 1000}") {
        for (const double r : {10.0, 100.0, 1000.0}) {
            const double dev = cancellation_deviation(rng, r, 1e-3, 8, 8);
            CHECK(dev <= 1.0 / (1.0 + r) + 1e-6);
        }
    }
}

TEST_CASE("fuse: single layer and identical layers") {
    AttentionStack s = stack_of(4, 2, 2);
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        s.data[i] = static_cast<double>(i % 4) + 1.0;
    }
    FusionSpec one;
    one.layer_lo = 2;
    one.layer_hi = 2;
    one.weights = {1.0};
    const Grid g = fuse_layers(s, one);
    for (int i = 0; i < 4; ++i) {
        CHECK(g.values[static_cast<std::size_t>(i)] == s.data[2 * 4 + i]);
    }

    // Identical layers: any convex weights reproduce the shared layer.
    AttentionStack same = stack_of(3, 2, 2);
    for (int l = 0; l < 3; ++l) {
        for (int i = 0; i < 4; ++i) {
            same.data[static_cast<std::size_t>(l * 4 + i)] = 0.5 * i;
        }
    }
    FusionSpec ramp2 = FusionSpec::ramp(0, 2);
    const Grid g2 = fuse_layers(same, ramp2);
    for (int i = 0; i < 4; ++i) {
        CHECK(g2.values[static_cast<std::size_t>(i)] == doctest::Approx(0.5 * i).epsilon(1e-12));
    }
}

TEST_CASE("fuse: default ramp weights on [20, 25]") {
    const FusionSpec spec = FusionSpec::ramp(20, 25);
    REQUIRE(spec.weights.size() == 6);
    const double sum = std::accumulate(spec.weights.begin(), spec.weights.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(spec.weights.back() / spec.weights.front() == doctest::Approx(6.0).epsilon(1e-12));
    const AttentionStack s = stack_of(26, 2, 2, 1.0);
    CHECK_NOTHROW(spec.validate(s));
    const AttentionStack small = stack_of(25, 2, 2, 1.0);
    CHECK_THROWS_AS(spec.validate(small), config_error);
}

TEST_CASE("fusion spec validation rejects bad weights") {
    const AttentionStack s = stack_of(8, 2, 2, 1.0);
    FusionSpec decreasing;
    decreasing.layer_lo = 1;
    decreasing.layer_hi = 3;
    decreasing.weights = {0.5, 0.3, 0.2}; // not nondecreasing
    CHECK_THROWS_AS(decreasing.validate(s), config_error);

    FusionSpec unnormalized;
    unnormalized.layer_lo = 1;
    unnormalized.layer_hi = 2;
    unnormalized.weights = {0.4, 0.5};
    CHECK_THROWS_AS(unnormalized.validate(s), config_error);

    FusionSpec wrong_count;
    wrong_count.layer_lo = 1;
    wrong_count.layer_hi = 3;
    wrong_count.weights = {0.5, 0.5};
    CHECK_THROWS_AS(wrong_count.validate(s), config_error);
}

TEST_CASE("property: ramp weights normalize for arbitrary ranges") {
    std::mt19937 rng(903);
    std::uniform_int_distribution<int> lo_d(0, 30);
    std::uniform_int_distribution<int> len_d(0, 12);
    for (int it = 0; it < 1000; ++it) {
        const int lo = lo_d(rng);
        const int hi = lo + len_d(rng);
        const FusionSpec spec = FusionSpec::ramp(lo, hi);
        const double sum = std::accumulate(spec.weights.begin(), spec.weights.end(), 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-12);
        for (std::size_t i = 1; i < spec.weights.size(); ++i) {
            CHECK(spec.weights[i] >= spec.weights[i - 1]);
        }
    }
}

TEST_CASE("property: fused grid is bounded by the max layer value") {
    std::mt19937 rng(904);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int it = 0; it < 200; ++it) {
        AttentionStack s = stack_of(5, 3, 3);
        for (double& v : s.data) {
            v = u(rng);
        }
        const FusionSpec spec = FusionSpec::ramp(1, 4);
        const Grid g = fuse_layers(s, spec);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            double max_layer = 0.0;
            for (int l = 1; l <= 4; ++l) {
                max_layer = std::max(max_layer,
                                     s.data[static_cast<std::size_t>(l) * 9 + i]);
            }
            CHECK(g.values[i] <= max_layer + 1e-12);
            CHECK(g.values[i] >= 0.0);
        }
    }
}

TEST_CASE("percentile threshold: degenerate settings") {
    const Grid g = grid_of(2, 3, {5.0, 1.0, 3.0, 2.0, 4.0, 0.0});
    const ThresholdResult all = percentile_threshold(g, 1.0);
    CHECK(all.mask.count() == 6);
    CHECK(all.tau == 0.0);

    const ThresholdResult top1 = percentile_threshold(g, 1.0 / 6.0);
    CHECK(top1.mask.count() == 1);
    CHECK(top1.mask.at(0, 0));
    CHECK(top1.tau == 5.0);
}

TEST_CASE("percentile threshold: ties at tau are retained") {
    const Grid g = grid_of(1, 5, {3.0, 3.0, 3.0, 1.0, 0.5});
    const ThresholdResult r = percentile_threshold(g, 0.2); // ceil(0.2*5) = 1
    CHECK(r.tau == 3.0);
    CHECK(r.mask.count() == 3); // all tied pixels stay
}

TEST_CASE("percentile threshold: retained count matches the sort oracle") {
    std::mt19937 rng(905);
    std::uniform_real_distribution<double> p_d(0.01, 1.0);
    std::uniform_int_distribution<int> tie_d(0, 5);
    for (int it = 0; it < 500; ++it) {
        Grid g = random_grid(rng, 8, 8);
        for (int t = tie_d(rng); t > 0; --t) { // inject ties
            g.values[static_cast<std::size_t>(t)] = g.values[0];
        }
        const double p = p_d(rng);
        const std::size_t n = g.values.size();
        const auto m = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));

        std::vector<double> sorted = g.values;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        const double tau_oracle = sorted[m - 1];
        const std::size_t ties_at_tau = static_cast<std::size_t>(
            std::count(sorted.begin(), sorted.end(), tau_oracle));
        const std::size_t above = static_cast<std::size_t>(
            std::count_if(sorted.begin(), sorted.end(),
                          [tau_oracle](double v) { return v > tau_oracle; }));

        const ThresholdResult r = percentile_threshold(g, p);
        CHECK(r.tau == tau_oracle);
        CHECK(r.mask.count() == above + ties_at_tau);
        CHECK(r.mask.count() >= m);
        CHECK(r.mask.count() <= m + ties_at_tau);
    }
}

TEST_CASE("property: percentile mask survives strictly monotone transforms") {
    std::mt19937 rng(906);
    std::uniform_real_distribution<double> p_d(0.05, 1.0);
    const std::vector<std::function<double(double)>> transforms{
        [](double x) { return x * x * x; },
        [](double x) { return 2.0 * x + 5.0; },
        [](double x) { return std::exp(x / 10.0); },
    };
    for (int it = 0; it < 1000; ++it) {
        const Grid g = random_grid(rng, 6, 6);
        const double p = p_d(rng);
        const Mask base = percentile_threshold(g, p).mask;
        const auto& f = transforms[static_cast<std::size_t>(it) % transforms.size()];
        Grid t = g;
        for (double& v : t.values) {
            v = f(v);
        }
        const Mask transformed = percentile_threshold(t, p).mask;
        CHECK(base.on == transformed.on);
    }
}

TEST_CASE("property: pos-scaling leaves the threshold mask unchanged") {
    std::mt19937 rng(907);
    for (int it = 0; it < 200; ++it) {
        AttentionStack pos = stack_of(3, 5, 5);
        AttentionStack neg = stack_of(3, 5, 5);
        std::uniform_real_distribution<double> u(0.0, 2.0);
        for (std::size_t i = 0; i < pos.data.size(); ++i) {
            pos.data[i] = u(rng);
            neg.data[i] = u(rng);
        }
        const double scale = it % 2 == 0 ? 4.0 : 0.125; // powers of two stay exact
        AttentionStack scaled = pos;
        for (double& v : scaled.data) {
            v *= scale;
        }
        const FusionSpec fusion = FusionSpec::ramp(0, 2);
        const Grid s1 = fuse_layers(contrast_attention(pos, neg, 1e-6), fusion);
        const Grid s2 = fuse_layers(contrast_attention(scaled, neg, 1e-6), fusion);
        const Mask m1 = percentile_threshold(s1, 0.3).mask;
        const Mask m2 = percentile_threshold(s2, 0.3).mask;
        CHECK(m1.on == m2.on);
        // Positive homogeneity of the quotient itself.
        for (std::size_t i = 0; i < s1.values.size(); ++i) {
            CHECK(s2.values[i] == doctest::Approx(scale * s1.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("connected components: degenerate masks") {
    Mask empty;
    empty.height = 3;
    empty.width = 3;
    empty.on.assign(9, 0);
    const Grid g = grid_of(3, 3, std::vector<double>(9, 1.0));
    CHECK(connected_components(empty, g).components.empty());

    Mask full = empty;
    full.on.assign(9, 1);
    const RegionSet rs = connected_components(full, g);
    REQUIRE(rs.components.size() == 1);
    CHECK(rs.components[0].pixels.size() == 9);
    CHECK(rs.components[0].bbox.x0 == 0);
    CHECK(rs.components[0].bbox.y1 == 2);
    CHECK(rs.components[0].score == doctest::Approx(9.0));
}

TEST_CASE("connected components: 8-connectivity joins diagonals") {
    Mask m;
    m.height = 2;
    m.width = 2;
    m.on = {1, 0, 0, 1}; // diagonal pair
    const Grid g = grid_of(2, 2, {1.0, 0.0, 0.0, 2.0});
    const RegionSet rs = connected_components(m, g);
    REQUIRE(rs.components.size() == 1);
    CHECK(rs.components[0].score == doctest::Approx(3.0));
}

TEST_CASE("connected components match BFS flood fill on 500 random masks") {
    std::mt19937 rng(908);
    std::uniform_real_distribution<double> density_d(0.1, 0.9);
    for (int it = 0; it < 500; ++it) {
        Mask m;
        m.height = 32;
        m.width = 32;
        m.on.resize(32 * 32);
        const double density = density_d(rng);
        std::bernoulli_distribution bit(density);
        for (auto& v : m.on) {
            v = bit(rng) ? 1 : 0;
        }
        const Grid g = random_grid(rng, 32, 32);
        const RegionSet rs = connected_components(m, g);

        auto expected = oracle::bfs_components(m.on, 32, 32);
        std::set<std::vector<std::size_t>> want(expected.begin(), expected.end());
        std::set<std::vector<std::size_t>> got;
        std::size_t total = 0;
        for (const Component& comp : rs.components) {
            got.insert(comp.pixels);
            total += comp.pixels.size();
        }
        REQUIRE(got == want);          // exact pixel sets
        CHECK(total == m.count());     // partition covers the mask
        CHECK(got.size() == rs.components.size()); // and is disjoint
        for (std::size_t i = 1; i < rs.components.size(); ++i) {
            CHECK(rs.components[i - 1].score >= rs.components[i].score);
        }
    }
}

TEST_CASE("select regions: counts and score ordering") {
    // Two blobs with known cumulative scores; the right-hand one is heavier.
    Mask m;
    m.height = 4;
    m.width = 8;
    m.on.assign(32, 0);
    Grid g = grid_of(4, 8, std::vector<double>(32, 0.0));
    auto put = [&](int r, int c, double v) {
        m.set(r, c, true);
        g.at(r, c) = v;
    };
    put(0, 0, 1.0);
    put(0, 1, 1.0); // left blob, score 2
    put(2, 6, 5.0);
    put(3, 7, 4.0); // right blob (diagonal, 8-connected), score 9

    const RegionSet rs = connected_components(m, g);
    REQUIRE(rs.components.size() == 2);
    CHECK(rs.components[0].score == doctest::Approx(9.0));

    const Mask top1 = select_regions(rs, 1);
    CHECK(top1.count() == 2);
    CHECK(top1.at(2, 6));
    CHECK(top1.at(3, 7));
    CHECK(!top1.at(0, 0));

    const Mask all = select_regions(rs, 99);
    CHECK(all.on == m.on);
}

TEST_CASE("attention stack file round-trips") {
    std::mt19937 rng(909);
    AttentionStack s = stack_of(2, 3, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : s.data) {
        v = u(rng);
    }
    const std::string json_path = "attn_roundtrip.json";
    const std::string raw_path = "attn_roundtrip.attn";
    save_attention_json(json_path, s);
    save_attention_raw(raw_path, s);

    const AttentionStack from_json = load_attention(json_path);
    CHECK(from_json.data == s.data);

    const AttentionStack from_raw = load_attention(raw_path);
    REQUIRE(from_raw.data.size() == s.data.size());
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        // Raw files store float32.
        CHECK(from_raw.data[i] == doctest::Approx(s.data[i]).epsilon(1e-6));
    }

    CHECK_THROWS_AS(load_attention("does_not_exist.attn"), config_error);
}

TEST_CASE("attention stack validation") {
    AttentionStack bad = stack_of(1, 2, 2, 1.0);
    bad.data.pop_back();
    CHECK_THROWS_AS(bad.validate(), config_error);
    AttentionStack neg = stack_of(1, 2, 2, -0.5);
    CHECK_THROWS_AS(neg.validate(), config_error);
}
