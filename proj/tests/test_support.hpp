// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "promptcd/backend.hpp"
#include "promptcd/contrastive.hpp"

#include <random>
#include <string>
#include <vector>

namespace testsupport {

// Vocabulary of distinct single-character surfaces. Token 0 is "\n" so that
// template joins stay encodable; "P" and "N" mark the two prompt flavors.
inline std::vector<std::string> char_vocab(std::mt19937& rng, std::size_t extra_tokens) {
    std::vector<std::string> vocab{"\n", "P", "N"};
    std::string pool = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < extra_tokens && i < pool.size(); ++i) {
        vocab.push_back(std::string(1, pool[i]));
    }
    return vocab;
}

inline std::vector<double> random_step(std::mt19937& rng, std::size_t vocab_size) {
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    std::vector<double> logits(vocab_size);
    for (double& v : logits) {
        v = u(rng);
    }
    return logits;
}

inline std::vector<std::vector<double>> random_steps(std::mt19937& rng, std::size_t vocab_size,
                                                     std::size_t max_steps) {
    std::uniform_int_distribution<std::size_t> n_d(1, max_steps);
    const std::size_t n = n_d(rng);
    std::vector<std::vector<double>> steps;
    steps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        steps.push_back(random_step(rng, vocab_size));
    }
    return steps;
}

// Table backend with distinct positive/negative behavior plus a default.
inline promptcd::TableModelSpec random_table_spec(std::mt19937& rng,
                                                  std::size_t extra_tokens,
                                                  std::size_t max_steps) {
    promptcd::TableModelSpec spec;
    spec.vocab = char_vocab(rng, extra_tokens);
    spec.rules.push_back({"P", random_steps(rng, spec.vocab.size(), max_steps)});
    spec.rules.push_back({"N", random_steps(rng, spec.vocab.size(), max_steps)});
    spec.default_steps = random_steps(rng, spec.vocab.size(), 2);
    return spec;
}

inline promptcd::PolarityPromptPair char_prompts(std::mt19937& rng,
                                                 const std::vector<std::string>& vocab) {
    auto tail = [&rng, &vocab](std::size_t len) {
        std::uniform_int_distribution<std::size_t> pick(3, vocab.size() - 1);
        std::string out;
        for (std::size_t i = 0; i < len && vocab.size() > 3; ++i) {
            out += vocab[pick(rng)];
        }
        return out;
    };
    promptcd::PolarityPromptPair pair;
    pair.positive = "P" + tail(3);
    pair.negative = "N" + tail(3);
    pair.question = tail(4);
    if (pair.question.empty()) {
        pair.question = "q?";
    }
    return pair;
}

} // namespace testsupport
