// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/distribution.hpp"

#include "promptcd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace promptcd {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 2) {
        throw config_error("vocabulary needs at least 2 tokens, got " +
                           std::to_string(tokens_.size()));
    }
}

const std::string& Vocabulary::token(TokenId id) const {
    if (!contains(id)) {
        throw std::invalid_argument("token id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        out += token(id);
    }
    return out;
}

namespace {

void require_finite(const TokenDistribution& d) {
    if (d.logits.empty()) {
        throw std::invalid_argument("empty logit vector");
    }
    for (double v : d.logits) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("non-finite logit rejected");
        }
    }
}

} // namespace

std::vector<double> softmax(const TokenDistribution& d) {
    require_finite(d);
    const double max_logit = *std::max_element(d.logits.begin(), d.logits.end());
    std::vector<double> probs(d.logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < d.logits.size(); ++i) {
        probs[i] = std::exp(d.logits[i] - max_logit);
        sum += probs[i];
    }
    for (double& p : probs) {
        p /= sum;
    }
    return probs;
}

std::vector<double> log_probs(const TokenDistribution& d) {
    require_finite(d);
    const double max_logit = *std::max_element(d.logits.begin(), d.logits.end());
    double sum = 0.0;
    for (double v : d.logits) {
        sum += std::exp(v - max_logit);
    }
    const double lse = max_logit + std::log(sum);
    std::vector<double> out(d.logits.size());
    for (std::size_t i = 0; i < d.logits.size(); ++i) {
        out[i] = d.logits[i] - lse;
    }
    return out;
}

TokenId argmax(const TokenDistribution& d) {
    if (d.logits.empty()) {
        throw std::invalid_argument("argmax of empty distribution");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.logits.size(); ++i) {
        if (d.logits[i] > d.logits[best]) {
            best = i;
        }
    }
    return static_cast<TokenId>(best);
}

int rank_of(const TokenDistribution& d, TokenId token) {
    if (token < 0 || static_cast<std::size_t>(token) >= d.logits.size()) {
        throw std::invalid_argument("rank_of: token id out of range");
    }
    const double v = d.logits[static_cast<std::size_t>(token)];
    int greater = 0;
    for (double x : d.logits) {
        if (x > v) {
            ++greater;
        }
    }
    return 1 + greater;
}

void PolarityPromptPair::validate() const {
    if (positive.empty() || negative.empty() || question.empty()) {
        throw config_error("polarity prompts and question must be nonempty");
    }
    if (positive == negative) {
        throw config_error("positive and negative prompts must differ");
    }
}

} // namespace promptcd
