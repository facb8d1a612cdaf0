// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace promptcd {

using TokenId = std::int32_t;

/// Ordered token inventory. Ids are authoritative; surface strings may repeat.
class Vocabulary {
public:
    /// Throws config_error if fewer than 2 tokens.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(TokenId id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }

    bool contains(TokenId id) const {
        return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
    }

    /// Concatenation of the surface strings of `ids`.
    std::string decode(std::span<const TokenId> ids) const;

private:
    std::vector<std::string> tokens_;
};

/// Unnormalized scores over a vocabulary at one decode step.
struct TokenDistribution {
    std::vector<double> logits;

    std::size_t size() const { return logits.size(); }
};

/// Numerically stable softmax (max-subtraction). Entries positive, sum 1.
/// Throws std::invalid_argument on non-finite or empty input.
std::vector<double> softmax(const TokenDistribution& d);

/// logits - logsumexp(logits), elementwise. exp of the result is softmax(d).
std::vector<double> log_probs(const TokenDistribution& d);

/// Index of the maximal logit; ties break to the lowest index.
TokenId argmax(const TokenDistribution& d);

/// 1-based rank of `token`: 1 + count of strictly greater logits. Ties share
/// the better rank. Throws std::invalid_argument if `token` is out of range.
int rank_of(const TokenDistribution& d, TokenId token);

/// Paired opposing instructions for one question. The positive text encourages
/// the target behavior, the negative suppresses it or elicits the competitor.
struct PolarityPromptPair {
    std::string positive;
    std::string negative;
    std::string question;

    /// Throws config_error if a field is empty or positive == negative.
    void validate() const;
};

} // namespace promptcd
