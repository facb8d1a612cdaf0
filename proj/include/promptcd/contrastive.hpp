// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "promptcd/backend.hpp"
#include "promptcd/distribution.hpp"
#include "promptcd/errors.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace promptcd {

enum class DecodeStrategy { greedy, sample };

struct ContrastiveConfig {
    double gamma = 0.5;      // contrastive coefficient, >= 0
    double apc_ratio = 0.1;  // plausibility threshold, in (0, 1]
    bool apc_enabled = true;
    int max_tokens = 64;
    DecodeStrategy strategy = DecodeStrategy::greedy;
    std::uint64_t seed = 0;
    std::set<TokenId> stop_tokens;
    int max_context_tokens = 0; // 0 = unlimited; prompts longer than this fail fast

    void validate() const; // throws config_error
};

/// The synchronized pair of sequences sharing a generated suffix. Prompt
/// prefixes are fixed at construction; every emitted token is appended to
/// both sides.
class DualContext {
public:
    DualContext(std::vector<TokenId> positive_prompt, std::vector<TokenId> negative_prompt);

    void append(TokenId token);

    const std::vector<TokenId>& positive_seq() const { return positive_; }
    const std::vector<TokenId>& negative_seq() const { return negative_; }
    const std::vector<TokenId>& generated() const { return generated_; }
    std::size_t positive_prompt_len() const { return positive_prompt_len_; }
    std::size_t negative_prompt_len() const { return negative_prompt_len_; }

private:
    std::vector<TokenId> positive_;
    std::vector<TokenId> negative_;
    std::vector<TokenId> generated_;
    std::size_t positive_prompt_len_ = 0;
    std::size_t negative_prompt_len_ = 0;
};

/// Contrastive scores with an explicit head mask instead of -inf floats.
/// `values` is meaningful only where `in_head` is set.
struct ContrastiveScores {
    std::vector<double> values;
    std::vector<std::uint8_t> in_head;
};

struct TraceStep {
    TokenDistribution pos;
    TokenDistribution neg; // empty for single-context (vanilla) decodes
    std::vector<TokenId> head;
    std::vector<double> adjusted;
    TokenId selected = -1;
};

struct DecodeTrace {
    std::vector<TraceStep> steps;
};

struct DecodeResult {
    std::vector<TokenId> generated; // stop token excluded
    std::string text;
    DecodeTrace trace; // one step per emitted token, including a drawn stop token
};

/// Backend failure mid-decode; carries whatever was generated so far.
struct decode_aborted : backend_error {
    decode_aborted(const std::string& what, DecodeResult partial_result)
        : backend_error(what), partial(std::move(partial_result)) {}
    DecodeResult partial;
};

/// Tokens whose positive-context probability is within `apc_ratio` of the
/// positive maximum. Computed on logits (logit >= max + ln ratio), which is
/// the same set. Always contains the positive argmax; returned sorted.
std::vector<TokenId> plausibility_head(const TokenDistribution& pos, double apc_ratio);

/// log P(pos) - gamma * log P(neg) on head tokens; masked elsewhere.
ContrastiveScores contrastive_scores(const TokenDistribution& pos,
                                     const TokenDistribution& neg,
                                     double gamma,
                                     std::span<const TokenId> head);

/// Softmax over the unmasked scores; exactly 0 outside the head.
/// Throws std::invalid_argument when every entry is masked.
std::vector<double> adjusted_distribution(const ContrastiveScores& scores);

/// Deterministic sampler state for the categorical strategy.
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : state_(seed) {}
    /// Uniform double in [0, 1) from a splitmix64 stream.
    double next_uniform();

private:
    std::uint64_t state_;
};

/// Smallest index whose cumulative probability exceeds a uniform draw.
TokenId sample_index(const std::vector<double>& probs, SampleRng& rng);

/// One contrastive step: query both contexts, mask, score, normalize, select,
/// then append the selected token to both sequences. Returns the token and
/// pushes a TraceStep.
TokenId decode_step(DualContext& ctx,
                    const DistributionProvider& provider,
                    const ContrastiveConfig& cfg,
                    SampleRng& rng,
                    DecodeTrace& trace);

/// Prompt layout. `pattern` must mention {question}; {prompt} receives the
/// polarity instruction and {context} an optional passage (empty for plain
/// decoding).
struct PromptTemplate {
    std::string pattern = "{prompt}\n{question}";
    std::string render(const std::string& prompt,
                       const std::string& question,
                       const std::string& context = "") const;
};

/// Full contrastive loop: runs decode_step until a stop token or max_tokens.
DecodeResult decode(const PolarityPromptPair& pair,
                    const DistributionProvider& provider,
                    const ContrastiveConfig& cfg,
                    const PromptTemplate& tmpl = {},
                    const std::string& context = "");

/// Positive-only decoding over the full distribution (no contrast, no mask).
/// Trace steps carry the raw positive logits and its softmax as `adjusted`.
DecodeResult decode_single(const std::string& prompt_text,
                           const DistributionProvider& provider,
                           const ContrastiveConfig& cfg);

} // namespace promptcd
