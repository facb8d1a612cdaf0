// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "promptcd/distribution.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptcd {

/// Serves next-token distributions for arbitrary token sequences.
///
/// Implementations must be safe for concurrent next_distribution() calls and
/// keep their vocabulary stable for the provider's lifetime.
class DistributionProvider {
public:
    virtual ~DistributionProvider() = default;

    virtual const Vocabulary& vocabulary() const = 0;
    virtual std::vector<TokenId> encode(std::string_view text) const = 0;
    virtual TokenDistribution next_distribution(std::span<const TokenId> ids) const = 0;
};

/// One scripted response: when `prompt_contains` appears in the decoded
/// sequence text, serve `steps` in order, repeating the last vector once
/// exhausted.
struct TableRule {
    std::string prompt_contains;
    std::vector<std::vector<double>> steps;
};

/// Deterministic table-driven model description.
///
/// Matching is substring-on-decoded-text, first rule wins. Step indexing is
/// relative to the shortest token prefix whose decoded text contains the
/// rule's marker, so a marker placed at the end of a prompt scripts logits
/// per generated step. Rules with a single step vector are insensitive to
/// marker placement.
struct TableModelSpec {
    std::vector<std::string> vocab;
    std::vector<TableRule> rules;
    std::vector<std::vector<double>> default_steps;

    /// Throws config_error on length mismatches or empty step lists.
    void validate() const;
};

/// Parse/serialize the single-document JSON form of TableModelSpec.
TableModelSpec parse_table_spec(std::string_view json_text);
TableModelSpec load_table_spec(const std::string& path);
std::string table_spec_to_json(const TableModelSpec& spec);

/// Build an immutable provider from a validated spec.
///
/// encode() is per-position greedy longest-match over the vocab surface
/// strings; characters that start no token map to the reserved id 0.
std::unique_ptr<DistributionProvider> table_provider(TableModelSpec spec);

struct LogitServerEndpoint {
    std::string base_url;
    int timeout_ms = 5000;
    int retries = 2; // additional attempts after the first

    void validate() const;
};

/// HTTP client for an external logit server.
///
/// Wire protocol (JSON over HTTP):
///   GET  /v1/vocab            -> {"tokens": ["...", ...]}
///   POST /v1/encode  {"text"} -> {"ids": [int...]}
///   POST /v1/logits  {"ids"}  -> {"logits": [float...]}   (length == vocab size)
///
/// Transport failures and non-200 statuses are retried up to ep.retries
/// times, then surface as backend_error. Malformed or dimension-mismatched
/// responses raise protocol_error without retry. The vocabulary is fetched
/// once at construction.
std::unique_ptr<DistributionProvider> http_provider(const LogitServerEndpoint& ep);

/// Marker strings the conflict-scenario rules match on. Scenario rules are
/// single-step, so marker placement inside the prompt does not matter.
inline constexpr const char* kConflictPositiveMarker = "[ctx-faithful]";
inline constexpr const char* kConflictNegativeMarker = "[param-reliant]";

/// Synthetic knowledge-conflict backend: under the positive-marker rule the
/// parametric token leads the contextual token by `pos_margin` logits; under
/// the negative-marker rule it leads by `neg_margin`. Every other token sits
/// at least 3 logits below both.
TableModelSpec conflict_scenario(TokenId cont_token,
                                 TokenId para_token,
                                 double pos_margin,
                                 double neg_margin,
                                 std::vector<std::string> vocab);

/// Prompt pair whose texts end with the conflict markers.
PolarityPromptPair conflict_prompts(std::string question);

} // namespace promptcd
