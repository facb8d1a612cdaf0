// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "promptcd/contrastive.hpp"
#include "promptcd/distribution.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptcd {

/// Which knowledge source a token string belongs to, by substring containment
/// of the whitespace-trimmed string in each answer (case-sensitive). A string
/// contained in both answers is `common`; one empty after trimming is `neither`.
enum class Membership { common, cont_only, para_only, neither };

Membership common_membership(std::string_view token_string,
                             std::string_view answer_cont,
                             std::string_view answer_para);

/// First-capture logits and ranks of the discriminative knowledge tokens.
struct CaptureResult {
    std::optional<double> p_cont;
    std::optional<double> p_para;
    std::optional<int> rank_cont;
    std::optional<int> rank_para;
    std::optional<std::size_t> position; // step index of the first capture
};

/// Scan a per-step score sequence for the first tokens discriminating the
/// contextual answer from the parametric one.
///
/// Steps whose greedy token touches neither answer are skipped. At a
/// qualifying step tokens are visited in descending score order (ties by
/// ascending id); a common token seen before either capture ends the step's
/// scan. The first cont-only and para-only hits record their score and
/// tie-sharing rank. Tokens decoding to whitespace-only strings are ignored.
CaptureResult capture(std::span<const TokenDistribution> steps,
                      const std::function<std::string(TokenId)>& decode_token,
                      std::string_view answer_cont,
                      std::string_view answer_para);

enum class StubbornClass { flipped, stubborn, absent };

/// flipped: contextual token reached rank 1; stubborn: captured but outranked;
/// absent: never captured.
StubbornClass classify_stubborn(const CaptureResult& r);
std::string to_string(StubbornClass c);

/// One knowledge-conflict item: a counterfactual context whose answer
/// disagrees with the model-internal one.
struct ConflictRecord {
    std::string id;
    std::string question;
    std::string context;
    std::string answer_context;    // what the passage supports
    std::string answer_parametric; // what priors support

    void validate() const; // answers nonempty and distinct
};

/// JSONL, one record per line. Throws config_error on malformed input.
std::vector<ConflictRecord> load_conflict_records(const std::string& path);
std::vector<ConflictRecord> parse_conflict_records(std::string_view jsonl_text);

struct ResponseHits {
    bool hits_context = false;
    bool hits_parametric = false;
};

/// Case-insensitive containment of each trimmed answer in the output text.
ResponseHits score_response(std::string_view output_text, const ConflictRecord& record);

struct BehaviorMetrics {
    double con_r = 0.0;
    double par_r = 0.0;
    double mr = 0.0;
    bool mr_denominator_zero = false;
};

/// par_r / (par_r + con_r); 0 when the denominator vanishes.
double memorization_ratio(double par_r, double con_r);

/// Hit fractions plus the memorization ratio. Throws std::invalid_argument on
/// an empty list.
BehaviorMetrics aggregate_metrics(std::span<const ResponseHits> scored);

/// Rank histogram bins used in reports: {1, 2-5, 6-20, >20} (a display
/// convention, not a contract).
struct RankBins {
    std::size_t rank1 = 0;
    std::size_t rank2_5 = 0;
    std::size_t rank6_20 = 0;
    std::size_t rank21_plus = 0;
};

RankBins bin_ranks(std::span<const int> ranks);

enum class ProbeSource { positive, adjusted };

/// Per-step score vectors of a trace: the raw positive logits, or the sparse
/// renormalized adjusted distribution that actually drove selection.
std::vector<TokenDistribution> trace_distributions(const DecodeTrace& trace, ProbeSource source);

} // namespace promptcd
