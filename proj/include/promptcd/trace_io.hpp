// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "promptcd/contrastive.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace promptcd {

/// Trace files are JSONL: one object per step with keys
///   step, selected, head, pos_logits, neg_logits, adjusted
/// Logit vectors are written in full when the vocabulary has at most
/// `full_vector_max_vocab` entries, otherwise as the top `top_m` [id, logit]
/// pairs. `adjusted` is a sparse {id: prob} object over the head.
/// Single-context traces omit neg_logits. A line with step 0 starts a new
/// trace, so files may hold several traces back to back.
struct TraceWriteOptions {
    std::size_t top_m = 32;
    std::size_t full_vector_max_vocab = 4096;
};

std::string trace_to_jsonl(const DecodeTrace& trace, const TraceWriteOptions& opts = {});
void save_trace_jsonl(const std::string& path,
                      const DecodeTrace& trace,
                      const TraceWriteOptions& opts = {});
void append_trace_jsonl(const std::string& path,
                        const DecodeTrace& trace,
                        const TraceWriteOptions& opts = {});

struct ParsedTrace {
    DecodeTrace trace;
    bool truncated = false; // some logit vectors were stored as top-M pairs
};

/// Parses one or more traces; logit vectors are re-densified to `vocab_size`
/// (missing top-M entries become a large negative filler).
/// Throws config_error on malformed lines.
std::vector<ParsedTrace> parse_traces_jsonl(std::string_view text, std::size_t vocab_size);
std::vector<ParsedTrace> load_traces_jsonl(const std::string& path, std::size_t vocab_size);

} // namespace promptcd
