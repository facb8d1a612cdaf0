// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace promptcd {

void ContrastiveConfig::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw config_error("gamma must be a finite value >= 0");
    }
    if (!(apc_ratio > 0.0 && apc_ratio <= 1.0)) {
        throw config_error("apc_ratio must be in (0, 1]");
    }
    if (max_tokens < 1) {
        throw config_error("max_tokens must be >= 1");
    }
    if (max_context_tokens < 0) {
        throw config_error("max_context_tokens must be >= 0");
    }
}

DualContext::DualContext(std::vector<TokenId> positive_prompt,
                         std::vector<TokenId> negative_prompt)
    : positive_(std::move(positive_prompt)),
      negative_(std::move(negative_prompt)),
      positive_prompt_len_(positive_.size()),
      negative_prompt_len_(negative_.size()) {}

void DualContext::append(TokenId token) {
    positive_.push_back(token);
    negative_.push_back(token);
    generated_.push_back(token);
}

std::vector<TokenId> plausibility_head(const TokenDistribution& pos, double apc_ratio) {
    if (!(apc_ratio > 0.0 && apc_ratio <= 1.0)) {
        throw std::invalid_argument("apc_ratio must be in (0, 1]");
    }
    if (pos.logits.empty()) {
        throw std::invalid_argument("plausibility_head on empty distribution");
    }
    // P(x) >= ratio * max P  <=>  logit(x) >= max_logit + ln ratio
    const double max_logit = *std::max_element(pos.logits.begin(), pos.logits.end());
    const double cutoff = max_logit + std::log(apc_ratio);
    std::vector<TokenId> head;
    for (std::size_t i = 0; i < pos.logits.size(); ++i) {
        if (pos.logits[i] >= cutoff) {
            head.push_back(static_cast<TokenId>(i));
        }
    }
    return head;
}

ContrastiveScores contrastive_scores(const TokenDistribution& pos,
                                     const TokenDistribution& neg,
                                     double gamma,
                                     std::span<const TokenId> head) {
    if (pos.size() != neg.size()) {
        throw std::invalid_argument("contrastive_scores: vocabulary mismatch");
    }
    if (head.empty()) {
        throw std::invalid_argument("contrastive_scores: empty head");
    }
    const std::vector<double> lp_pos = log_probs(pos);
    const std::vector<double> lp_neg = log_probs(neg);

    ContrastiveScores out;
    out.values.assign(pos.size(), 0.0);
    out.in_head.assign(pos.size(), 0);
    for (TokenId id : head) {
        if (id < 0 || static_cast<std::size_t>(id) >= pos.size()) {
            throw std::invalid_argument("contrastive_scores: head token out of range");
        }
        const auto i = static_cast<std::size_t>(id);
        out.values[i] = lp_pos[i] - gamma * lp_neg[i];
        out.in_head[i] = 1;
    }
    return out;
}

std::vector<double> adjusted_distribution(const ContrastiveScores& scores) {
    double max_score = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < scores.values.size(); ++i) {
        if (!scores.in_head[i]) {
            continue;
        }
        if (!any || scores.values[i] > max_score) {
            max_score = scores.values[i];
        }
        any = true;
    }
    if (!any) {
        throw std::invalid_argument("adjusted_distribution: every score is masked");
    }

    std::vector<double> probs(scores.values.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.values.size(); ++i) {
        if (scores.in_head[i]) {
            probs[i] = std::exp(scores.values[i] - max_score);
            sum += probs[i];
        }
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (scores.in_head[i]) {
            probs[i] /= sum;
        }
    }
    return probs;
}

double SampleRng::next_uniform() {
    // splitmix64; top 53 bits -> [0, 1)
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

TokenId sample_index(const std::vector<double>& probs, SampleRng& rng) {
    const double u = rng.next_uniform();
    double cum = 0.0;
    TokenId last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) {
            continue;
        }
        cum += probs[i];
        last_positive = static_cast<TokenId>(i);
        if (u < cum) {
            return last_positive;
        }
    }
    if (last_positive < 0) {
        throw std::invalid_argument("sample_index: no positive probability mass");
    }
    return last_positive; // u landed in the rounding gap past the final cumsum
}

namespace {

std::vector<TokenId> full_head(std::size_t vocab_size) {
    std::vector<TokenId> head(vocab_size);
    std::iota(head.begin(), head.end(), 0);
    return head;
}

// Lowest-index maximum over head entries. Ties in score are ties in the
// adjusted distribution, so this matches greedy selection on it.
TokenId argmax_masked(const ContrastiveScores& scores) {
    TokenId best = -1;
    for (std::size_t i = 0; i < scores.values.size(); ++i) {
        if (!scores.in_head[i]) {
            continue;
        }
        if (best < 0 || scores.values[i] > scores.values[static_cast<std::size_t>(best)]) {
            best = static_cast<TokenId>(i);
        }
    }
    return best;
}

void check_vocab_sized(const TokenDistribution& d, const DistributionProvider& provider) {
    if (d.size() != provider.vocabulary().size()) {
        throw backend_error("backend returned a distribution of wrong length");
    }
}

} // namespace

TokenId decode_step(DualContext& ctx,
                    const DistributionProvider& provider,
                    const ContrastiveConfig& cfg,
                    SampleRng& rng,
                    DecodeTrace& trace) {
    TraceStep step;
    step.pos = provider.next_distribution(ctx.positive_seq());
    step.neg = provider.next_distribution(ctx.negative_seq());
    check_vocab_sized(step.pos, provider);
    check_vocab_sized(step.neg, provider);

    step.head = cfg.apc_enabled ? plausibility_head(step.pos, cfg.apc_ratio)
                                : full_head(step.pos.size());
    const ContrastiveScores scores =
        contrastive_scores(step.pos, step.neg, cfg.gamma, step.head);
    step.adjusted = adjusted_distribution(scores);

    step.selected = cfg.strategy == DecodeStrategy::greedy ? argmax_masked(scores)
                                                           : sample_index(step.adjusted, rng);
    ctx.append(step.selected);
    trace.steps.push_back(std::move(step));
    return trace.steps.back().selected;
}

std::string PromptTemplate::render(const std::string& prompt,
                                   const std::string& question,
                                   const std::string& context) const {
    if (pattern.find("{question}") == std::string::npos) {
        throw config_error("prompt template must contain {question}");
    }
    std::string out = pattern;
    auto replace_all = [&out](const std::string& key, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    };
    replace_all("{prompt}", prompt);
    replace_all("{question}", question);
    replace_all("{context}", context);
    return out;
}

namespace {

std::string surface_text(const Vocabulary& vocab, const std::vector<TokenId>& ids) {
    return vocab.decode(ids);
}

void check_context_budget(const ContrastiveConfig& cfg, std::size_t prompt_tokens) {
    if (cfg.max_context_tokens > 0 &&
        prompt_tokens + static_cast<std::size_t>(cfg.max_tokens) >
            static_cast<std::size_t>(cfg.max_context_tokens)) {
        throw config_error("prompt plus generation budget exceeds the context limit");
    }
}

} // namespace

DecodeResult decode(const PolarityPromptPair& pair,
                    const DistributionProvider& provider,
                    const ContrastiveConfig& cfg,
                    const PromptTemplate& tmpl,
                    const std::string& context) {
    pair.validate();
    cfg.validate();

    const std::string pos_text = tmpl.render(pair.positive, pair.question, context);
    const std::string neg_text = tmpl.render(pair.negative, pair.question, context);
    std::vector<TokenId> pos_ids = provider.encode(pos_text);
    std::vector<TokenId> neg_ids = provider.encode(neg_text);
    check_context_budget(cfg, pos_ids.size());
    check_context_budget(cfg, neg_ids.size());

    DualContext ctx(std::move(pos_ids), std::move(neg_ids));
    SampleRng rng(cfg.seed);
    DecodeResult result;
    bool stopped = false;
    try {
        for (int t = 0; t < cfg.max_tokens && !stopped; ++t) {
            const TokenId tok = decode_step(ctx, provider, cfg, rng, result.trace);
            stopped = cfg.stop_tokens.count(tok) > 0;
        }
    } catch (const backend_error& e) {
        result.generated = ctx.generated();
        result.text = surface_text(provider.vocabulary(), result.generated);
        throw decode_aborted(e.what(), std::move(result));
    }

    result.generated = ctx.generated();
    if (stopped) {
        result.generated.pop_back(); // drawn stop token stays in the trace only
    }
    result.text = surface_text(provider.vocabulary(), result.generated);
    return result;
}

DecodeResult decode_single(const std::string& prompt_text,
                           const DistributionProvider& provider,
                           const ContrastiveConfig& cfg) {
    cfg.validate();
    std::vector<TokenId> ids = provider.encode(prompt_text);
    check_context_budget(cfg, ids.size());

    SampleRng rng(cfg.seed);
    DecodeResult result;
    bool stopped = false;
    try {
        for (int t = 0; t < cfg.max_tokens && !stopped; ++t) {
            TraceStep step;
            step.pos = provider.next_distribution(ids);
            check_vocab_sized(step.pos, provider);
            step.head = full_head(step.pos.size());
            step.adjusted = softmax(step.pos);
            step.selected = cfg.strategy == DecodeStrategy::greedy
                                ? argmax(step.pos)
                                : sample_index(step.adjusted, rng);
            ids.push_back(step.selected);
            result.generated.push_back(step.selected);
            stopped = cfg.stop_tokens.count(step.selected) > 0;
            result.trace.steps.push_back(std::move(step));
        }
    } catch (const backend_error& e) {
        result.text = surface_text(provider.vocabulary(), result.generated);
        throw decode_aborted(e.what(), std::move(result));
    }

    if (stopped) {
        result.generated.pop_back();
    }
    result.text = surface_text(provider.vocabulary(), result.generated);
    return result;
}

} // namespace promptcd
