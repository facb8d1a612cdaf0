// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/backend.hpp"
#include "promptcd/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace promptcd {

using nlohmann::json;

void TableModelSpec::validate() const {
    if (vocab.size() < 2) {
        throw config_error("table spec: vocab needs at least 2 tokens");
    }
    auto check_steps = [this](const std::vector<std::vector<double>>& steps,
                              const std::string& where) {
        if (steps.empty()) {
            throw config_error("table spec: " + where + " has no step vectors");
        }
        for (const auto& step : steps) {
            if (step.size() != vocab.size()) {
                throw config_error("table spec: " + where + " logit vector length " +
                                   std::to_string(step.size()) + " != vocab size " +
                                   std::to_string(vocab.size()));
            }
        }
    };
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].prompt_contains.empty()) {
            throw config_error("table spec: rule " + std::to_string(i) + " has empty marker");
        }
        check_steps(rules[i].steps, "rule " + std::to_string(i));
    }
    check_steps(default_steps, "default_steps");
}

TableModelSpec parse_table_spec(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("table spec: invalid JSON: ") + e.what());
    }
    TableModelSpec spec;
    try {
        spec.vocab = doc.at("vocab").get<std::vector<std::string>>();
        for (const auto& r : doc.value("rules", json::array())) {
            TableRule rule;
            rule.prompt_contains = r.at("match").at("prompt_contains").get<std::string>();
            rule.steps = r.at("steps").get<std::vector<std::vector<double>>>();
            spec.rules.push_back(std::move(rule));
        }
        spec.default_steps = doc.at("default_steps").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw config_error(std::string("table spec: missing or mistyped field: ") + e.what());
    }
    spec.validate();
    return spec;
}

TableModelSpec load_table_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open table spec: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_table_spec(buf.str());
}

std::string table_spec_to_json(const TableModelSpec& spec) {
    json rules = json::array();
    for (const auto& r : spec.rules) {
        rules.push_back({{"match", {{"prompt_contains", r.prompt_contains}}},
                         {"steps", r.steps}});
    }
    json doc = {{"vocab", spec.vocab}, {"rules", rules}, {"default_steps", spec.default_steps}};
    return doc.dump(2);
}

namespace {

class TableProvider final : public DistributionProvider {
public:
    explicit TableProvider(TableModelSpec spec)
        : spec_(std::move(spec)), vocab_(spec_.vocab) {}

    const Vocabulary& vocabulary() const override { return vocab_; }

    std::vector<TokenId> encode(std::string_view text) const override {
        std::vector<TokenId> ids;
        std::size_t pos = 0;
        while (pos < text.size()) {
            TokenId best = -1;
            std::size_t best_len = 0;
            for (std::size_t id = 0; id < spec_.vocab.size(); ++id) {
                const std::string& tok = spec_.vocab[id];
                if (tok.empty() || tok.size() <= best_len) {
                    continue; // lowest id wins among equal-length surfaces
                }
                if (text.compare(pos, tok.size(), tok) == 0) {
                    best = static_cast<TokenId>(id);
                    best_len = tok.size();
                }
            }
            if (best < 0) {
                ids.push_back(0); // reserved id for unknown input
                ++pos;
            } else {
                ids.push_back(best);
                pos += best_len;
            }
        }
        return ids;
    }

    TokenDistribution next_distribution(std::span<const TokenId> ids) const override {
        for (const TokenId id : ids) {
            if (!vocab_.contains(id)) {
                throw backend_error("table provider: token id out of range");
            }
        }
        for (const TableRule& rule : spec_.rules) {
            std::size_t marker_end = 0;
            if (match_prefix(ids, rule.prompt_contains, marker_end)) {
                const std::size_t step = ids.size() - marker_end;
                return pick(rule.steps, step);
            }
        }
        return pick(spec_.default_steps, ids.size());
    }

private:
    // Shortest token prefix whose decoded text contains the marker; its
    // length anchors step counting.
    bool match_prefix(std::span<const TokenId> ids, const std::string& marker,
                      std::size_t& marker_end) const {
        std::string text;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            text += vocab_.token(ids[i]);
            if (text.find(marker) != std::string::npos) {
                marker_end = i + 1;
                return true;
            }
        }
        return false;
    }

    static TokenDistribution pick(const std::vector<std::vector<double>>& steps,
                                  std::size_t index) {
        const std::size_t clamped = std::min(index, steps.size() - 1);
        return TokenDistribution{steps[clamped]};
    }

    TableModelSpec spec_;
    Vocabulary vocab_;
};

} // namespace

std::unique_ptr<DistributionProvider> table_provider(TableModelSpec spec) {
    spec.validate();
    return std::make_unique<TableProvider>(std::move(spec));
}

TableModelSpec conflict_scenario(TokenId cont_token,
                                 TokenId para_token,
                                 double pos_margin,
                                 double neg_margin,
                                 std::vector<std::string> vocab) {
    if (cont_token == para_token) {
        throw config_error("conflict_scenario: tokens must be distinct");
    }
    if (cont_token < 0 || para_token < 0 ||
        static_cast<std::size_t>(cont_token) >= vocab.size() ||
        static_cast<std::size_t>(para_token) >= vocab.size()) {
        throw config_error("conflict_scenario: token id out of vocab range");
    }
    // The marker surfaces must be encodable for rule matching to see them.
    for (const char* marker : {kConflictPositiveMarker, kConflictNegativeMarker}) {
        if (std::find(vocab.begin(), vocab.end(), marker) == vocab.end()) {
            vocab.emplace_back(marker);
        }
    }

    const std::size_t vocab_size = vocab.size();
    auto step_for = [&](double margin) {
        const double floor = std::min(0.0, margin) - 3.0;
        std::vector<double> logits(vocab_size, floor);
        logits[static_cast<std::size_t>(cont_token)] = 0.0;
        logits[static_cast<std::size_t>(para_token)] = margin;
        return std::vector<std::vector<double>>{logits};
    };

    TableModelSpec spec;
    spec.rules.push_back({kConflictPositiveMarker, step_for(pos_margin)});
    spec.rules.push_back({kConflictNegativeMarker, step_for(neg_margin)});
    spec.default_steps = step_for(pos_margin);
    spec.vocab = std::move(vocab);
    return spec;
}

PolarityPromptPair conflict_prompts(std::string question) {
    PolarityPromptPair pair;
    pair.positive = std::string("answer from the given context ") + kConflictPositiveMarker;
    pair.negative = std::string("answer from prior knowledge ") + kConflictNegativeMarker;
    pair.question = std::move(question);
    return pair;
}

} // namespace promptcd
