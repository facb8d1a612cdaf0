// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/trace_io.hpp"

#include "promptcd/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace promptcd {

using nlohmann::json;

namespace {

constexpr double kMissingLogitFiller = -1e30;

json logits_field(const TokenDistribution& dist, const TraceWriteOptions& opts) {
    if (dist.size() <= opts.full_vector_max_vocab) {
        return json(dist.logits);
    }
    std::vector<TokenId> order(dist.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t m = std::min(opts.top_m, dist.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m),
                      order.end(), [&dist](TokenId a, TokenId b) {
                          const double va = dist.logits[static_cast<std::size_t>(a)];
                          const double vb = dist.logits[static_cast<std::size_t>(b)];
                          return va != vb ? va > vb : a < b;
                      });
    json pairs = json::array();
    for (std::size_t i = 0; i < m; ++i) {
        pairs.push_back({order[i], dist.logits[static_cast<std::size_t>(order[i])]});
    }
    return pairs;
}

TokenDistribution parse_logits_field(const json& field, std::size_t vocab_size,
                                     bool& truncated) {
    TokenDistribution dist;
    if (!field.is_array()) {
        throw config_error("trace: logits field must be an array");
    }
    if (!field.empty() && field.front().is_array()) { // top-M [id, logit] pairs
        truncated = true;
        dist.logits.assign(vocab_size, kMissingLogitFiller);
        for (const auto& pair : field) {
            const auto id = pair.at(0).get<std::size_t>();
            if (id >= vocab_size) {
                throw config_error("trace: token id out of range");
            }
            dist.logits[id] = pair.at(1).get<double>();
        }
        return dist;
    }
    dist.logits = field.get<std::vector<double>>();
    if (dist.logits.size() != vocab_size) {
        throw config_error("trace: logit vector length " + std::to_string(dist.logits.size()) +
                           " != vocab size " + std::to_string(vocab_size));
    }
    return dist;
}

} // namespace

std::string trace_to_jsonl(const DecodeTrace& trace, const TraceWriteOptions& opts) {
    std::ostringstream out;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const TraceStep& step = trace.steps[i];
        json adjusted = json::object();
        for (std::size_t t = 0; t < step.adjusted.size(); ++t) {
            if (step.adjusted[t] > 0.0) {
                adjusted[std::to_string(t)] = step.adjusted[t];
            }
        }
        json line = {{"step", i},
                     {"selected", step.selected},
                     {"head", step.head},
                     {"pos_logits", logits_field(step.pos, opts)},
                     {"adjusted", adjusted}};
        if (!step.neg.logits.empty()) {
            line["neg_logits"] = logits_field(step.neg, opts);
        }
        out << line.dump() << '\n';
    }
    return out.str();
}

void save_trace_jsonl(const std::string& path,
                      const DecodeTrace& trace,
                      const TraceWriteOptions& opts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw config_error("cannot write trace: " + path);
    }
    out << trace_to_jsonl(trace, opts);
}

void append_trace_jsonl(const std::string& path,
                        const DecodeTrace& trace,
                        const TraceWriteOptions& opts) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw config_error("cannot write trace: " + path);
    }
    out << trace_to_jsonl(trace, opts);
}

std::vector<ParsedTrace> parse_traces_jsonl(std::string_view text, std::size_t vocab_size) {
    if (vocab_size == 0) {
        throw config_error("trace parsing needs a vocabulary size");
    }
    std::vector<ParsedTrace> traces;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw config_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            const auto step_idx = doc.at("step").get<std::size_t>();
            if (step_idx == 0 || traces.empty()) {
                traces.emplace_back();
            }
            ParsedTrace& current = traces.back();
            TraceStep step;
            step.selected = doc.at("selected").get<TokenId>();
            step.head = doc.at("head").get<std::vector<TokenId>>();
            step.pos = parse_logits_field(doc.at("pos_logits"), vocab_size, current.truncated);
            if (doc.contains("neg_logits")) {
                step.neg =
                    parse_logits_field(doc.at("neg_logits"), vocab_size, current.truncated);
            }
            step.adjusted.assign(vocab_size, 0.0);
            for (const auto& [key, value] : doc.at("adjusted").items()) {
                const std::size_t id = std::stoul(key);
                if (id >= vocab_size) {
                    throw config_error("trace: adjusted token id out of range");
                }
                step.adjusted[id] = value.get<double>();
            }
            current.trace.steps.push_back(std::move(step));
        } catch (const json::exception& e) {
            throw config_error("trace line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::logic_error& e) {
            throw config_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return traces;
}

std::vector<ParsedTrace> load_traces_jsonl(const std::string& path, std::size_t vocab_size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open trace: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_traces_jsonl(buf.str(), vocab_size);
}

} // namespace promptcd
