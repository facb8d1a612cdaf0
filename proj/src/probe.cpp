// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/probe.hpp"

#include "promptcd/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace promptcd {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) != 0;
    };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

Membership common_membership(std::string_view token_string,
                             std::string_view answer_cont,
                             std::string_view answer_para) {
    const std::string_view t = trim(token_string);
    if (t.empty()) {
        return Membership::neither;
    }
    const bool in_cont = contains(answer_cont, t);
    const bool in_para = contains(answer_para, t);
    if (in_cont && in_para) {
        return Membership::common;
    }
    if (in_cont) {
        return Membership::cont_only;
    }
    if (in_para) {
        return Membership::para_only;
    }
    return Membership::neither;
}

CaptureResult capture(std::span<const TokenDistribution> steps,
                      const std::function<std::string(TokenId)>& decode_token,
                      std::string_view answer_cont,
                      std::string_view answer_para) {
    CaptureResult result;
    // Memberships depend only on the token id; cache across steps.
    std::unordered_map<TokenId, Membership> memo;
    auto membership = [&](TokenId id) {
        auto it = memo.find(id);
        if (it != memo.end()) {
            return it->second;
        }
        const Membership m = common_membership(decode_token(id), answer_cont, answer_para);
        memo.emplace(id, m);
        return m;
    };

    for (std::size_t step = 0; step < steps.size(); ++step) {
        const TokenDistribution& dist = steps[step];
        if (dist.logits.empty()) {
            continue;
        }
        const Membership top = membership(argmax(dist));
        if (top == Membership::neither) {
            continue; // greedy token touches no answer
        }

        std::vector<TokenId> order(dist.logits.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&dist](TokenId a, TokenId b) {
            return dist.logits[static_cast<std::size_t>(a)] >
                   dist.logits[static_cast<std::size_t>(b)];
        });

        for (TokenId id : order) {
            const Membership m = membership(id);
            if (m == Membership::neither) {
                continue;
            }
            if (m == Membership::common && !result.p_cont && !result.p_para) {
                break; // shared token on top before any capture: step is inconclusive
            }
            const bool in_cont = m == Membership::common || m == Membership::cont_only;
            const bool in_para = m == Membership::common || m == Membership::para_only;
            if (in_cont && !result.p_cont) {
                result.p_cont = dist.logits[static_cast<std::size_t>(id)];
                result.rank_cont = rank_of(dist, id);
                if (!result.position) {
                    result.position = step;
                }
            }
            if (in_para && !result.p_para) {
                result.p_para = dist.logits[static_cast<std::size_t>(id)];
                result.rank_para = rank_of(dist, id);
                if (!result.position) {
                    result.position = step;
                }
            }
            if (result.p_cont && result.p_para) {
                return result;
            }
        }
    }
    return result;
}

StubbornClass classify_stubborn(const CaptureResult& r) {
    if (r.rank_cont && *r.rank_cont == 1) {
        return StubbornClass::flipped;
    }
    if (r.rank_cont && *r.rank_cont > 1) {
        return StubbornClass::stubborn;
    }
    return StubbornClass::absent;
}

std::string to_string(StubbornClass c) {
    switch (c) {
    case StubbornClass::flipped:
        return "flipped";
    case StubbornClass::stubborn:
        return "stubborn";
    case StubbornClass::absent:
        return "absent";
    }
    return "absent";
}

void ConflictRecord::validate() const {
    if (answer_context.empty() || answer_parametric.empty()) {
        throw config_error("conflict record " + id + ": answers must be nonempty");
    }
    if (answer_context == answer_parametric) {
        throw config_error("conflict record " + id + ": answers must be distinct");
    }
}

std::vector<ConflictRecord> parse_conflict_records(std::string_view jsonl_text) {
    std::vector<ConflictRecord> records;
    std::istringstream in{std::string(jsonl_text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw config_error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        ConflictRecord rec;
        try {
            if (doc.contains("id")) {
                rec.id = doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump();
            } else {
                rec.id = std::to_string(line_no);
            }
            rec.question = doc.at("question").get<std::string>();
            rec.context = doc.value("context", std::string{});
            rec.answer_context = doc.at("answer_context").get<std::string>();
            rec.answer_parametric = doc.at("answer_parametric").get<std::string>();
        } catch (const json::exception& e) {
            throw config_error("dataset line " + std::to_string(line_no) +
                               ": missing field: " + e.what());
        }
        rec.validate();
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<ConflictRecord> load_conflict_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open dataset: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_conflict_records(buf.str());
}

ResponseHits score_response(std::string_view output_text, const ConflictRecord& record) {
    const std::string out = lower(output_text);
    ResponseHits hits;
    hits.hits_context = contains(out, lower(trim(record.answer_context)));
    hits.hits_parametric = contains(out, lower(trim(record.answer_parametric)));
    return hits;
}

double memorization_ratio(double par_r, double con_r) {
    const double denom = par_r + con_r;
    if (denom <= 0.0) {
        return 0.0;
    }
    return par_r / denom;
}

BehaviorMetrics aggregate_metrics(std::span<const ResponseHits> scored) {
    if (scored.empty()) {
        throw std::invalid_argument("aggregate_metrics: empty list");
    }
    BehaviorMetrics m;
    std::size_t cont = 0;
    std::size_t para = 0;
    for (const ResponseHits& h : scored) {
        cont += h.hits_context ? 1 : 0;
        para += h.hits_parametric ? 1 : 0;
    }
    m.con_r = static_cast<double>(cont) / static_cast<double>(scored.size());
    m.par_r = static_cast<double>(para) / static_cast<double>(scored.size());
    m.mr_denominator_zero = (m.con_r + m.par_r) <= 0.0;
    m.mr = memorization_ratio(m.par_r, m.con_r);
    return m;
}

RankBins bin_ranks(std::span<const int> ranks) {
    RankBins bins;
    for (int r : ranks) {
        if (r <= 1) {
            ++bins.rank1;
        } else if (r <= 5) {
            ++bins.rank2_5;
        } else if (r <= 20) {
            ++bins.rank6_20;
        } else {
            ++bins.rank21_plus;
        }
    }
    return bins;
}

std::vector<TokenDistribution> trace_distributions(const DecodeTrace& trace, ProbeSource source) {
    std::vector<TokenDistribution> out;
    out.reserve(trace.steps.size());
    for (const TraceStep& step : trace.steps) {
        if (source == ProbeSource::positive) {
            out.push_back(step.pos);
        } else {
            out.push_back(TokenDistribution{step.adjusted});
        }
    }
    return out;
}

} // namespace promptcd
