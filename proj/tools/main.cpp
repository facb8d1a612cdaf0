// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0
//
// promptcd: contrastive decoding over polarity prompts, knowledge-token
// probing, conflict benchmarking, and attention-guided image carving.
//
// Exit codes: 0 success, 2 usage/config error, 3 backend/protocol error.

#include "promptcd/backend.hpp"
#include "promptcd/contrastive.hpp"
#include "promptcd/errors.hpp"
#include "promptcd/image.hpp"
#include "promptcd/probe.hpp"
#include "promptcd/trace_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

using namespace promptcd;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

std::unique_ptr<DistributionProvider> make_provider(const std::string& backend, int retries) {
    if (backend.rfind("table:", 0) == 0) {
        return table_provider(load_table_spec(backend.substr(6)));
    }
    std::string url;
    if (backend.rfind("http://", 0) == 0 || backend.rfind("https://", 0) == 0) {
        url = backend;
    } else if (backend.rfind("http:", 0) == 0) {
        url = backend.substr(5);
    } else {
        throw config_error("backend must be table:PATH or an http(s) URL, got: " + backend);
    }
    LogitServerEndpoint ep;
    ep.base_url = url;
    ep.retries = retries;
    if (const char* env = std::getenv("PROMPTCD_HTTP_TIMEOUT_MS")) {
        ep.timeout_ms = std::atoi(env);
        if (ep.timeout_ms <= 0) {
            throw config_error("PROMPTCD_HTTP_TIMEOUT_MS must be a positive integer");
        }
    }
    return http_provider(ep);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw config_error("cannot write: " + path);
    }
    out << content;
}

json capture_to_json(const CaptureResult& r) {
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    return json{{"p_cont", opt(r.p_cont)},         {"p_para", opt(r.p_para)},
                {"rank_cont", opt(r.rank_cont)},   {"rank_para", opt(r.rank_para)},
                {"position", opt(r.position)},     {"class", to_string(classify_stubborn(r))}};
}

json metrics_to_json(const BehaviorMetrics& m, std::size_t n, std::size_t stubborn_count) {
    return json{{"con_r", m.con_r},
                {"par_r", m.par_r},
                {"mr", m.mr},
                {"mr_denominator_zero", m.mr_denominator_zero},
                {"n", n},
                {"stubborn_count", stubborn_count}};
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
    std::string backend;
    int retries = 2;
    std::string positive;
    std::string negative;
    std::string question;
    std::string context;
    std::string template_pattern = "{prompt}\n{question}";
    double gamma = 0.5;
    double apc = 0.1;
    bool no_apc = false;
    int max_tokens = 64;
    int max_context = 0;
    bool sample = false;
    std::uint64_t seed = 0;
    std::vector<int> stop;
    bool vanilla = false;
    std::string trace_path;
    std::size_t trace_top = 32;
};

ContrastiveConfig config_from(const DecodeArgs& args) {
    ContrastiveConfig cfg;
    cfg.gamma = args.gamma;
    cfg.apc_ratio = args.apc;
    cfg.apc_enabled = !args.no_apc;
    cfg.max_tokens = args.max_tokens;
    cfg.max_context_tokens = args.max_context;
    cfg.strategy = args.sample ? DecodeStrategy::sample : DecodeStrategy::greedy;
    cfg.seed = args.seed;
    for (int id : args.stop) {
        cfg.stop_tokens.insert(static_cast<TokenId>(id));
    }
    cfg.validate();
    return cfg;
}

int cmd_decode(const DecodeArgs& args) {
    const auto provider = make_provider(args.backend, args.retries);
    const ContrastiveConfig cfg = config_from(args);
    PromptTemplate tmpl;
    tmpl.pattern = args.template_pattern;
    TraceWriteOptions trace_opts;
    trace_opts.top_m = args.trace_top;

    if (args.question.empty()) {
        throw config_error("--question is required");
    }
    if (args.positive.empty()) {
        throw config_error("--positive is required");
    }
    if (!args.vanilla && args.negative.empty()) {
        throw config_error("--negative is required unless --vanilla is set");
    }

    DecodeResult result;
    try {
        if (args.vanilla) {
            result = decode_single(tmpl.render(args.positive, args.question, args.context),
                                   *provider, cfg);
        } else {
            PolarityPromptPair pair{args.positive, args.negative, args.question};
            result = decode(pair, *provider, cfg, tmpl, args.context);
        }
    } catch (const decode_aborted& e) {
        if (!args.trace_path.empty()) {
            save_trace_jsonl(args.trace_path, e.partial.trace, trace_opts);
        }
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    }

    if (!args.trace_path.empty()) {
        save_trace_jsonl(args.trace_path, result.trace, trace_opts);
    }
    std::cout << result.text << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// probe
// ---------------------------------------------------------------------------

struct ProbeArgs {
    std::string backend;
    int retries = 2;
    std::string trace_path;
    std::string dataset_path;
    std::string record_id;
    std::string on = "adjusted";
    std::string out_path;
};

int cmd_probe(const ProbeArgs& args) {
    const auto provider = make_provider(args.backend, args.retries);
    const Vocabulary& vocab = provider->vocabulary();

    std::vector<ConflictRecord> records = load_conflict_records(args.dataset_path);
    if (!args.record_id.empty()) {
        std::erase_if(records,
                      [&](const ConflictRecord& r) { return r.id != args.record_id; });
    }
    if (records.empty()) {
        throw config_error("dataset has no (matching) records");
    }

    const auto parsed = load_traces_jsonl(args.trace_path, vocab.size());
    if (parsed.empty()) {
        throw config_error("trace file has no steps");
    }
    if (parsed.size() != records.size()) {
        throw config_error("trace count " + std::to_string(parsed.size()) +
                           " does not match record count " + std::to_string(records.size()));
    }

    ProbeSource source;
    if (args.on == "adjusted") {
        source = ProbeSource::adjusted;
    } else if (args.on == "positive") {
        source = ProbeSource::positive;
    } else {
        throw config_error("--on must be 'adjusted' or 'positive'");
    }

    const auto decode_fn = [&vocab](TokenId id) { return vocab.token(id); };
    json captures = json::array();
    std::vector<int> ranks;
    std::size_t flipped = 0;
    std::size_t stubborn = 0;
    std::size_t absent = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (parsed[i].truncated) {
            std::cerr << "warning: trace " << i << " stores top-M logits only; "
                      << "ranks below the cut are approximate\n";
        }
        const auto steps = trace_distributions(parsed[i].trace, source);
        const CaptureResult r = capture(steps, decode_fn, records[i].answer_context,
                                        records[i].answer_parametric);
        json entry = capture_to_json(r);
        entry["id"] = records[i].id;
        captures.push_back(std::move(entry));
        if (r.rank_cont) {
            ranks.push_back(*r.rank_cont);
        }
        switch (classify_stubborn(r)) {
        case StubbornClass::flipped:
            ++flipped;
            break;
        case StubbornClass::stubborn:
            ++stubborn;
            break;
        case StubbornClass::absent:
            ++absent;
            break;
        }
    }

    const RankBins bins = bin_ranks(ranks);
    const json report = {
        {"captures", captures},
        {"classes", {{"flipped", flipped}, {"stubborn", stubborn}, {"absent", absent}}},
        {"rank_cont_bins",
         {{"1", bins.rank1}, {"2-5", bins.rank2_5}, {"6-20", bins.rank6_20},
          {">20", bins.rank21_plus}}},
        {"source", args.on},
    };
    const std::string text = report.dump(2);
    if (!args.out_path.empty()) {
        write_text_file(args.out_path, text + "\n");
    }
    std::cout << text << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string backend;
    int retries = 2;
    std::string dataset_path;
    std::string positive = "Answer using only the information given in the context.";
    std::string negative = "Ignore the context and answer from what you already know.";
    std::string template_pattern = "{context}\n{prompt}\n{question}";
    double gamma = 0.5;
    double apc = 0.1;
    bool no_apc = false;
    int max_tokens = 16;
    std::uint64_t seed = 0;
    bool sample = false;
    std::vector<int> stop;
    int jobs = 1;
    std::string out_path;
    std::string traces_path;
    std::string vanilla_traces_path;
};

struct BenchRecordOutcome {
    bool skipped = false;
    std::string skip_reason;
    ResponseHits vanilla_hits;
    ResponseHits promptcd_hits;
    StubbornClass vanilla_class = StubbornClass::absent;
    StubbornClass promptcd_class = StubbornClass::absent;
    DecodeTrace vanilla_trace;
    DecodeTrace promptcd_trace;
    std::string vanilla_text;
    std::string promptcd_text;
};

int cmd_bench(const BenchArgs& args) {
    const auto provider = make_provider(args.backend, args.retries);
    const std::vector<ConflictRecord> records = load_conflict_records(args.dataset_path);
    if (records.empty()) {
        throw config_error("dataset is empty");
    }

    DecodeArgs cfg_args;
    cfg_args.gamma = args.gamma;
    cfg_args.apc = args.apc;
    cfg_args.no_apc = args.no_apc;
    cfg_args.max_tokens = args.max_tokens;
    cfg_args.sample = args.sample;
    cfg_args.seed = args.seed;
    cfg_args.stop = args.stop;
    const ContrastiveConfig cfg = config_from(cfg_args);
    PromptTemplate tmpl;
    tmpl.pattern = args.template_pattern;

    const Vocabulary& vocab = provider->vocabulary();
    const auto decode_fn = [&vocab](TokenId id) { return vocab.token(id); };

    std::vector<BenchRecordOutcome> outcomes(records.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= records.size()) {
                return;
            }
            const ConflictRecord& rec = records[i];
            BenchRecordOutcome& out = outcomes[i];
            try {
                const DecodeResult vanilla = decode_single(
                    tmpl.render(args.positive, rec.question, rec.context), *provider, cfg);
                const PolarityPromptPair pair{args.positive, args.negative, rec.question};
                const DecodeResult steered = decode(pair, *provider, cfg, tmpl, rec.context);

                out.vanilla_hits = score_response(vanilla.text, rec);
                out.promptcd_hits = score_response(steered.text, rec);
                out.vanilla_class = classify_stubborn(
                    capture(trace_distributions(vanilla.trace, ProbeSource::positive),
                            decode_fn, rec.answer_context, rec.answer_parametric));
                out.promptcd_class = classify_stubborn(
                    capture(trace_distributions(steered.trace, ProbeSource::adjusted),
                            decode_fn, rec.answer_context, rec.answer_parametric));
                out.vanilla_trace = vanilla.trace;
                out.promptcd_trace = steered.trace;
                out.vanilla_text = vanilla.text;
                out.promptcd_text = steered.text;
            } catch (const backend_error& e) {
                out.skipped = true;
                out.skip_reason = e.what();
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "record " << rec.id << " skipped: " << e.what() << "\n";
            } catch (...) {
                std::lock_guard<std::mutex> lock(fatal_mutex);
                if (!fatal) {
                    fatal = std::current_exception();
                }
                return;
            }
        }
    };

    const int jobs = std::max(1, args.jobs);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs) - 1);
    for (int j = 1; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }

    std::vector<ResponseHits> vanilla_scored;
    std::vector<ResponseHits> promptcd_scored;
    std::size_t vanilla_stubborn = 0;
    std::size_t promptcd_stubborn = 0;
    std::size_t skipped = 0;
    json per_record = json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const BenchRecordOutcome& out = outcomes[i];
        json entry = {{"id", records[i].id}, {"skipped", out.skipped}};
        if (out.skipped) {
            ++skipped;
            entry["reason"] = out.skip_reason;
        } else {
            vanilla_scored.push_back(out.vanilla_hits);
            promptcd_scored.push_back(out.promptcd_hits);
            vanilla_stubborn += out.vanilla_class == StubbornClass::stubborn ? 1 : 0;
            promptcd_stubborn += out.promptcd_class == StubbornClass::stubborn ? 1 : 0;
            entry["vanilla"] = {{"hits_context", out.vanilla_hits.hits_context},
                                {"hits_parametric", out.vanilla_hits.hits_parametric},
                                {"class", to_string(out.vanilla_class)},
                                {"text", out.vanilla_text}};
            entry["promptcd"] = {{"hits_context", out.promptcd_hits.hits_context},
                                 {"hits_parametric", out.promptcd_hits.hits_parametric},
                                 {"class", to_string(out.promptcd_class)},
                                 {"text", out.promptcd_text}};
        }
        per_record.push_back(std::move(entry));
    }

    json report = {{"n", records.size()},
                   {"scored", vanilla_scored.size()},
                   {"skipped", skipped},
                   {"records", per_record}};
    if (!vanilla_scored.empty()) {
        report["vanilla"] = metrics_to_json(aggregate_metrics(vanilla_scored),
                                            vanilla_scored.size(), vanilla_stubborn);
        report["promptcd"] = metrics_to_json(aggregate_metrics(promptcd_scored),
                                             promptcd_scored.size(), promptcd_stubborn);
    }

    if (!args.traces_path.empty() || !args.vanilla_traces_path.empty()) {
        std::string steered_jsonl;
        std::string vanilla_jsonl;
        for (const BenchRecordOutcome& out : outcomes) {
            if (out.skipped) {
                continue;
            }
            steered_jsonl += trace_to_jsonl(out.promptcd_trace);
            vanilla_jsonl += trace_to_jsonl(out.vanilla_trace);
        }
        if (!args.traces_path.empty()) {
            write_text_file(args.traces_path, steered_jsonl);
        }
        if (!args.vanilla_traces_path.empty()) {
            write_text_file(args.vanilla_traces_path, vanilla_jsonl);
        }
    }

    const std::string text = report.dump(2);
    if (!args.out_path.empty()) {
        write_text_file(args.out_path, text + "\n");
    }
    std::cout << text << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// carve
// ---------------------------------------------------------------------------

struct CarveArgs {
    std::string pos_path;
    std::string neg_path;
    std::string image_path;
    std::string out_path;
    std::string diag_path;
    double epsilon = 1e-6;
    std::string layers = "20:25";
    double p = 0.3;
    int k = 1;
    int pad = 0;
    std::string target;
    std::vector<double> sweep;
    std::string threshold_mode = "proportion";
};

std::pair<int, int> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw config_error("--layers expects lo:hi, got: " + text);
    }
    try {
        return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
    } catch (const std::logic_error&) {
        throw config_error("--layers expects lo:hi, got: " + text);
    }
}

std::pair<int, int> parse_target(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) {
        throw config_error("--target expects WxH, got: " + text);
    }
    try {
        return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    } catch (const std::logic_error&) {
        throw config_error("--target expects WxH, got: " + text);
    }
}

std::string sweep_out_path(const std::string& base, double p) {
    const std::filesystem::path path(base);
    std::ostringstream tag;
    tag << "_p" << p;
    std::filesystem::path out = path.parent_path() / path.stem();
    out += tag.str();
    out += path.extension();
    return out.string();
}

int cmd_carve(const CarveArgs& args) {
    const AttentionStack pos = load_attention(args.pos_path);
    const AttentionStack neg = load_attention(args.neg_path);
    const Image image = load_png(args.image_path);

    const auto [lo, hi] = parse_range(args.layers);
    const FusionSpec fusion = FusionSpec::ramp(lo, hi);
    const bool on_value = args.threshold_mode == "value";
    if (!on_value && args.threshold_mode != "proportion") {
        throw config_error("--threshold-mode must be 'proportion' or 'value'");
    }

    RefineSpec spec;
    spec.epsilon = args.epsilon;
    spec.k_regions = args.k;
    spec.pad = args.pad;
    if (!args.target.empty()) {
        std::tie(spec.target_w, spec.target_h) = parse_target(args.target);
    }

    const std::vector<double> ps = args.sweep.empty() ? std::vector<double>{args.p} : args.sweep;
    json diagnostics = json::array();
    for (const double p : ps) {
        spec.top_p = p;
        const CarveResult result = carve(pos, neg, image, fusion, spec, on_value);
        const std::string out_path =
            args.sweep.empty() ? args.out_path : sweep_out_path(args.out_path, p);
        save_png(out_path, result.image);
        if (result.diag.empty_mask_fallback) {
            std::cerr << "warning: selection mask was empty; wrote the resized original\n";
        }
        diagnostics.push_back(json::parse(diagnostics_to_json(result.diag)));
        std::cout << out_path << "\n";
    }

    if (!args.diag_path.empty()) {
        const json doc = args.sweep.empty() ? diagnostics.front() : diagnostics;
        write_text_file(args.diag_path, doc.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polarity-prompt contrastive decoding toolkit"};
    app.require_subcommand(1);

    DecodeArgs decode_args;
    CLI::App* decode_cmd = app.add_subcommand("decode", "contrastive generation");
    decode_cmd->add_option("--backend", decode_args.backend, "table:PATH or http(s) URL")
        ->required();
    decode_cmd->add_option("--retries", decode_args.retries, "HTTP retry count");
    decode_cmd->add_option("--positive", decode_args.positive, "positive polarity prompt");
    decode_cmd->add_option("--negative", decode_args.negative, "negative polarity prompt");
    decode_cmd->add_option("--question", decode_args.question, "question text");
    decode_cmd->add_option("--context", decode_args.context, "optional context passage");
    decode_cmd->add_option("--template", decode_args.template_pattern,
                           "prompt layout with {prompt}/{question}/{context}");
    decode_cmd->add_option("--gamma", decode_args.gamma, "contrastive coefficient");
    decode_cmd->add_option("--apc", decode_args.apc, "plausibility ratio in (0,1]");
    decode_cmd->add_flag("--no-apc", decode_args.no_apc, "disable the plausibility mask");
    decode_cmd->add_option("--max-tokens", decode_args.max_tokens, "generation budget");
    decode_cmd->add_option("--max-context", decode_args.max_context,
                           "fail fast when prompts exceed this token budget (0 = off)");
    decode_cmd->add_flag("--sample", decode_args.sample, "categorical sampling (default greedy)");
    decode_cmd->add_option("--seed", decode_args.seed, "sampling seed");
    decode_cmd->add_option("--stop", decode_args.stop, "stop token ids");
    decode_cmd->add_flag("--vanilla", decode_args.vanilla, "positive-only decoding, no contrast");
    decode_cmd->add_option("--trace", decode_args.trace_path, "write the decode trace (JSONL)");
    decode_cmd->add_option("--trace-top", decode_args.trace_top,
                           "top-M logits per step for large vocabularies");

    ProbeArgs probe_args;
    CLI::App* probe_cmd = app.add_subcommand("probe", "knowledge-token capture over traces");
    probe_cmd->add_option("--backend", probe_args.backend, "vocabulary source")->required();
    probe_cmd->add_option("--retries", probe_args.retries, "HTTP retry count");
    probe_cmd->add_option("--trace", probe_args.trace_path, "trace JSONL file")->required();
    probe_cmd->add_option("--dataset", probe_args.dataset_path, "conflict records JSONL")
        ->required();
    probe_cmd->add_option("--record", probe_args.record_id, "restrict to one record id");
    probe_cmd->add_option("--on", probe_args.on, "scan 'adjusted' (default) or 'positive'");
    probe_cmd->add_option("--out", probe_args.out_path, "also write the report here");

    BenchArgs bench_args;
    CLI::App* bench_cmd = app.add_subcommand("bench", "vanilla vs contrastive over a dataset");
    bench_cmd->add_option("--backend", bench_args.backend, "table:PATH or http(s) URL")
        ->required();
    bench_cmd->add_option("--retries", bench_args.retries, "HTTP retry count");
    bench_cmd->add_option("--dataset", bench_args.dataset_path, "conflict records JSONL")
        ->required();
    bench_cmd->add_option("--positive", bench_args.positive, "positive polarity prompt");
    bench_cmd->add_option("--negative", bench_args.negative, "negative polarity prompt");
    bench_cmd->add_option("--template", bench_args.template_pattern, "prompt layout");
    bench_cmd->add_option("--gamma", bench_args.gamma, "contrastive coefficient");
    bench_cmd->add_option("--apc", bench_args.apc, "plausibility ratio");
    bench_cmd->add_flag("--no-apc", bench_args.no_apc, "disable the plausibility mask");
    bench_cmd->add_option("--max-tokens", bench_args.max_tokens, "generation budget per record");
    bench_cmd->add_option("--seed", bench_args.seed, "sampling seed");
    bench_cmd->add_flag("--sample", bench_args.sample, "categorical sampling");
    bench_cmd->add_option("--stop", bench_args.stop, "stop token ids");
    bench_cmd->add_option("--jobs", bench_args.jobs, "concurrent records");
    bench_cmd->add_option("--out", bench_args.out_path, "report path (also printed)");
    bench_cmd->add_option("--traces", bench_args.traces_path, "write contrastive traces");
    bench_cmd->add_option("--vanilla-traces", bench_args.vanilla_traces_path,
                          "write vanilla traces");

    CarveArgs carve_args;
    CLI::App* carve_cmd = app.add_subcommand("carve", "attention-guided image refinement");
    carve_cmd->add_option("--pos", carve_args.pos_path, "positive attention file")->required();
    carve_cmd->add_option("--neg", carve_args.neg_path, "negative attention file")->required();
    carve_cmd->add_option("--image", carve_args.image_path, "input PNG")->required();
    carve_cmd->add_option("--out", carve_args.out_path, "output PNG")->required();
    carve_cmd->add_option("--diag", carve_args.diag_path, "diagnostics JSON path");
    carve_cmd->add_option("--epsilon", carve_args.epsilon, "contrast regularizer");
    carve_cmd->add_option("--layers", carve_args.layers, "fusion range lo:hi");
    carve_cmd->add_option("--p", carve_args.p, "retained proportion in (0,1]");
    carve_cmd->add_option("--k", carve_args.k, "regions to keep");
    carve_cmd->add_option("--pad", carve_args.pad, "crop padding in pixels");
    carve_cmd->add_option("--target", carve_args.target, "output size WxH (default: input size)");
    carve_cmd->add_option("--sweep", carve_args.sweep, "list of p values, one output each")
        ->delimiter(',');
    carve_cmd->add_option("--threshold-mode", carve_args.threshold_mode,
                          "'proportion' (default) or 'value'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (decode_cmd->parsed()) {
            return cmd_decode(decode_args);
        }
        if (probe_cmd->parsed()) {
            return cmd_probe(probe_args);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bench_args);
        }
        if (carve_cmd->parsed()) {
            return cmd_carve(carve_args);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const backend_error& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
