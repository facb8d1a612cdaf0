// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptcd/backend.hpp"
#include "promptcd/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <optional>

namespace promptcd {

using nlohmann::json;

void LogitServerEndpoint::validate() const {
    if (base_url.empty()) {
        throw config_error("logit server: base_url must be set");
    }
    if (timeout_ms <= 0) {
        throw config_error("logit server: timeout must be > 0");
    }
    if (retries < 0) {
        throw config_error("logit server: retries must be >= 0");
    }
}

namespace {

class HttpProvider final : public DistributionProvider {
public:
    explicit HttpProvider(LogitServerEndpoint ep)
        : ep_(std::move(ep)), vocab_(fetch_vocab()) {}

    const Vocabulary& vocabulary() const override { return vocab_; }

    std::vector<TokenId> encode(std::string_view text) const override {
        const json reply = post_json("/v1/encode", json{{"text", std::string(text)}});
        std::vector<TokenId> ids;
        try {
            ids = reply.at("ids").get<std::vector<TokenId>>();
        } catch (const json::exception& e) {
            throw protocol_error(std::string("logit server: bad /v1/encode reply: ") + e.what());
        }
        for (TokenId id : ids) {
            if (!vocab_.contains(id)) {
                throw protocol_error("logit server: /v1/encode returned out-of-range id " +
                                     std::to_string(id));
            }
        }
        return ids;
    }

    TokenDistribution next_distribution(std::span<const TokenId> ids) const override {
        const json reply =
            post_json("/v1/logits", json{{"ids", std::vector<TokenId>(ids.begin(), ids.end())}});
        TokenDistribution dist;
        try {
            dist.logits = reply.at("logits").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw protocol_error(std::string("logit server: bad /v1/logits reply: ") + e.what());
        }
        if (dist.logits.size() != vocab_.size()) {
            throw protocol_error("logit server: logits length " +
                                 std::to_string(dist.logits.size()) + " != vocab size " +
                                 std::to_string(vocab_.size()));
        }
        return dist;
    }

private:
    // One client per request keeps concurrent calls independent.
    httplib::Client make_client() const {
        httplib::Client cli(ep_.base_url);
        const auto timeout = std::chrono::milliseconds(ep_.timeout_ms);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        return cli;
    }

    json request_json(const std::string& path,
                      const std::optional<std::string>& body) const {
        std::string last_failure = "no attempt made";
        for (int attempt = 0; attempt <= ep_.retries; ++attempt) {
            httplib::Client cli = make_client();
            httplib::Result res =
                body ? cli.Post(path, *body, "application/json") : cli.Get(path);
            if (!res) {
                last_failure = httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_failure = "HTTP status " + std::to_string(res->status);
                continue;
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw protocol_error("logit server: malformed JSON from " + path + ": " +
                                     e.what());
            }
        }
        throw backend_error("logit server: " + path + " failed after " +
                            std::to_string(ep_.retries + 1) + " attempts (" + last_failure +
                            ")");
    }

    json post_json(const std::string& path, const json& body) const {
        return request_json(path, body.dump());
    }

    Vocabulary fetch_vocab() const {
        const json reply = request_json("/v1/vocab", std::nullopt);
        std::vector<std::string> tokens;
        try {
            tokens = reply.at("tokens").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw protocol_error(std::string("logit server: bad /v1/vocab reply: ") + e.what());
        }
        if (tokens.size() < 2) {
            throw protocol_error("logit server: vocabulary too small");
        }
        return Vocabulary(std::move(tokens));
    }

    LogitServerEndpoint ep_;
    Vocabulary vocab_;
};

} // namespace

std::unique_ptr<DistributionProvider> http_provider(const LogitServerEndpoint& ep) {
    ep.validate();
    return std::make_unique<HttpProvider>(ep);
}

} // namespace promptcd
