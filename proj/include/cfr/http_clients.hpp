// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "cfr/clients.hpp"

namespace cfr {

/// Content-addressed response cache: one {request_hash}.json file per request.
/// The hash covers the endpoint and the canonical (key-sorted) request body.
/// Corrupted entries are reported and treated as misses.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    static std::string request_hash(std::string_view endpoint, const nlohmann::json& request);

    std::optional<std::string> get(std::string_view endpoint, const nlohmann::json& request) const;
    void put(std::string_view endpoint, const nlohmann::json& request, std::string_view response);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path entry_path(const std::string& hash) const;
    std::mutex& stripe(const std::string& hash) const;

    std::filesystem::path dir_;
    mutable std::array<std::mutex, 16> stripes_;
};

struct HttpOptions {
    std::string base_url;  // e.g. "http://127.0.0.1:8080"
    std::string bearer_token;
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    int parallelism = 8;
    std::shared_ptr<ResponseCache> cache;  // optional

    /// base_url from CFR_PROVIDER_URL and token from CFR_PROVIDER_TOKEN.
    static HttpOptions from_env();
};

/// POSTs JSON with bounded retries (connection errors, 429 and 5xx are retried
/// with exponential backoff) and a cap on in-flight requests.
class HttpTransport {
public:
    explicit HttpTransport(HttpOptions options);
    ~HttpTransport();

    nlohmann::json post(const std::string& endpoint, const nlohmann::json& body);

    std::size_t requests_sent() const { return sent_.load(); }
    const HttpOptions& options() const { return options_; }

private:
    std::string raw_post(const std::string& endpoint, const std::string& payload);

    HttpOptions options_;
    std::counting_semaphore<1024> inflight_;
    std::atomic<std::size_t> sent_{0};
};

/// POST /embed {texts:[...]} -> {embeddings:[[...]], dim}
class HttpEmbeddingClient final : public EmbeddingClient {
public:
    HttpEmbeddingClient(std::shared_ptr<HttpTransport> transport, std::size_t max_batch = 32,
                        std::string model = "remote");
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string model_name() const override { return model_; }

private:
    std::shared_ptr<HttpTransport> transport_;
    std::size_t max_batch_;
    std::string model_;
    std::mutex mu_;
    std::size_t dim_ = 0;
};

/// The /judge/* and /generate/synthetic endpoints.
class HttpJudgeClient final : public JudgeClient {
public:
    explicit HttpJudgeClient(std::shared_ptr<HttpTransport> transport);

    JudgeVerdict judge_relevance(const std::string& claim, const std::string& question,
                                 const std::string& passage) override;
    ReaderAnswer read_answer(const std::string& claim, const std::string& question,
                             const std::string& passage) override;
    std::string shorten_answer(const std::string& answer) override;
    EquivalenceScore score_equivalence(const std::string& gold_short,
                                       const std::string& candidate_short,
                                       const std::string& question) override;
    VeracityLabel judge_veracity(const std::string& claim, const std::string& evidence,
                                 const std::vector<std::string>& label_set) override;
    SyntheticSet generate_synthetic(const std::string& claim, const std::string& question) override;

private:
    std::shared_ptr<HttpTransport> transport_;
};

// Response decoders, exposed for direct testing. Each throws ProtocolError.
std::vector<EmbeddingVector> decode_embed_response(const nlohmann::json& body, std::size_t expected,
                                                   const std::string& model);
JudgeVerdict decode_relevance_response(const nlohmann::json& body);
SyntheticSet decode_synthetic_response(const nlohmann::json& body, const std::string& claim,
                                       const std::string& question);

}  // namespace cfr
