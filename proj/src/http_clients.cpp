// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "cfr/http_clients.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "cfr/error.hpp"
#include "cfr/io.hpp"
#include "cfr/log.hpp"
#include "cfr/prompts.hpp"
#include "cfr/text.hpp"

namespace cfr {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string());
}

std::string ResponseCache::request_hash(std::string_view endpoint, const json& request) {
    std::string material(endpoint);
    material.push_back('\n');
    material += request.dump();
    return sha256_hex(material);
}

std::filesystem::path ResponseCache::entry_path(const std::string& hash) const {
    return dir_ / (hash + ".json");
}

std::mutex& ResponseCache::stripe(const std::string& hash) const {
    return stripes_[static_cast<std::size_t>(fnv1a64(hash) % stripes_.size())];
}

std::optional<std::string> ResponseCache::get(std::string_view endpoint, const json& request) const {
    const auto hash = request_hash(endpoint, request);
    const auto path = entry_path(hash);
    std::string bytes;
    {
        std::lock_guard lock(stripe(hash));
        if (!std::filesystem::exists(path)) return std::nullopt;
        try {
            bytes = read_file(path);
        } catch (const IoError&) {
            log_warn("cache entry " + path.string() + " unreadable; treating as miss");
            return std::nullopt;
        }
    }
    try {
        const auto entry = json::parse(bytes);
        if (entry.at("request_hash").get<std::string>() != hash ||
            entry.at("endpoint").get<std::string>() != endpoint) {
            throw std::runtime_error("key mismatch");
        }
        return entry.at("response").get<std::string>();
    } catch (const std::exception& e) {
        log_warn("cache entry " + path.string() + " corrupted (" + e.what() + "); treating as miss");
        return std::nullopt;
    }
}

void ResponseCache::put(std::string_view endpoint, const json& request, std::string_view response) {
    const auto hash = request_hash(endpoint, request);
    json entry;
    entry["request_hash"] = hash;
    entry["endpoint"] = std::string(endpoint);
    entry["response"] = std::string(response);
    entry["created_at"] = static_cast<std::int64_t>(std::time(nullptr));
    std::lock_guard lock(stripe(hash));
    write_file_atomic(entry_path(hash), entry.dump());
}

// ---------------------------------------------------------------------------
// HttpTransport

HttpOptions HttpOptions::from_env() {
    HttpOptions o;
    if (const char* url = std::getenv("CFR_PROVIDER_URL")) o.base_url = url;
    if (const char* tok = std::getenv("CFR_PROVIDER_TOKEN")) o.bearer_token = tok;
    return o;
}

HttpTransport::HttpTransport(HttpOptions options)
    : options_(std::move(options)), inflight_(std::clamp(options_.parallelism, 1, 1024)) {
    if (options_.base_url.empty()) throw ConfigError("provider base URL is empty");
    if (options_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

HttpTransport::~HttpTransport() = default;

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing '/'
};

SplitUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    SplitUrl out{url, ""};
    if (path != std::string::npos) {
        out.origin = url.substr(0, path);
        out.prefix = url.substr(path);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

}  // namespace

std::string HttpTransport::raw_post(const std::string& endpoint, const std::string& payload) {
    const auto url = split_url(options_.base_url);
    auto backoff = options_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        httplib::Client cli(url.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_write_timeout(secs.count(), usecs.count());
        if (!options_.bearer_token.empty()) cli.set_bearer_token_auth(options_.bearer_token);

        ++sent_;
        auto res = cli.Post(url.prefix + endpoint, payload, "application/json");
        bool retryable = true;
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else if (res->status >= 200 && res->status < 300) {
            return res->body;
        } else {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            retryable = res->status == 429 || res->status >= 500;
        }
        if (!retryable) throw TransportError(endpoint + " " + last_error, false);
        if (attempt < options_.max_attempts) {
            log_warn(endpoint + " attempt " + std::to_string(attempt) + " failed (" + last_error +
                     "); retrying");
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw TransportError(endpoint + " failed after " + std::to_string(options_.max_attempts) +
                             " attempts: " + last_error,
                         true);
}

json HttpTransport::post(const std::string& endpoint, const json& body) {
    if (options_.cache) {
        if (auto hit = options_.cache->get(endpoint, body)) {
            try {
                return json::parse(*hit);
            } catch (const json::parse_error&) {
                log_warn("cached response for " + endpoint + " is not JSON; refetching");
            }
        }
    }
    std::string response;
    {
        inflight_.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{inflight_};
        response = raw_post(endpoint, body.dump());
    }
    json parsed;
    try {
        parsed = json::parse(response);
    } catch (const json::parse_error&) {
        throw ProtocolError(endpoint + " returned non-JSON body", response);
    }
    if (!parsed.is_object()) throw ProtocolError(endpoint + " returned a non-object", response);
    if (options_.cache) options_.cache->put(endpoint, body, response);
    return parsed;
}

// ---------------------------------------------------------------------------
// Decoders

namespace {

const json& field(const json& body, const char* key, const char* endpoint) {
    if (!body.is_object() || !body.contains(key)) {
        throw ProtocolError(std::string(endpoint) + " response missing '" + key + "'", body.dump());
    }
    return body.at(key);
}

std::string string_field(const json& body, const char* key, const char* endpoint) {
    const auto& v = field(body, key, endpoint);
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw ProtocolError(std::string(endpoint) + " field '" + key + "' must be a non-empty string",
                            body.dump());
    }
    return v.get<std::string>();
}

}  // namespace

std::vector<EmbeddingVector> decode_embed_response(const json& body, std::size_t expected,
                                                   const std::string& model) {
    const auto& embs = field(body, "embeddings", "/embed");
    if (!embs.is_array() || embs.size() != expected) {
        throw ProtocolError("/embed returned the wrong number of embeddings", body.dump());
    }
    std::size_t dim = 0;
    if (body.contains("dim")) {
        if (!body["dim"].is_number_unsigned() && !body["dim"].is_number_integer()) {
            throw ProtocolError("/embed 'dim' must be an integer", body.dump());
        }
        dim = body["dim"].get<std::size_t>();
    }
    std::vector<EmbeddingVector> out;
    out.reserve(expected);
    for (const auto& row : embs) {
        if (!row.is_array() || row.empty()) throw ProtocolError("/embed row is not an array", body.dump());
        EmbeddingVector v{{}, model};
        v.values.reserve(row.size());
        for (const auto& x : row) {
            if (!x.is_number()) throw ProtocolError("/embed entry is not a number", body.dump());
            const double d = x.get<double>();
            if (!std::isfinite(d)) throw ProtocolError("/embed entry is not finite", body.dump());
            v.values.push_back(d);
        }
        if (dim == 0) dim = v.values.size();
        if (v.values.size() != dim) throw ProtocolError("/embed rows disagree on dimension", body.dump());
        out.push_back(std::move(v));
    }
    return out;
}

JudgeVerdict decode_relevance_response(const json& body) {
    const auto& v = field(body, "relevant", "/judge/relevance");
    if (v.is_boolean()) return JudgeVerdict{v.get<bool>(), v.get<bool>() ? "Yes" : "No"};
    if (v.is_string()) {
        const bool r = parse_yes_no(v.get<std::string>());
        return JudgeVerdict{r, r ? "Yes" : "No"};
    }
    throw ProtocolError("/judge/relevance 'relevant' must be boolean or Yes/No", body.dump());
}

SyntheticSet decode_synthetic_response(const json& body, const std::string& claim,
                                       const std::string& question) {
    constexpr const char* ep = "/generate/synthetic";
    SyntheticSet s;
    s.claim = claim;
    s.question = question;
    s.positive = string_field(body, "positive", ep);
    s.hard_negative = string_field(body, "hard_negative", ep);
    s.explanation = string_field(body, "explanation", ep);
    const auto& alts = field(body, "alt_questions", ep);
    if (!alts.is_array()) throw ProtocolError("/generate/synthetic 'alt_questions' must be an array", body.dump());
    for (const auto& a : alts) {
        s.alt_negatives.push_back(
            AltNegative{string_field(a, "question", ep), string_field(a, "negative", ep)});
    }
    return s;
}

// ---------------------------------------------------------------------------

HttpEmbeddingClient::HttpEmbeddingClient(std::shared_ptr<HttpTransport> transport,
                                         std::size_t max_batch, std::string model)
    : transport_(std::move(transport)), max_batch_(max_batch == 0 ? 1 : max_batch),
      model_(std::move(model)) {}

std::vector<EmbeddingVector> HttpEmbeddingClient::embed(const std::vector<std::string>& texts) {
    for (const auto& t : texts) {
        if (t.empty()) throw InvalidArgument("embedding input must be non-empty");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += max_batch_) {
        const auto end = std::min(start + max_batch_, texts.size());
        json req;
        req["texts"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto vecs = decode_embed_response(transport_->post("/embed", req), end - start, model_);
        {
            std::lock_guard lock(mu_);
            if (dim_ == 0) dim_ = vecs.front().values.size();
            if (vecs.front().values.size() != dim_) {
                throw ProtocolError("embedding dimension changed within a session",
                                    std::to_string(vecs.front().values.size()));
            }
        }
        std::move(vecs.begin(), vecs.end(), std::back_inserter(out));
    }
    return out;
}

HttpJudgeClient::HttpJudgeClient(std::shared_ptr<HttpTransport> transport)
    : transport_(std::move(transport)) {}

JudgeVerdict HttpJudgeClient::judge_relevance(const std::string& claim, const std::string& question,
                                              const std::string& passage) {
    json req{{"claim", claim},
             {"question", question},
             {"passage", passage},
             {"prompt_template", std::string(relevance_prompt().text)}};
    return decode_relevance_response(transport_->post("/judge/relevance", req));
}

ReaderAnswer HttpJudgeClient::read_answer(const std::string& claim, const std::string& question,
                                          const std::string& passage) {
    json req{{"claim", claim},
             {"question", question},
             {"passage", passage},
             {"prompt_template", std::string(answer_prompt().text)}};
    const auto body = transport_->post("/judge/answer", req);
    return ReaderAnswer{string_field(body, "answer", "/judge/answer"), std::nullopt};
}

std::string HttpJudgeClient::shorten_answer(const std::string& answer) {
    const auto body = transport_->post("/judge/shorten", json{{"answer", answer}});
    return string_field(body, "short_answer", "/judge/shorten");
}

EquivalenceScore HttpJudgeClient::score_equivalence(const std::string& gold_short,
                                                    const std::string& candidate_short,
                                                    const std::string& question) {
    const auto body = transport_->post(
        "/judge/equivalence",
        json{{"gold", gold_short}, {"candidate", candidate_short}, {"question", question}});
    const auto& v = field(body, "score", "/judge/equivalence");
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw ProtocolError("/judge/equivalence 'score' must be a finite number", body.dump());
    }
    return EquivalenceScore{clip_unit(v.get<double>())};
}

VeracityLabel HttpJudgeClient::judge_veracity(const std::string& claim, const std::string& evidence,
                                              const std::vector<std::string>& label_set) {
    json req{{"claim", claim},
             {"evidence", evidence},
             {"labels", label_set},
             {"prompt_template", std::string(veracity_prompt().text)}};
    const auto body = transport_->post("/judge/veracity", req);
    const auto& v = field(body, "label", "/judge/veracity");
    if (!v.is_string()) throw ProtocolError("/judge/veracity 'label' must be a string", body.dump());
    return VeracityLabel{parse_veracity(v.get<std::string>(), label_set)};
}

SyntheticSet HttpJudgeClient::generate_synthetic(const std::string& claim,
                                                 const std::string& question) {
    json req{{"claim", claim},
             {"question", question},
             {"prompt_template", std::string(synthetic_prompt().text)}};
    return decode_synthetic_response(transport_->post("/generate/synthetic", req), claim, question);
}

}  // namespace cfr
