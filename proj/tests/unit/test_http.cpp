// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "cfr/error.hpp"
#include "cfr/http_clients.hpp"
#include "cfr/log.hpp"
#include "cfr/prompts.hpp"

using namespace cfr;
using nlohmann::json;

namespace {

/// In-process provider bound to an ephemeral localhost port.
class FakeProvider {
public:
    httplib::Server server;
    int port = 0;

    FakeProvider() = default;
    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeProvider() {
        server.stop();
        if (thread_.joinable()) thread_.join();
    }
    HttpOptions options() const {
        HttpOptions o;
        o.base_url = "http://127.0.0.1:" + std::to_string(port);
        o.initial_backoff = std::chrono::milliseconds(1);
        o.timeout = std::chrono::milliseconds(5000);
        return o;
    }

private:
    std::thread thread_;
};

void reply(httplib::Response& res, const json& body) {
    res.set_content(body.dump(), "application/json");
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("http") {

TEST_CASE("transient failures are retried, then succeed") {
    set_log_level(LogLevel::off);
    FakeProvider fake;
    std::atomic<int> hits{0};
    fake.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        if (++hits < 3) {
            res.status = 503;
            return;
        }
        const auto body = json::parse(req.body);
        json embs = json::array();
        for (std::size_t i = 0; i < body["texts"].size(); ++i) embs.push_back({1.0, 0.0, static_cast<double>(i)});
        reply(res, {{"embeddings", embs}, {"dim", 3}});
    });
    fake.start();
    auto t = std::make_shared<HttpTransport>(fake.options());
    HttpEmbeddingClient client(t, 2);
    const auto v = client.embed({"a", "b", "c"});
    REQUIRE(v.size() == 3);
    CHECK(v[2].values == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(hits == 4);
    CHECK(t->requests_sent() == 4);
}

TEST_CASE("retries are bounded and 4xx is not retried") {
    set_log_level(LogLevel::off);
    FakeProvider fake;
    std::atomic<int> busy{0}, bad{0};
    fake.server.Post("/busy", [&](const httplib::Request&, httplib::Response& res) {
        ++busy;
        res.status = 429;
    });
    fake.server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
        ++bad;
        res.status = 400;
    });
    fake.start();
    HttpTransport t(fake.options());
    try {
        t.post("/busy", json::object());
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(e.retryable());
    }
    CHECK(busy == 3);
    try {
        t.post("/bad", json::object());
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK_FALSE(e.retryable());
    }
    CHECK(bad == 1);
}

TEST_CASE("unreachable provider raises a transport error") {
    set_log_level(LogLevel::off);
    HttpOptions o;
    o.base_url = "http://127.0.0.1:1";
    o.max_attempts = 2;
    o.initial_backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::milliseconds(500);
    HttpTransport t(o);
    CHECK_THROWS_AS(t.post("/embed", json::object()), TransportError);
    CHECK_THROWS_AS(HttpTransport(HttpOptions{}), ConfigError);
}

TEST_CASE("malformed responses raise protocol errors with the raw body") {
    set_log_level(LogLevel::off);
    FakeProvider fake;
    fake.server.Post("/judge/relevance", [&](const httplib::Request&, httplib::Response& res) {
        reply(res, {{"relevant", "Perhaps"}});
    });
    fake.server.Post("/judge/answer", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "text/plain");
    });
    fake.server.Post("/judge/veracity", [&](const httplib::Request&, httplib::Response& res) {
        reply(res, {{"label", "PANTS ON FIRE"}});
    });
    fake.server.Post("/generate/synthetic", [&](const httplib::Request&, httplib::Response& res) {
        reply(res, {{"positive", "p"}, {"hard_negative", ""}, {"explanation", "e"}, {"alt_questions", json::array()}});
    });
    fake.start();
    HttpJudgeClient judge(std::make_shared<HttpTransport>(fake.options()));
    try {
        judge.judge_relevance("c", "q", "p");
        FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
        CHECK(e.raw() == "Perhaps");
    }
    try {
        judge.read_answer("c", "q", "p");
        FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
        CHECK(e.raw() == "not json");
    }
    CHECK_THROWS_AS(judge.judge_veracity("c", "e", {"SUPPORTS", "REFUTES"}), ProtocolError);
    CHECK_THROWS_AS(judge.generate_synthetic("c", "q"), ProtocolError);
}

TEST_CASE("requests carry the bearer token and the prompt template") {
    set_log_level(LogLevel::off);
    FakeProvider fake;
    std::string auth;
    json seen;
    fake.server.Post("/judge/relevance", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        seen = json::parse(req.body);
        reply(res, {{"relevant", true}});
    });
    fake.start();
    auto o = fake.options();
    o.bearer_token = "secret";
    HttpJudgeClient judge(std::make_shared<HttpTransport>(o));
    CHECK(judge.judge_relevance("claim", "question", "passage").relevant);
    CHECK(auth == "Bearer secret");
    CHECK(seen["claim"] == "claim");
    CHECK(seen["prompt_template"] == std::string(relevance_prompt().text));
    CHECK(std::string(relevance_prompt().text).find("{passage}") != std::string::npos);
}

TEST_CASE("in-flight requests stay under the parallelism cap") {
    set_log_level(LogLevel::off);
    FakeProvider fake;
    std::atomic<int> current{0}, peak{0};
    fake.server.new_task_queue = [] { return new httplib::ThreadPool(8); };
    fake.server.Post("/judge/shorten", [&](const httplib::Request&, httplib::Response& res) {
        const int now = ++current;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        --current;
        reply(res, {{"short_answer", "x"}});
    });
    fake.start();
    auto o = fake.options();
    o.parallelism = 2;
    auto t = std::make_shared<HttpTransport>(o);
    HttpJudgeClient judge(t);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { judge.shorten_answer("answer"); });
    for (auto& th : threads) th.join();
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
}

TEST_CASE("cached responses are served without a request") {
    set_log_level(LogLevel::off);
    FakeProvider fake;
    std::atomic<int> hits{0};
    fake.server.Post("/judge/equivalence", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        reply(res, {{"score", 1.7}});
    });
    fake.start();
    const auto dir = fresh_dir("cfr_http_cache");
    auto o = fake.options();
    o.cache = std::make_shared<ResponseCache>(dir);
    HttpJudgeClient judge(std::make_shared<HttpTransport>(o));
    CHECK(judge.score_equivalence("g", "c", "q").score == 1.0);
    CHECK(judge.score_equivalence("g", "c", "q").score == 1.0);
    CHECK(hits == 1);
    judge.score_equivalence("g", "other", "q");
    CHECK(hits == 2);

    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        std::ofstream(e.path(), std::ios::trunc) << "{corrupt";
    }
    CHECK(judge.score_equivalence("g", "c", "q").score == 1.0);
    CHECK(hits == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cache keys ignore object key order") {
    const json a = json::parse(R"({"x":1,"y":2})");
    const json b = json::parse(R"({"y":2,"x":1})");
    CHECK(ResponseCache::request_hash("/e", a) == ResponseCache::request_hash("/e", b));
    CHECK(ResponseCache::request_hash("/e", a) != ResponseCache::request_hash("/f", a));
}

TEST_CASE("response decoders") {
    CHECK(decode_embed_response(json::parse(R"({"embeddings":[[1,2],[3,4]],"dim":2})"), 2, "m")[1].values ==
          std::vector<double>{3, 4});
    CHECK_THROWS_AS(decode_embed_response(json::parse(R"({"embeddings":[[1,2]]})"), 2, "m"), ProtocolError);
    CHECK_THROWS_AS(decode_embed_response(json::parse(R"({"embeddings":[[1,2],[3]]})"), 2, "m"), ProtocolError);
    CHECK_THROWS_AS(decode_embed_response(json::parse(R"({"embeddings":[[1,"a"]]})"), 1, "m"), ProtocolError);
    CHECK_THROWS_AS(decode_embed_response(json::parse(R"({"embeddings":[[1,2]],"dim":3})"), 1, "m"), ProtocolError);
    CHECK(decode_relevance_response(json::parse(R"({"relevant":"no."})")).relevant == false);
    const auto s = decode_synthetic_response(
        json::parse(R"({"positive":"p","hard_negative":"h","explanation":"e",
                        "alt_questions":[{"question":"q1","negative":"n1"}]})"),
        "c", "q");
    CHECK(s.alt_negatives.size() == 1);
    CHECK(s.claim == "c");
}

}
