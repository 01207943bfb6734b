#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rlcs/error.hpp"
#include "rlcs/judge.hpp"

using namespace rlcs;
using namespace std::chrono_literals;

namespace {

enum class Mode { ok, malformed, overloaded, slow, not_found, echo_prompt };

// small in-process judge server on an ephemeral port
class FakeJudgeServer {
public:
    FakeJudgeServer() {
        server_.Post("/judge", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            const auto body = nlohmann::json::parse(req.body);
            switch (mode_.load()) {
                case Mode::ok: {
                    const bool eq = body.at("reference") == body.at("candidate");
                    res.set_content(nlohmann::json{{"equivalent", eq}, {"confidence", 0.9}}.dump(), "application/json");
                    break;
                }
                case Mode::malformed:
                    res.set_content(R"({"equivalent": tr)", "application/json");
                    break;
                case Mode::overloaded:
                    res.status = 503;
                    break;
                case Mode::slow:
                    std::this_thread::sleep_for(400ms);
                    res.set_content(R"({"equivalent": true, "confidence": 1})", "application/json");
                    break;
                case Mode::not_found:
                    res.status = 404;
                    break;
                case Mode::echo_prompt: {
                    const bool has = body.contains("prompt") && body["prompt"] == "be strict";
                    res.set_content(nlohmann::json{{"equivalent", has}, {"confidence", 1.0}}.dump(), "application/json");
                    break;
                }
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeJudgeServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    void set(Mode m) { mode_ = m; }
    int hits() const { return hits_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<Mode> mode_{Mode::ok};
    std::atomic<int> hits_{0};
};

Errc judge_error(const JudgeClient& j) {
    try {
        j.judge("q", "a", "b", "math");
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("judge did not fail");
    return Errc::invalid_argument;
}

RemoteJudgeOptions opts(const std::string& url, std::chrono::milliseconds timeout, int retries) {
    RemoteJudgeOptions o;
    o.url = url;
    o.timeout = timeout;
    o.retries = retries;
    return o;
}

}  // namespace

TEST_CASE("stub judge lookups") {
    const auto stub = StubJudge::from_jsonl(R"({"reference":"0.5","candidate":"1/2","equivalent":true}
{"reference":"a","candidate":"b","equivalent":false}
)");
    CHECK(stub.size() == 2);
    CHECK(stub.judge("q", "0.5", "1/2", "math").equivalent);
    CHECK_FALSE(stub.judge("q", "1/2", "0.5", "math").equivalent);
    CHECK_FALSE(stub.judge("q", "x", "y", "math").equivalent);
}

TEST_CASE("stub table errors name the line") {
    try {
        StubJudge::from_jsonl("{\"reference\":\"a\",\"candidate\":\"b\",\"equivalent\":true}\n{broken\n");
        FAIL("accepted a broken table");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_invalid);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(StubJudge::load("/nonexistent/stub.jsonl"), Error);
}

TEST_CASE("stub judge is deterministic across threads") {
    const StubJudge stub(StubJudge::Table{{{"r", "c"}, true}});
    std::atomic<int> agree{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&] {
            for (int i = 0; i < 1000; ++i) agree += stub.judge("q", "r", "c", "vqa").equivalent ? 1 : 0;
        });
    for (auto& th : pool) th.join();
    CHECK(agree == 4000);
}

TEST_CASE("fallback judge is reflexive") {
    FallbackJudge f;
    for (const char* s : {"", "x", "Paris", "  spaced  out "}) CHECK(f.judge("q", s, s, "vqa").equivalent);
    CHECK(f.judge("q", "Paris", " paris ", "vqa").equivalent);
    CHECK_FALSE(f.judge("q", "Paris", "Lyon", "vqa").equivalent);
}

TEST_CASE("response parsing") {
    const auto v = parse_judge_response(R"({"equivalent": true, "confidence": 0.75})");
    CHECK(v.equivalent);
    CHECK(v.confidence == 0.75);
    for (const char* bad : {R"({"equivalent": tr)", R"({"confidence": 1})", R"({"equivalent": "yes", "confidence": 1})",
                            R"({"equivalent": true})", R"({"equivalent": true, "confidence": 2})", "[]"}) {
        try {
            parse_judge_response(bad);
            FAIL("accepted " << bad);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::judge_protocol_error);
        }
    }
    const auto body = nlohmann::json::parse(make_judge_request("q", "r", "c", "math"));
    CHECK(body.at("domain") == "math");
    CHECK_FALSE(body.contains("prompt"));
}

TEST_CASE("remote judge over http") {
    FakeJudgeServer server;

    SUBCASE("happy path") {
        RemoteJudge j(opts(server.url(), 2000ms, 2));
        CHECK(j.judge("q", "a", "a", "math").equivalent);
        CHECK_FALSE(j.judge("q", "a", "b", "math").equivalent);
        CHECK(j.attempts() == 2);
    }
    SUBCASE("malformed body is a protocol error without retry") {
        server.set(Mode::malformed);
        RemoteJudge j(opts(server.url(), 2000ms, 2));
        CHECK(judge_error(j) == Errc::judge_protocol_error);
        CHECK(j.attempts() == 1);
    }
    SUBCASE("client errors are protocol errors") {
        server.set(Mode::not_found);
        RemoteJudge j(opts(server.url(), 2000ms, 2));
        CHECK(judge_error(j) == Errc::judge_protocol_error);
    }
    SUBCASE("server errors are retried up to the bound") {
        server.set(Mode::overloaded);
        RemoteJudge j(opts(server.url(), 2000ms, 2));
        CHECK(judge_error(j) == Errc::judge_unavailable);
        CHECK(j.attempts() == 3);
        CHECK(server.hits() == 3);
    }
    SUBCASE("timeouts respect the wall-clock bound") {
        server.set(Mode::slow);
        RemoteJudge j(opts(server.url(), 100ms, 1));
        const auto t0 = std::chrono::steady_clock::now();
        CHECK(judge_error(j) == Errc::judge_timeout);
        const auto elapsed = std::chrono::steady_clock::now() - t0;
        CHECK(j.attempts() <= 2);
        // (retries + 1) * timeout plus scheduling slack
        CHECK(elapsed < 200ms + 150ms);
    }
    SUBCASE("per-domain prompt is forwarded") {
        server.set(Mode::echo_prompt);
        auto o = opts(server.url(), 2000ms, 0);
        o.prompts["math"] = "be strict";
        RemoteJudge j(o);
        CHECK(j.judge("q", "a", "b", "math").equivalent);
        CHECK_FALSE(j.judge("q", "a", "b", "ocr").equivalent);
    }
}

TEST_CASE("unreachable remote is unavailable") {
    // bind then release a port so nothing listens there
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    RemoteJudge j(opts("http://127.0.0.1:" + std::to_string(port), 300ms, 1));
    const auto code = judge_error(j);
    CHECK((code == Errc::judge_unavailable || code == Errc::judge_timeout));
    CHECK(j.attempts() == 2);
    CHECK(judge_error(UnavailableJudge{}) == Errc::judge_unavailable);
    CHECK_THROWS_AS(RemoteJudge(opts("", 100ms, 0)), Error);
    CHECK_THROWS_AS(RemoteJudge(opts("http://x", 100ms, -1)), Error);
}

TEST_CASE("caching judge memoises successes only") {
    auto inner = std::make_shared<StubJudge>(StubJudge::Table{{{"r", "c"}, true}});
    CachingJudge cache(inner);
    CHECK(cache.judge("q", "r", "c", "vqa").equivalent);
    CHECK(cache.judge("q", "r", "c", "vqa").equivalent);
    CHECK(cache.hits() == 1);
    CachingJudge failing(std::make_shared<UnavailableJudge>());
    CHECK_THROWS_AS(failing.judge("q", "r", "c", "vqa"), Error);
    CHECK_THROWS_AS(failing.judge("q", "r", "c", "vqa"), Error);
    CHECK(failing.hits() == 0);
}
