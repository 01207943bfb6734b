#include "rlcs/judge.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "rlcs/error.hpp"
#include "rlcs/text.hpp"

namespace rlcs {

using json = nlohmann::json;

JudgeVerdict FallbackJudge::judge(std::string_view, std::string_view reference, std::string_view candidate,
                                  std::string_view) const {
    const bool eq = text::normalize_for_match(reference) == text::normalize_for_match(candidate);
    return {eq, 1.0, 0};
}

StubJudge StubJudge::from_jsonl(std::string_view content) {
    Table table;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto obj = json::parse(line);
            table[{obj.at("reference").get<std::string>(), obj.at("candidate").get<std::string>()}] =
                obj.at("equivalent").get<bool>();
        } catch (const json::exception& e) {
            throw Error(Errc::config_invalid, "stub table line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return StubJudge(std::move(table));
}

StubJudge StubJudge::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open stub table " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str());
}

JudgeVerdict StubJudge::judge(std::string_view, std::string_view reference, std::string_view candidate,
                              std::string_view) const {
    const auto it = table_.find({std::string(reference), std::string(candidate)});
    if (it == table_.end()) return {false, 1.0, 0};
    return {it->second, 1.0, 0};
}

JudgeVerdict UnavailableJudge::judge(std::string_view, std::string_view, std::string_view, std::string_view) const {
    throw Error(Errc::judge_unavailable, "no judge backend configured");
}

JudgeVerdict parse_judge_response(std::string_view body) {
    json obj;
    try {
        obj = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(Errc::judge_protocol_error, std::string("judge response is not JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("equivalent") || !obj["equivalent"].is_boolean())
        throw Error(Errc::judge_protocol_error, "judge response lacks boolean \"equivalent\"");
    JudgeVerdict v;
    v.equivalent = obj["equivalent"].get<bool>();
    if (!obj.contains("confidence") || !obj["confidence"].is_number())
        throw Error(Errc::judge_protocol_error, "judge response lacks numeric \"confidence\"");
    v.confidence = obj["confidence"].get<double>();
    if (!(v.confidence >= 0.0 && v.confidence <= 1.0))
        throw Error(Errc::judge_protocol_error, "judge confidence outside [0,1]");
    return v;
}

std::string make_judge_request(std::string_view question, std::string_view reference, std::string_view candidate,
                               std::string_view domain, std::string_view prompt) {
    json body = {{"domain", domain}, {"question", question}, {"reference", reference}, {"candidate", candidate}};
    if (!prompt.empty()) body["prompt"] = prompt;
    return body.dump();
}

RemoteJudge::RemoteJudge(RemoteJudgeOptions options) : options_(std::move(options)) {
    if (options_.retries < 0) throw Error(Errc::config_invalid, "judge retries must be nonnegative");
    if (options_.timeout.count() <= 0) throw Error(Errc::config_invalid, "judge timeout must be positive");
    scheme_host_port_ = options_.url;
    while (!scheme_host_port_.empty() && scheme_host_port_.back() == '/') scheme_host_port_.pop_back();
    if (scheme_host_port_.empty()) throw Error(Errc::config_invalid, "judge url is empty");
}

std::int64_t RemoteJudge::attempts() const noexcept {
    std::lock_guard lock(mutex_);
    return attempts_;
}

JudgeVerdict RemoteJudge::judge(std::string_view question, std::string_view reference, std::string_view candidate,
                                std::string_view domain) const {
    std::string_view prompt;
    if (auto it = options_.prompts.find(domain); it != options_.prompts.end()) prompt = it->second;
    const std::string body = make_judge_request(question, reference, candidate, domain, prompt);

    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + options_.timeout * (options_.retries + 1);
    bool last_was_timeout = false;
    std::string last_error = "no attempt made";

    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) break;
        const auto budget = std::min<std::chrono::steady_clock::duration>(options_.timeout, deadline - now);
        const auto budget_us = std::chrono::duration_cast<std::chrono::microseconds>(budget).count();

        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(budget_us / 1000000, budget_us % 1000000);
        client.set_read_timeout(budget_us / 1000000, budget_us % 1000000);
        client.set_write_timeout(budget_us / 1000000, budget_us % 1000000);
        {
            std::lock_guard lock(mutex_);
            ++attempts_;
        }
        auto res = client.Post("/judge", body, "application/json");
        if (!res) {
            last_was_timeout = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_was_timeout = false;
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(Errc::judge_protocol_error, "judge returned HTTP " + std::to_string(res->status));
        JudgeVerdict v = parse_judge_response(res->body);
        v.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        return v;
    }
    if (last_was_timeout) throw Error(Errc::judge_timeout, "judge timed out: " + last_error);
    throw Error(Errc::judge_unavailable, "judge unavailable: " + last_error);
}

JudgeVerdict CachingJudge::judge(std::string_view question, std::string_view reference, std::string_view candidate,
                                 std::string_view domain) const {
    Key key{std::string(question), std::string(reference), std::string(candidate), std::string(domain)};
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    JudgeVerdict v = inner_->judge(question, reference, candidate, domain);
    std::lock_guard lock(mutex_);
    cache_.emplace(std::move(key), v);
    return v;
}

std::size_t CachingJudge::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

}  // namespace rlcs
