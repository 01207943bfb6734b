#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>

namespace rlcs {

struct JudgeVerdict {
    bool equivalent = false;
    double confidence = 0.0;  // in [0,1]
    std::int64_t latency_ms = 0;
};

/// Semantic-equivalence judge. Implementations must be callable concurrently.
/// Failures are reported as Error with judge_timeout, judge_protocol_error or
/// judge_unavailable.
class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual JudgeVerdict judge(std::string_view question, std::string_view reference, std::string_view candidate,
                               std::string_view domain) const = 0;
};

/// Normalized exact match. Never fails.
class FallbackJudge final : public JudgeClient {
public:
    JudgeVerdict judge(std::string_view question, std::string_view reference, std::string_view candidate,
                       std::string_view domain) const override;
};

/// Deterministic scripted judge keyed by (reference, candidate); unknown pairs
/// are non-equivalent. The table is immutable once constructed.
class StubJudge final : public JudgeClient {
public:
    using Table = std::map<std::pair<std::string, std::string>, bool>;

    StubJudge() = default;
    explicit StubJudge(Table table) : table_(std::move(table)) {}

    /// JSON Lines, one {"reference","candidate","equivalent"} object per line.
    static StubJudge from_jsonl(std::string_view content);
    static StubJudge load(const std::string& path);

    JudgeVerdict judge(std::string_view question, std::string_view reference, std::string_view candidate,
                       std::string_view domain) const override;

    std::size_t size() const noexcept { return table_.size(); }

private:
    Table table_;
};

/// Always fails with judge_unavailable.
class UnavailableJudge final : public JudgeClient {
public:
    JudgeVerdict judge(std::string_view, std::string_view, std::string_view, std::string_view) const override;
};

struct RemoteJudgeOptions {
    std::string url;  // e.g. http://127.0.0.1:8080
    std::chrono::milliseconds timeout{10000};
    int retries = 2;
    /// Per-domain judge prompt, forwarded verbatim as "prompt" when non-empty.
    std::map<std::string, std::string, std::less<>> prompts;
};

/// HTTP backend: POST /judge with {"domain","question","reference","candidate"}
/// and a {"equivalent": bool, "confidence": number} response.
class RemoteJudge final : public JudgeClient {
public:
    explicit RemoteJudge(RemoteJudgeOptions options);

    JudgeVerdict judge(std::string_view question, std::string_view reference, std::string_view candidate,
                       std::string_view domain) const override;

    /// Total HTTP attempts made over the client's lifetime.
    std::int64_t attempts() const noexcept;

private:
    RemoteJudgeOptions options_;
    std::string scheme_host_port_;
    mutable std::mutex mutex_;
    mutable std::int64_t attempts_ = 0;
};

/// Exact-key memoisation in front of another judge. Failures are not cached.
class CachingJudge final : public JudgeClient {
public:
    explicit CachingJudge(std::shared_ptr<const JudgeClient> inner) : inner_(std::move(inner)) {}

    JudgeVerdict judge(std::string_view question, std::string_view reference, std::string_view candidate,
                       std::string_view domain) const override;

    std::size_t hits() const;

private:
    using Key = std::tuple<std::string, std::string, std::string, std::string>;
    std::shared_ptr<const JudgeClient> inner_;
    mutable std::mutex mutex_;
    mutable std::map<Key, JudgeVerdict> cache_;
    mutable std::size_t hits_ = 0;
};

/// Parse a judge response body; throws judge_protocol_error when malformed.
JudgeVerdict parse_judge_response(std::string_view body);

std::string make_judge_request(std::string_view question, std::string_view reference, std::string_view candidate,
                               std::string_view domain, std::string_view prompt = {});

}  // namespace rlcs
