#pragma once

#include "spires/prompt.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace spires {

struct CompletionRequest {
    Prompt prompt;
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 0.0;       // low-creativity default
    int max_output_chars = 100000;  // longer completions are truncated, with a warning
};

enum class BackendKind { Replay, Http };

struct Completion {
    std::string text;
    BackendKind backend = BackendKind::Replay;
    long latency_ms = 0;
};

// Stored prompt-digest -> completion-text map for offline replay.
struct Cassette {
    struct Metadata {
        std::string model_id;
        std::string created_at; // ISO-8601 UTC
        bool operator==(const Metadata&) const = default;
    };

    Metadata metadata;
    std::map<std::string, std::string> entries; // digest -> completion text

    bool operator==(const Cassette&) const = default;
};

// Adds or overwrites the entry keyed by the request's prompt digest.
void record(const CompletionRequest& req, const Completion& c, Cassette& cassette);

std::string serialize_cassette(const Cassette& cassette);
Cassette parse_cassette(const std::string& source);
Cassette load_cassette_file(const std::string& path);
void save_cassette_file(const Cassette& cassette, const std::string& path);

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual BackendKind kind() const = 0;
    // Returns the completion text verbatim (trailing newlines normalized
    // away). Appends any non-fatal notes to `warnings` when given.
    virtual Completion complete(const CompletionRequest& req,
                                std::vector<std::string>* warnings = nullptr) = 0;
};

// Deterministic lookup against a loaded cassette. A missing digest throws
// ReplayMissError and is never retried.
class ReplayBackend : public CompletionBackend {
public:
    explicit ReplayBackend(Cassette cassette) : cassette_(std::move(cassette)) {}

    BackendKind kind() const override { return BackendKind::Replay; }
    Completion complete(const CompletionRequest& req, std::vector<std::string>* warnings) override;

    const Cassette& cassette() const { return cassette_; }

private:
    Cassette cassette_;
};

// Shared token bucket. acquire() blocks until a token is available or the
// wait budget is exhausted.
class RateLimiter {
public:
    RateLimiter(double capacity, double refill_per_second);

    bool try_acquire();
    void acquire(std::chrono::milliseconds max_wait = std::chrono::seconds(30));

private:
    void refill();

    std::mutex mutex_;
    double capacity_;
    double tokens_;
    double refill_per_second_;
    std::chrono::steady_clock::time_point last_refill_;
};

struct HttpBackendConfig {
    std::string endpoint;                 // e.g. http://host:port/v1/chat/completions
    std::string api_key;                  // empty -> no auth header
    std::string auth_header = "Authorization";
    bool bearer = true;                   // prefix the key with "Bearer "
    int max_attempts = 3;                 // transport and 429-class failures only
    int backoff_base_ms = 100;            // doubles per attempt
    std::chrono::milliseconds timeout{30000};

    // Reads SPIRES_LLM_ENDPOINT / SPIRES_LLM_KEY.
    static HttpBackendConfig from_env();
};

// Generic chat-completion client: POSTs
//   {"model": ..., "temperature": ..., "messages": [{"role": "user", "content": ...}]}
// and reads choices[0].message.content.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpBackendConfig config, std::shared_ptr<RateLimiter> limiter = nullptr);

    BackendKind kind() const override { return BackendKind::Http; }
    Completion complete(const CompletionRequest& req, std::vector<std::string>* warnings) override;

private:
    HttpBackendConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
};

// Wraps another backend and records every completion into a cassette.
// Writes are serialized; the cassette can be flushed even after a failure.
class RecordingBackend : public CompletionBackend {
public:
    RecordingBackend(std::shared_ptr<CompletionBackend> inner, Cassette initial = {});

    BackendKind kind() const override { return inner_->kind(); }
    Completion complete(const CompletionRequest& req, std::vector<std::string>* warnings) override;

    Cassette snapshot() const;

private:
    std::shared_ptr<CompletionBackend> inner_;
    mutable std::mutex mutex_;
    Cassette cassette_;
};

} // namespace spires
