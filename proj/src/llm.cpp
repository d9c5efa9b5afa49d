#include "spires/llm.hpp"

#include "spires/errors.hpp"

#include <json.hpp>

// httplib pulls in OpenSSL only when asked; plain HTTP is all we need.
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace spires {

namespace {

std::string strip_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

void apply_truncation(Completion& c, const CompletionRequest& req, std::vector<std::string>* warnings) {
    if (req.max_output_chars > 0 && c.text.size() > static_cast<size_t>(req.max_output_chars)) {
        size_t original = c.text.size();
        c.text.resize(static_cast<size_t>(req.max_output_chars));
        if (warnings)
            warnings->push_back("completion truncated from " + std::to_string(original) + " to " +
                                std::to_string(req.max_output_chars) + " chars");
    }
}

} // namespace

void record(const CompletionRequest& req, const Completion& c, Cassette& cassette) {
    cassette.entries[req.prompt.input_digest] = strip_trailing_newlines(c.text);
    if (cassette.metadata.model_id.empty()) cassette.metadata.model_id = req.model_id;
}

// ---------------------------------------------------------------------------
// Cassette file format: a metadata header followed by digest-keyed block
// scalars, e.g.
//
//   metadata:
//     model_id: gpt-3.5-turbo
//     created_at: 2026-01-01T00:00:00Z
//   entries:
//     <64-hex digest>: |
//       food_item: garlic powder
//       amount: 2 tablespoons
// ---------------------------------------------------------------------------

std::string serialize_cassette(const Cassette& cassette) {
    std::ostringstream out;
    out << "metadata:\n";
    out << "  model_id: " << cassette.metadata.model_id << "\n";
    out << "  created_at: " << cassette.metadata.created_at << "\n";
    out << "entries:\n";
    for (const auto& [digest, text] : cassette.entries) {
        out << "  " << digest << ": |\n";
        std::istringstream lines(text);
        std::string line;
        if (text.empty()) continue;
        while (std::getline(lines, line)) out << "    " << line << "\n";
    }
    return out.str();
}

Cassette parse_cassette(const std::string& source) {
    Cassette cassette;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    enum class Section { None, Metadata, Entries } section = Section::None;
    std::string current_digest;
    std::string current_text;
    bool in_block = false;

    auto flush_entry = [&]() {
        if (!current_digest.empty())
            cassette.entries[current_digest] = strip_trailing_newlines(current_text);
        current_digest.clear();
        current_text.clear();
        in_block = false;
    };

    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (in_block && raw.rfind("    ", 0) == 0) {
            current_text += raw.substr(4);
            current_text += "\n";
            continue;
        }
        if (in_block && raw.empty()) { // blank line inside a block scalar
            current_text += "\n";
            continue;
        }
        flush_entry();
        std::string line = raw;
        if (line.empty() || line[0] == '#') continue;
        if (line == "metadata:") {
            section = Section::Metadata;
            continue;
        }
        if (line == "entries:") {
            section = Section::Entries;
            continue;
        }
        if (line.rfind("  ", 0) != 0)
            throw DataError("cassette line " + std::to_string(number) + ": unexpected top-level line");
        std::string body = line.substr(2);
        size_t colon = body.find(':');
        if (colon == std::string::npos)
            throw DataError("cassette line " + std::to_string(number) + ": expected 'key: value'");
        std::string key = body.substr(0, colon);
        std::string value = body.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        if (section == Section::Metadata) {
            if (key == "model_id") cassette.metadata.model_id = value;
            else if (key == "created_at") cassette.metadata.created_at = value;
            else throw DataError("cassette line " + std::to_string(number) + ": unknown metadata key '" + key + "'");
        } else if (section == Section::Entries) {
            if (value != "|")
                throw DataError("cassette line " + std::to_string(number) + ": entry must use a '|' block scalar");
            current_digest = key;
            in_block = true;
        } else {
            throw DataError("cassette line " + std::to_string(number) + ": content before a section header");
        }
    }
    flush_entry();
    return cassette;
}

Cassette load_cassette_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open cassette file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cassette(buf.str());
}

void save_cassette_file(const Cassette& cassette, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write cassette file: " + path);
    out << serialize_cassette(cassette);
}

// ---------------------------------------------------------------------------
// Replay backend
// ---------------------------------------------------------------------------

Completion ReplayBackend::complete(const CompletionRequest& req, std::vector<std::string>* warnings) {
    auto it = cassette_.entries.find(req.prompt.input_digest);
    if (it == cassette_.entries.end()) throw ReplayMissError(req.prompt.input_digest);
    Completion c;
    c.text = strip_trailing_newlines(it->second);
    c.backend = BackendKind::Replay;
    c.latency_ms = 0;
    apply_truncation(c, req, warnings);
    return c;
}

// ---------------------------------------------------------------------------
// Rate limiter
// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double capacity, double refill_per_second)
    : capacity_(capacity),
      tokens_(capacity),
      refill_per_second_(refill_per_second),
      last_refill_(std::chrono::steady_clock::now()) {}

void RateLimiter::refill() {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_refill_).count();
    last_refill_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
}

bool RateLimiter::try_acquire() {
    std::lock_guard<std::mutex> lock(mutex_);
    refill();
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return true;
    }
    return false;
}

void RateLimiter::acquire(std::chrono::milliseconds max_wait) {
    auto deadline = std::chrono::steady_clock::now() + max_wait;
    while (!try_acquire()) {
        if (std::chrono::steady_clock::now() >= deadline)
            throw RateLimitError("rate limiter budget exhausted after waiting " +
                                 std::to_string(max_wait.count()) + " ms");
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

HttpBackendConfig HttpBackendConfig::from_env() {
    HttpBackendConfig config;
    if (const char* endpoint = std::getenv("SPIRES_LLM_ENDPOINT")) config.endpoint = endpoint;
    if (const char* key = std::getenv("SPIRES_LLM_KEY")) config.api_key = key;
    return config;
}

HttpBackend::HttpBackend(HttpBackendConfig config, std::shared_ptr<RateLimiter> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {
    if (config_.endpoint.empty())
        throw ConfigError("http backend requires an endpoint (flag or SPIRES_LLM_ENDPOINT)");
}

Completion HttpBackend::complete(const CompletionRequest& req, std::vector<std::string>* warnings) {
    // Split scheme://host[:port]/path by hand; httplib clients take host and
    // path separately.
    std::string endpoint = config_.endpoint;
    size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + endpoint);
    std::string scheme = endpoint.substr(0, scheme_end);
    if (scheme != "http")
        throw ConfigError("unsupported endpoint scheme '" + scheme + "' (only http is built in)");
    std::string rest = endpoint.substr(scheme_end + 3);
    size_t slash = rest.find('/');
    std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

    nlohmann::json payload = {
        {"model", req.model_id},
        {"temperature", req.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt.text}}})},
    };
    std::string body = payload.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        std::string value = config_.bearer ? "Bearer " + config_.api_key : config_.api_key;
        headers.emplace(config_.auth_header, value);
    }

    std::string last_error;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        if (limiter_) limiter_->acquire();

        httplib::Client client(host);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));

        auto start = std::chrono::steady_clock::now();
        httplib::Result res = client.Post(path, headers, body, "application/json");
        auto elapsed =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("completion endpoint returned status " + std::to_string(res->status));

        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty() ||
            !reply["choices"][0].contains("message"))
            throw TransportError("completion endpoint returned an unexpected payload");

        Completion c;
        c.text = strip_trailing_newlines(reply["choices"][0]["message"].value("content", ""));
        c.backend = BackendKind::Http;
        c.latency_ms = elapsed.count();
        apply_truncation(c, req, warnings);
        return c;
    }
    throw TransportError("completion failed after " + std::to_string(config_.max_attempts) +
                         " attempts; last error: " + last_error);
}

// ---------------------------------------------------------------------------
// Recording backend
// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<CompletionBackend> inner, Cassette initial)
    : inner_(std::move(inner)), cassette_(std::move(initial)) {}

Completion RecordingBackend::complete(const CompletionRequest& req, std::vector<std::string>* warnings) {
    Completion c = inner_->complete(req, warnings);
    std::lock_guard<std::mutex> lock(mutex_);
    record(req, c, cassette_);
    return c;
}

Cassette RecordingBackend::snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cassette_;
}

} // namespace spires
