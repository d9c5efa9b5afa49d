#pragma once

#include <stdexcept>
#include <string>

namespace spires {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Schema file is syntactically malformed. `line` is 1-based.
class SyntaxError : public Error {
public:
    SyntaxError(int line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
    int line;
};

// Schema violates a structural invariant (dangling reference, duplicate
// name, lowercase prefix, ...).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Malformed data file (lexicon TSV, triple TSV, cassette, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Replay backend has no entry for the requested prompt digest. Signals a
// stale cassette; never retried.
class ReplayMissError : public Error {
public:
    explicit ReplayMissError(const std::string& digest)
        : Error("no cassette entry for prompt digest " + digest), digest(digest) {}
    std::string digest;
};

// Network/transport failure, surfaced after the retry budget is spent.
class TransportError : public Error {
public:
    using Error::Error;
};

// Rate limit still exceeded after the backoff budget.
class RateLimitError : public Error {
public:
    using Error::Error;
};

// Invalid run configuration (replay without cassette, record over replay, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Extraction-level failure (recursion limit, warnings promoted to errors).
class ExtractionError : public Error {
public:
    using Error::Error;
};

} // namespace spires
