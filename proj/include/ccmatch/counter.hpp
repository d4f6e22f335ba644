#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccmatch/types.hpp"

namespace ccm {

struct TokenUsage {
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
};

// One record per counter call; replaying from these reproduces identical
// counts without network access.
struct CounterAuditRecord {
    std::string image_id;
    std::string prompt;
    std::string raw_response;
    std::vector<std::pair<std::string, std::int64_t>> parsed;  // all entries, zeros kept
    TokenUsage usage;
    double latency_ms = 0.0;

    std::string to_json() const;
    static CounterAuditRecord from_json_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct ParsedCounts {
    CountPrediction counts;  // zero-count entries dropped (matcher input)
    std::vector<std::pair<std::string, std::int64_t>> audit;  // everything, zeros kept
};

// Strips code fences and surrounding prose, parses the first JSON object,
// trims and lowercases keys, accepts integer-valued floats. Throws
// Error(Input) carrying the raw text when no JSON object is found, and a
// value error naming the key for negative or non-numeric counts.
ParsedCounts parse_count_response(const std::string& text, const std::string& image_id = "");

struct CounterClientConfig {
    std::string endpoint;
    std::string model;
    double temperature = 0.01;
    double top_p = 1.0;
    int timeout_seconds = 60;
    int max_retries = 3;
    std::string api_key_env;  // name of the env var holding the key
};

struct CounterResult {
    CountPrediction counts;
    CounterAuditRecord audit;
};

class CounterClient {
public:
    virtual ~CounterClient() = default;
    virtual CounterResult count(const std::string& image_id,
                                const std::filesystem::path& image_file,
                                const std::string& prompt) = 0;
};

// Chat-completions-style HTTP client: JSON request with model, a text part
// plus one base64 image part, temperature and top_p. Transport and 5xx
// failures are retried with exponential backoff; parse errors are not.
class HttpCounterClient : public CounterClient {
public:
    explicit HttpCounterClient(CounterClientConfig config);
    CounterResult count(const std::string& image_id, const std::filesystem::path& image_file,
                        const std::string& prompt) override;

private:
    CounterClientConfig config_;
};

// Replays persisted audit records: <image_id>.json inside `audit_dir`.
class ReplayCounterClient : public CounterClient {
public:
    explicit ReplayCounterClient(std::filesystem::path audit_dir);
    CounterResult count(const std::string& image_id, const std::filesystem::path& image_file,
                        const std::string& prompt) override;

private:
    std::filesystem::path audit_dir_;
};

std::string base64_encode(const std::string& bytes);

}  // namespace ccm
