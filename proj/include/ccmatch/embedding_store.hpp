#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccmatch/similarity.hpp"

namespace ccm {

// Directory-backed embedding store:
//   index.json  — {"dim": D, "count": K, "dtype": "f32le", "names": [K strings]}
//   vectors.bin — exactly K*D little-endian float32, row-major, no header.
class FileEmbeddingStore : public EmbeddingProvider {
public:
    explicit FileEmbeddingStore(const std::filesystem::path& dir);

    EmbeddingVector get(const std::string& name) override;
    bool has(const std::string& name) override;

    int dim() const { return dim_; }
    std::size_t count() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    // Writes a store directory in the same format (fixture/tooling support).
    static void write(const std::filesystem::path& dir, int dim,
                      const std::vector<std::string>& names,
                      const std::vector<std::vector<float>>& vectors);

private:
    int dim_ = 0;
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<float> data_;
};

// HTTP-backed provider: POST {"texts": ["..."]} to `endpoint`, expecting
// {"dim": D, "vectors": [[...], ...]}. Results are memoized per instance.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string endpoint, int timeout_seconds = 30);

    EmbeddingVector get(const std::string& name) override;
    bool has(const std::string& name) override;
    bool single_flight() const override { return true; }

private:
    EmbeddingVector fetch(const std::string& name);

    std::string endpoint_;
    int timeout_seconds_;
    std::mutex mutex_;
    std::unordered_map<std::string, EmbeddingVector> cache_;
};

}  // namespace ccm
