#include "ccmatch/embedding_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ccmatch/errors.hpp"

// The f32le on-disk format is read directly; this artifact targets
// little-endian hosts.
static_assert(std::endian::native == std::endian::little,
              "embedding store requires a little-endian host");

namespace ccm {

using nlohmann::json;

FileEmbeddingStore::FileEmbeddingStore(const std::filesystem::path& dir) {
    std::filesystem::path index_path = dir / "index.json";
    std::ifstream in(index_path);
    if (!in) throw input_error("cannot open embedding index " + index_path.string());
    json idx;
    try {
        in >> idx;
    } catch (const json::exception& e) {
        throw input_error("malformed embedding index " + index_path.string() + ": " + e.what());
    }
    if (!idx.contains("dim") || !idx.contains("count") || !idx.contains("names") ||
        idx.value("dtype", "") != "f32le")
        throw input_error("embedding index " + index_path.string() +
                          " missing dim/count/names or dtype != f32le");
    dim_ = idx["dim"].get<int>();
    std::size_t count = idx["count"].get<std::size_t>();
    names_ = idx["names"].get<std::vector<std::string>>();
    if (dim_ <= 0 || names_.size() != count)
        throw input_error("embedding index " + index_path.string() +
                          ": names length disagrees with count");
    for (std::size_t i = 0; i < names_.size(); ++i) index_[names_[i]] = i;

    std::filesystem::path bin_path = dir / "vectors.bin";
    std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
    if (!bin) throw input_error("cannot open embedding data " + bin_path.string());
    std::size_t expected = count * static_cast<std::size_t>(dim_) * sizeof(float);
    std::size_t actual = static_cast<std::size_t>(bin.tellg());
    if (actual != expected)
        throw input_error("embedding data " + bin_path.string() + " is " +
                          std::to_string(actual) + " bytes, expected " +
                          std::to_string(expected));
    data_.resize(count * static_cast<std::size_t>(dim_));
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(data_.data()), static_cast<std::streamsize>(expected));
    if (!bin) throw input_error("short read from " + bin_path.string());
}

EmbeddingVector FileEmbeddingStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
        throw input_error("embedding store has no entry named \"" + name + "\"");
    EmbeddingVector v;
    v.values.reserve(dim_);
    const float* row = data_.data() + it->second * static_cast<std::size_t>(dim_);
    for (int k = 0; k < dim_; ++k) v.values.push_back(static_cast<double>(row[k]));
    return v;
}

bool FileEmbeddingStore::has(const std::string& name) {
    return index_.count(name) != 0;
}

void FileEmbeddingStore::write(const std::filesystem::path& dir, int dim,
                               const std::vector<std::string>& names,
                               const std::vector<std::vector<float>>& vectors) {
    if (names.size() != vectors.size())
        throw input_error("embedding write: names/vectors length mismatch");
    std::filesystem::create_directories(dir);
    json idx;
    idx["dim"] = dim;
    idx["count"] = names.size();
    idx["dtype"] = "f32le";
    idx["names"] = names;
    std::ofstream out(dir / "index.json");
    out << idx.dump(2) << "\n";

    std::ofstream bin(dir / "vectors.bin", std::ios::binary);
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != dim)
            throw input_error("embedding write: vector dimension mismatch");
        bin.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
}

}  // namespace ccm
