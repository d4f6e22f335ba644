#include <httplib.h>
#include <json.hpp>

#include "ccmatch/embedding_store.hpp"
#include "ccmatch/errors.hpp"

namespace ccm {

using nlohmann::json;

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, int timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

EmbeddingVector HttpEmbeddingProvider::fetch(const std::string& name) {
    // endpoint_ is "http://host:port/path"
    auto scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos)
        throw usage_error("embedding endpoint must be an http URL: " + endpoint_);
    auto path_start = endpoint_.find('/', scheme_end + 3);
    std::string host = path_start == std::string::npos
                           ? endpoint_
                           : endpoint_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);

    json body;
    body["texts"] = json::array({name});
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res)
        throw remote_error("embedding request for \"" + name + "\" failed: " +
                           httplib::to_string(res.error()));
    if (res->status != 200)
        throw remote_error("embedding request for \"" + name + "\" returned HTTP " +
                           std::to_string(res->status));
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::exception& e) {
        throw remote_error("embedding response for \"" + name + "\" is not JSON: " + e.what());
    }
    if (!reply.contains("vectors") || !reply["vectors"].is_array() || reply["vectors"].empty())
        throw remote_error("embedding response for \"" + name + "\" lacks vectors");
    EmbeddingVector v;
    v.values = reply["vectors"][0].get<std::vector<double>>();
    if (reply.contains("dim") && reply["dim"].get<std::size_t>() != v.dim())
        throw remote_error("embedding response for \"" + name + "\" has inconsistent dim");
    return v;
}

EmbeddingVector HttpEmbeddingProvider::get(const std::string& name) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    EmbeddingVector v = fetch(name);
    cache_[name] = v;
    return v;
}

bool HttpEmbeddingProvider::has(const std::string& name) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_.count(name)) return true;
    try {
        cache_[name] = fetch(name);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace ccm
