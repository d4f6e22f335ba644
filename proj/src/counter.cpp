#include "ccmatch/counter.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ccmatch/errors.hpp"

namespace ccm {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// First balanced {...} block, respecting strings and escapes.
std::optional<std::string> first_json_object(const std::string& text) {
    std::size_t start = text.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t p = start; p < text.size(); ++p) {
            char c = text[p];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) return text.substr(start, p - start + 1);
            }
        }
        start = text.find('{', start + 1);
    }
    return std::nullopt;
}

std::string strip_code_fences(const std::string& text) {
    std::string out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).rfind("```", 0) == 0) continue;
        out += line;
        out += '\n';
    }
    return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open image file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string image_mime(const std::filesystem::path& path) {
    std::string ext = lower(path.extension().string());
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw usage_error("counter endpoint must be an http URL: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

std::string base64_encode(const std::string& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                     static_cast<unsigned char>(bytes[i + 2]);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

ParsedCounts parse_count_response(const std::string& text, const std::string& image_id) {
    std::string cleaned = strip_code_fences(text);
    auto obj_text = first_json_object(cleaned);
    if (!obj_text)
        throw input_error("counter response for image " + image_id +
                          " contains no JSON object; raw text: " + text);
    nlohmann::ordered_json obj;  // keep the counter's category order
    try {
        obj = nlohmann::ordered_json::parse(*obj_text);
    } catch (const json::exception& e) {
        throw input_error("counter response for image " + image_id +
                          " is not valid JSON (" + e.what() + "); raw text: " + text);
    }
    if (!obj.is_object())
        throw input_error("counter response for image " + image_id + " is not a JSON object");

    ParsedCounts out;
    out.counts.image_id = image_id;
    for (const auto& [key, value] : obj.items()) {
        std::string name = lower(trim(key));
        if (name.empty())
            throw input_error("counter response for image " + image_id +
                              " has an empty category key");
        std::int64_t count = 0;
        if (value.is_number_integer()) {
            count = value.get<std::int64_t>();
        } else if (value.is_number_float()) {
            double v = value.get<double>();
            if (std::floor(v) != v)
                throw input_error("count for \"" + name + "\" is not an integer");
            count = static_cast<std::int64_t>(v);
        } else {
            throw input_error("count for \"" + name + "\" is not numeric");
        }
        if (count < 0) throw input_error("count for \"" + name + "\" is negative");
        out.audit.emplace_back(name, count);
        if (count > 0) out.counts.counts.emplace_back(name, count);
    }
    out.counts.validate();
    return out;
}

std::string CounterAuditRecord::to_json() const {
    json j;
    j["image_id"] = image_id;
    j["prompt"] = prompt;
    j["raw_response"] = raw_response;
    json counts = json::object();
    // object key order is not load-bearing; `parsed` keeps the wire order
    json ordered = json::array();
    for (const auto& [name, count] : parsed) {
        counts[name] = count;
        ordered.push_back({{"category", name}, {"count", count}});
    }
    j["parsed"] = counts;
    j["parsed_order"] = ordered;
    json usage_j = json::object();
    if (usage.prompt_tokens) usage_j["prompt_tokens"] = *usage.prompt_tokens;
    if (usage.completion_tokens) usage_j["completion_tokens"] = *usage.completion_tokens;
    j["usage"] = usage_j;
    j["latency_ms"] = latency_ms;
    return j.dump(2) + "\n";
}

CounterAuditRecord CounterAuditRecord::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open audit record " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw input_error("malformed audit record " + path.string() + ": " + e.what());
    }
    CounterAuditRecord rec;
    rec.image_id = j.value("image_id", "");
    rec.prompt = j.value("prompt", "");
    rec.raw_response = j.value("raw_response", "");
    if (j.contains("parsed_order"))
        for (const auto& e : j["parsed_order"])
            rec.parsed.emplace_back(e.at("category").get<std::string>(),
                                    e.at("count").get<std::int64_t>());
    else if (j.contains("parsed"))
        for (const auto& [k, v] : j["parsed"].items())
            rec.parsed.emplace_back(k, v.get<std::int64_t>());
    if (j.contains("usage")) {
        if (j["usage"].contains("prompt_tokens"))
            rec.usage.prompt_tokens = j["usage"]["prompt_tokens"].get<std::int64_t>();
        if (j["usage"].contains("completion_tokens"))
            rec.usage.completion_tokens = j["usage"]["completion_tokens"].get<std::int64_t>();
    }
    rec.latency_ms = j.value("latency_ms", 0.0);
    return rec;
}

void CounterAuditRecord::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write audit record " + path.string());
    out << to_json();
}

HttpCounterClient::HttpCounterClient(CounterClientConfig config) : config_(std::move(config)) {}

CounterResult HttpCounterClient::count(const std::string& image_id,
                                       const std::filesystem::path& image_file,
                                       const std::string& prompt) {
    auto [host, path] = split_endpoint(config_.endpoint);

    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["top_p"] = config_.top_p;
    std::string data_url = "data:" + image_mime(image_file) + ";base64," +
                           base64_encode(read_file_bytes(image_file));
    body["messages"] = json::array({{{"role", "user"},
                                     {"content", json::array({
                                          {{"type", "text"}, {"text", prompt}},
                                          {{"type", "image_url"},
                                           {"image_url", {{"url", data_url}}}},
                                      })}}});

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key)
            throw usage_error("environment variable " + config_.api_key_env +
                              " (counter credential) is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto start = std::chrono::steady_clock::now();
    std::string last_error;
    httplib::Result res;
    for (int attempt = 0; attempt < std::max(1, config_.max_retries); ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
        httplib::Client client(host);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        break;
    }
    if (!res)
        throw remote_error("counter endpoint " + config_.endpoint + " unreachable for image " +
                           image_id + " (" + last_error + ")");
    if (res->status != 200)
        throw remote_error("counter endpoint " + config_.endpoint + " returned HTTP " +
                           std::to_string(res->status) + " for image " + image_id);
    double latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();

    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::exception& e) {
        throw remote_error("counter endpoint reply for image " + image_id +
                           " is not JSON: " + e.what());
    }
    if (!reply.contains("choices") || reply["choices"].empty())
        throw remote_error("counter endpoint reply for image " + image_id + " has no choices");
    std::string content = reply["choices"][0].at("message").at("content").get<std::string>();

    ParsedCounts parsed = parse_count_response(content, image_id);
    CounterResult result;
    result.counts = parsed.counts;
    result.audit.image_id = image_id;
    result.audit.prompt = prompt;
    result.audit.raw_response = content;
    result.audit.parsed = parsed.audit;
    result.audit.latency_ms = latency_ms;
    if (reply.contains("usage")) {
        const auto& u = reply["usage"];
        if (u.contains("prompt_tokens"))
            result.audit.usage.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
        if (u.contains("completion_tokens"))
            result.audit.usage.completion_tokens = u["completion_tokens"].get<std::int64_t>();
    }
    return result;
}

ReplayCounterClient::ReplayCounterClient(std::filesystem::path audit_dir)
    : audit_dir_(std::move(audit_dir)) {}

CounterResult ReplayCounterClient::count(const std::string& image_id,
                                         const std::filesystem::path&, const std::string&) {
    std::filesystem::path path = audit_dir_ / (image_id + ".json");
    CounterAuditRecord rec = CounterAuditRecord::from_json_file(path);
    ParsedCounts parsed = parse_count_response(rec.raw_response, image_id);
    CounterResult result;
    result.counts = parsed.counts;
    result.audit = rec;
    result.audit.parsed = parsed.audit;
    return result;
}

}  // namespace ccm
