#include <cstdlib>

#include <httplib.h>

#include "atf/backends.hpp"
#include "atf/errors.hpp"

namespace atf {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must be an absolute http(s) URL: " + url);
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported URL scheme: " + scheme);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

nlohmann::json post_json(const HttpOptions& options, const std::string& url, const nlohmann::json& body) {
    const auto [base, path] = split_url(url);
    httplib::Client client(base);
    const auto seconds = options.timeout_ms / 1000;
    const auto micros = (options.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers headers;
    if (const char* token = std::getenv(options.api_key_env.c_str()); token != nullptr && *token != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendError("request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendError("request to " + url + " returned HTTP " + std::to_string(res->status));
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
        throw BackendError("response from " + url + " is not JSON");
    }
    return parsed;
}

} // namespace

HttpChatBackend::HttpChatBackend(HttpOptions options) : options_(std::move(options)) {
    split_url(options_.endpoint);
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
    const nlohmann::json body = {
        {"model", request.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
    };
    const auto reply = post_json(options_, options_.endpoint, body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw BackendError("chat response has no choices[0].message.content");
    }
}

HttpEmbedder::HttpEmbedder(HttpOptions options) : options_(std::move(options)) {
    split_url(options_.embedding_endpoint);
}

std::vector<Vector> HttpEmbedder::embed(std::span<const std::string> texts) {
    const nlohmann::json body = {
        {"model", options_.embedding_model},
        {"input", std::vector<std::string>(texts.begin(), texts.end())},
    };
    const auto reply = post_json(options_, options_.embedding_endpoint, body);
    std::vector<Vector> out;
    try {
        const auto& data = reply.at("data");
        if (data.size() != texts.size()) {
            throw BackendError("embedding response has " + std::to_string(data.size()) + " vectors for " +
                               std::to_string(texts.size()) + " texts");
        }
        for (const auto& item : data) {
            Vector v = item.at("embedding").get<Vector>();
            l2_normalize(v);
            out.push_back(std::move(v));
        }
    } catch (const nlohmann::json::exception&) {
        throw BackendError("embedding response has no data[].embedding");
    }
    return out;
}

} // namespace atf
