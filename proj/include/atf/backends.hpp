#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "atf/embedding.hpp"

namespace atf {

struct ChatRequest {
    std::string template_id;
    std::string template_digest;
    std::string prompt;
    std::string model;
    double temperature = 0.0;
    /// Distinguishes otherwise identical requests, e.g. repeated scoring passes.
    std::string salt;
    /// Structured arguments the prompt was rendered from. Offline backends
    /// answer from these; the HTTP backend sends only the prompt.
    nlohmann::json inputs = nlohmann::json::object();

    /// SHA-256 over template id and digest, prompt, model, temperature and salt.
    std::string key() const;
};

/// A chat-completion backend returning the raw assistant text.
/// Implementations must be callable from several threads.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic rule-based answers; no network, no state.
class MockBackend : public ChatBackend {
public:
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }
};

/// Canned answers for one question: entity JSON, essential list, one
/// description per column and one score map per scoring pass.
struct Script {
    nlohmann::json entity = nlohmann::json::object();
    std::vector<std::string> essential;
    std::map<std::string, std::string> descriptions;
    std::vector<std::map<std::string, double>> scores;

    static Script from_json(const nlohmann::json& j);
};

class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(Script script);
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "scripted"; }

private:
    Script script_;
};

struct FixtureEntry {
    std::string key;
    std::string prompt;
    std::string response;
};

struct Fixture {
    std::map<std::string, FixtureEntry> entries;
    std::map<std::string, Vector> embeddings;

    /// Accepts an array of entries, or an object holding `entries` or
    /// `backend_log` and optionally `embeddings`.
    static Fixture from_json(const nlohmann::json& j);
    static Fixture load(const std::string& path);
    nlohmann::json to_json() const;
};

/// Replays recorded responses by request key; throws FixtureMiss otherwise.
class FixtureBackend : public ChatBackend {
public:
    explicit FixtureBackend(Fixture fixture);
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "fixture"; }

private:
    Fixture fixture_;
};

struct HttpOptions {
    /// Full URL of the chat-completions route, e.g. https://host/v1/chat/completions.
    std::string endpoint;
    /// Full URL of the embeddings route; empty disables HTTP embeddings.
    std::string embedding_endpoint;
    std::string embedding_model;
    std::string api_key_env = "ATF_API_KEY";
    int timeout_ms = 60000;
};

/// Generic JSON chat-completion client with bearer authentication.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpOptions options);
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "http"; }

private:
    HttpOptions options_;
};

class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(HttpOptions options);
    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::string name() const override { return "http"; }

private:
    HttpOptions options_;
};

/// Splits an absolute http(s) URL into scheme://host[:port] and path.
/// Throws ConfigError.
std::pair<std::string, std::string> split_url(const std::string& url);

} // namespace atf
