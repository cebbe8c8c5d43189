#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "atf/backends.hpp"
#include "atf/cache.hpp"
#include "atf/embedding.hpp"
#include "atf/prompts.hpp"

namespace atf {

const std::vector<std::string>& canonical_entity_types();

struct EntityDistribution {
    std::map<std::string, double> scores;
    std::string argmax;
    /// Uniform fallback after the response could not be parsed.
    bool fallback = false;
};

/// Highest score; ties prefer the canonical order, then name order.
std::string entity_argmax(const std::map<std::string, double>& scores);

struct EssentialColumns {
    std::vector<std::string> columns;
    std::vector<std::string> dropped;
    bool fallback = false;
};

struct DescriptionSet {
    std::vector<ColumnDescription> columns;
    std::size_t synthetic = 0;
};

struct ScoringPass {
    /// Only the columns the backend actually scored.
    std::map<std::string, double> scores;
    std::vector<std::string> missing;
    /// The whole pass was unusable and is ignored by aggregation.
    bool discarded = false;
};

struct CallRecord {
    std::string key;
    std::string template_id;
    std::string salt;
    std::string prompt;
    std::string response;
    bool cached = false;
};

/// Per-question record of model traffic; doubles as a replay fixture.
class CallLog {
public:
    void add(CallRecord r);
    std::vector<CallRecord> records() const;
    nlohmann::json to_json() const;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

struct GatewayOptions {
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    int max_retries = 3;
    int backoff_ms = 200;
    std::size_t max_in_flight = 4;
};

struct GatewayCounters {
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
    std::size_t retries = 0;
    std::size_t embed_calls = 0;
};

/// Every model interaction of the pipeline: prompt rendering, caching,
/// bounded concurrency, retries with exponential backoff, and the fallbacks
/// for unusable responses. Thread-safe.
class ModelGateway {
public:
    ModelGateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<Embedder> embedder,
                 std::shared_ptr<ResponseCache> cache = nullptr, GatewayOptions options = {});

    EntityDistribution predict_entity_type(const std::string& question, CallLog* log = nullptr);

    EssentialColumns extract_essential_columns(const std::string& question, std::span<const std::string> headers,
                                               const std::optional<std::string>& answer_type,
                                               CallLog* log = nullptr);

    DescriptionSet generate_column_descriptions(const std::string& question,
                                                const std::optional<std::string>& answer_type,
                                                std::span<const ColumnSamples> columns, CallLog* log = nullptr);

    ScoringPass score_columns_once(const std::string& question, const std::optional<std::string>& answer_type,
                                   std::span<const ColumnDescription> descriptions, std::size_t iteration,
                                   CallLog* log = nullptr);

    std::vector<Vector> embed(std::span<const std::string> texts);

    GatewayCounters counters() const;
    std::string embedder_name() const { return embedder_->name(); }
    const GatewayOptions& options() const noexcept { return options_; }

private:
    std::string call(const ChatRequest& request, const std::function<void(const std::string&)>& validate,
                     CallLog* log);
    ChatRequest make_request(const PromptTemplate& t, std::string prompt, nlohmann::json inputs,
                             std::string salt = {}) const;

    std::shared_ptr<ChatBackend> backend_;
    std::shared_ptr<Embedder> embedder_;
    std::shared_ptr<ResponseCache> cache_;
    GatewayOptions options_;
    std::counting_semaphore<1024> slots_;
    mutable std::mutex counters_mutex_;
    GatewayCounters counters_;
};

} // namespace atf
