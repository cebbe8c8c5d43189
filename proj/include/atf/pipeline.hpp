#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "atf/backends.hpp"
#include "atf/errors.hpp"
#include "atf/gateway.hpp"
#include "atf/row_filter.hpp"
#include "atf/table.hpp"

namespace atf {

enum class SelectionMode { atf, topk_l2 };

struct BackendConfig {
    /// "mock", "fixture" or "http".
    std::string kind = "mock";
    std::string fixture_path;
    std::string endpoint;
    std::string embedding_endpoint;
    std::string model = "gpt-4o-mini";
    std::string embedding_model;
    std::string api_key_env = "ATF_API_KEY";
    int timeout_ms = 60000;
    int max_retries = 3;
    int backoff_ms = 200;
    std::string cache_dir;
    std::size_t max_in_flight = 4;
    /// "hashing", "http" or "fixture".
    std::string embedder = "hashing";
    std::size_t embedding_dim = 256;
};

struct PipelineConfig {
    std::size_t iterations = 3;
    std::size_t clusters = 3;
    FusionConfig fusion;
    std::size_t sample_size = 5;
    std::uint64_t seed = 42;
    SelectionMode selection_mode = SelectionMode::atf;
    bool keep_original_row_order = false;
    bool macro_accuracy = false;
    std::size_t k_other = 1;
    std::size_t kmeans_restarts = 10;
    std::string tokenizer = "whitespace";
    BackendConfig backend;

    /// Throws ConfigError.
    void validate() const;
    /// Missing fields keep their defaults; unknown fields are rejected.
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

/// Recorded raw row signals that replace the computed TF-IDF, BM25 and dense scores.
struct RowSignals {
    std::vector<double> tfidf;
    std::vector<double> bm25;
    std::vector<double> dense;

    static RowSignals from_json(const nlohmann::json& j);
};

struct RunOutput {
    FilteredTable filtered;
    nlohmann::json trace;
};

/// A stage failed; carries the trace built up to that point.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& message, nlohmann::json partial_trace)
        : Error("stage '" + stage + "' failed: " + message),
          stage_(std::move(stage)),
          partial_trace_(std::move(partial_trace)) {}

    const std::string& stage() const noexcept { return stage_; }
    const nlohmann::json& partial_trace() const noexcept { return partial_trace_; }

private:
    std::string stage_;
    nlohmann::json partial_trace_;
};

struct BatchItem {
    std::string id;
    Table table;
    std::string question;
    std::optional<RowSignals> row_signals;
};

struct BatchItemResult {
    std::string id;
    std::optional<RunOutput> output;
    std::string error;
    std::string error_stage;
    nlohmann::json trace;
};

struct BatchReport {
    std::vector<BatchItemResult> items;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    /// Totals and mean ratios over successful items.
    nlohmann::json summary;
};

/// Builds the gateway described by `config` (backend, embedder and cache).
std::shared_ptr<ModelGateway> make_gateway(const BackendConfig& config);

class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);
    Pipeline(PipelineConfig config, std::shared_ptr<ModelGateway> gateway);

    RunOutput run(const Table& table, const std::string& question,
                  const std::optional<RowSignals>& row_signals = std::nullopt) const;

    /// Items may run concurrently; results keep input order and one failing
    /// item never aborts the rest. Throws ConfigError on duplicate ids.
    BatchReport run_batch(std::span<const BatchItem> items, std::size_t parallelism = 1) const;

    const PipelineConfig& config() const noexcept { return config_; }
    ModelGateway& gateway() const noexcept { return *gateway_; }

private:
    PipelineConfig config_;
    std::shared_ptr<ModelGateway> gateway_;
};

/// One JSON line per batch item: id, output table (or error) and stats.
nlohmann::json batch_item_json(const BatchItemResult& r);

} // namespace atf
