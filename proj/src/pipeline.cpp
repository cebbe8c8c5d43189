#include "atf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <set>
#include <thread>

#include "atf/cluster_select.hpp"
#include "atf/log.hpp"
#include "atf/random.hpp"
#include "atf/relevance.hpp"
#include "atf/tokenizer.hpp"
#include "atf/trace_json.hpp"

namespace atf {

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw ConfigError("unknown config field '" + where + key + "'");
        }
    }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

} // namespace

void PipelineConfig::validate() const {
    if (iterations < 1) {
        throw ConfigError("iterations must be >= 1");
    }
    if (clusters < 1) {
        throw ConfigError("clusters must be >= 1");
    }
    if (sample_size < 1) {
        throw ConfigError("sample_size must be >= 1");
    }
    if (kmeans_restarts < 1) {
        throw ConfigError("kmeans_restarts must be >= 1");
    }
    fusion.validate();
    try {
        (void)atf::tokenizer(tokenizer);
    } catch (const UnknownTokenizer& e) {
        throw ConfigError(e.what());
    }
    const auto& b = backend;
    if (b.kind != "mock" && b.kind != "fixture" && b.kind != "http") {
        throw ConfigError("backend.kind must be mock, fixture or http");
    }
    if (b.kind == "fixture" && b.fixture_path.empty()) {
        throw ConfigError("fixture backend needs backend.fixture_path");
    }
    if (b.kind == "http" && b.endpoint.empty()) {
        throw ConfigError("http backend needs backend.endpoint");
    }
    if (b.embedder != "hashing" && b.embedder != "http" && b.embedder != "fixture") {
        throw ConfigError("backend.embedder must be hashing, http or fixture");
    }
    if (b.embedder == "http" && b.embedding_endpoint.empty()) {
        throw ConfigError("http embedder needs backend.embedding_endpoint");
    }
    if (b.embedder == "fixture" && b.fixture_path.empty()) {
        throw ConfigError("fixture embedder needs backend.fixture_path");
    }
    if (b.max_retries < 0 || b.backoff_ms < 0 || b.timeout_ms <= 0 || b.max_in_flight < 1 || b.embedding_dim < 1) {
        throw ConfigError("backend limits out of range");
    }
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    reject_unknown(j,
                   {"iterations", "clusters", "row_ratio", "fusion", "sample_size", "seed", "selection_mode",
                    "keep_original_row_order", "macro_accuracy", "k_other", "kmeans_restarts", "tokenizer", "backend"},
                   "");
    PipelineConfig c;
    read(j, "iterations", c.iterations);
    read(j, "clusters", c.clusters);
    read(j, "row_ratio", c.fusion.alpha);
    read(j, "sample_size", c.sample_size);
    read(j, "seed", c.seed);
    read(j, "keep_original_row_order", c.keep_original_row_order);
    read(j, "macro_accuracy", c.macro_accuracy);
    read(j, "k_other", c.k_other);
    read(j, "kmeans_restarts", c.kmeans_restarts);
    read(j, "tokenizer", c.tokenizer);
    if (j.contains("selection_mode")) {
        std::string mode;
        read(j, "selection_mode", mode);
        if (mode == "atf") {
            c.selection_mode = SelectionMode::atf;
        } else if (mode == "topk_l2") {
            c.selection_mode = SelectionMode::topk_l2;
        } else {
            throw ConfigError("selection_mode must be atf or topk_l2");
        }
    }
    if (j.contains("fusion")) {
        const auto& f = j.at("fusion");
        reject_unknown(f, {"tfidf", "bm25", "dense", "k1", "b"}, "fusion.");
        read(f, "tfidf", c.fusion.w_tfidf);
        read(f, "bm25", c.fusion.w_bm25);
        read(f, "dense", c.fusion.w_dense);
        read(f, "k1", c.fusion.k1);
        read(f, "b", c.fusion.b);
    }
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        reject_unknown(b,
                       {"kind", "fixture_path", "endpoint", "embedding_endpoint", "model", "embedding_model",
                        "api_key_env", "timeout_ms", "max_retries", "backoff_ms", "cache_dir", "max_in_flight",
                        "embedder", "embedding_dim"},
                       "backend.");
        auto& o = c.backend;
        read(b, "kind", o.kind);
        read(b, "fixture_path", o.fixture_path);
        read(b, "endpoint", o.endpoint);
        read(b, "embedding_endpoint", o.embedding_endpoint);
        read(b, "model", o.model);
        read(b, "embedding_model", o.embedding_model);
        read(b, "api_key_env", o.api_key_env);
        read(b, "timeout_ms", o.timeout_ms);
        read(b, "max_retries", o.max_retries);
        read(b, "backoff_ms", o.backoff_ms);
        read(b, "cache_dir", o.cache_dir);
        read(b, "max_in_flight", o.max_in_flight);
        read(b, "embedder", o.embedder);
        read(b, "embedding_dim", o.embedding_dim);
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path);
    }
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("config " + path + " is not valid JSON");
    }
    return from_json(j);
}

nlohmann::json PipelineConfig::to_json() const {
    const auto& b = backend;
    return {
        {"iterations", iterations},
        {"clusters", clusters},
        {"row_ratio", fusion.alpha},
        {"fusion", {{"tfidf", fusion.w_tfidf}, {"bm25", fusion.w_bm25}, {"dense", fusion.w_dense}, {"k1", fusion.k1}, {"b", fusion.b}}},
        {"sample_size", sample_size},
        {"seed", seed},
        {"selection_mode", selection_mode == SelectionMode::atf ? "atf" : "topk_l2"},
        {"keep_original_row_order", keep_original_row_order},
        {"macro_accuracy", macro_accuracy},
        {"k_other", k_other},
        {"kmeans_restarts", kmeans_restarts},
        {"tokenizer", tokenizer},
        {"backend",
         {{"kind", b.kind},
          {"fixture_path", b.fixture_path},
          {"endpoint", b.endpoint},
          {"embedding_endpoint", b.embedding_endpoint},
          {"model", b.model},
          {"embedding_model", b.embedding_model},
          {"api_key_env", b.api_key_env},
          {"timeout_ms", b.timeout_ms},
          {"max_retries", b.max_retries},
          {"backoff_ms", b.backoff_ms},
          {"cache_dir", b.cache_dir},
          {"max_in_flight", b.max_in_flight},
          {"embedder", b.embedder},
          {"embedding_dim", b.embedding_dim}}},
    };
}

RowSignals RowSignals::from_json(const nlohmann::json& j) {
    RowSignals s;
    if (j.is_array()) {
        // One [tfidf, bm25, dense] triple per row.
        for (const auto& row : j) {
            if (!row.is_array() || row.size() != 3) {
                throw SchemaError("row signal entries must be [tfidf, bm25, dense] triples");
            }
            s.tfidf.push_back(row[0].get<double>());
            s.bm25.push_back(row[1].get<double>());
            s.dense.push_back(row[2].get<double>());
        }
        return s;
    }
    s.tfidf = j.at("tfidf").get<std::vector<double>>();
    s.bm25 = j.at("bm25").get<std::vector<double>>();
    s.dense = j.at("dense").get<std::vector<double>>();
    if (s.tfidf.size() != s.bm25.size() || s.tfidf.size() != s.dense.size()) {
        throw LengthMismatch("row signal vectors differ in length");
    }
    return s;
}

std::shared_ptr<ModelGateway> make_gateway(const BackendConfig& config) {
    std::optional<Fixture> fixture;
    if (!config.fixture_path.empty() && (config.kind == "fixture" || config.embedder == "fixture")) {
        fixture = Fixture::load(config.fixture_path);
    }
    HttpOptions http;
    http.endpoint = config.endpoint;
    http.embedding_endpoint = config.embedding_endpoint;
    http.embedding_model = config.embedding_model;
    http.api_key_env = config.api_key_env;
    http.timeout_ms = config.timeout_ms;

    std::shared_ptr<ChatBackend> backend;
    if (config.kind == "mock") {
        backend = std::make_shared<MockBackend>();
    } else if (config.kind == "fixture") {
        backend = std::make_shared<FixtureBackend>(*fixture);
    } else if (config.kind == "http") {
        backend = std::make_shared<HttpChatBackend>(http);
    } else {
        throw ConfigError("unknown backend kind " + config.kind);
    }

    std::shared_ptr<Embedder> embedder;
    if (config.embedder == "hashing") {
        embedder = std::make_shared<HashingEmbedder>(config.embedding_dim);
    } else if (config.embedder == "fixture") {
        embedder = std::make_shared<FixtureEmbedder>(fixture->embeddings);
    } else if (config.embedder == "http") {
        embedder = std::make_shared<HttpEmbedder>(http);
    } else {
        throw ConfigError("unknown embedder " + config.embedder);
    }

    auto cache = config.cache_dir.empty() ? std::make_shared<ResponseCache>()
                                          : std::make_shared<ResponseCache>(config.cache_dir);
    GatewayOptions options;
    options.model = config.model;
    options.max_retries = config.max_retries;
    options.backoff_ms = config.backoff_ms;
    options.max_in_flight = config.max_in_flight;
    return std::make_shared<ModelGateway>(std::move(backend), std::move(embedder), std::move(cache), options);
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    gateway_ = make_gateway(config_.backend);
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<ModelGateway> gateway)
    : config_(std::move(config)), gateway_(std::move(gateway)) {
    config_.validate();
    if (!gateway_) {
        throw ConfigError("pipeline needs a gateway");
    }
}

RunOutput Pipeline::run(const Table& table, const std::string& question,
                        const std::optional<RowSignals>& row_signals) const {
    using nlohmann::json;
    const auto& headers = table.headers();
    CallLog calls;
    json trace = json::object();
    std::vector<std::string> warnings;
    trace["question"] = question;
    trace["table"] = {{"source_id", table.source_id().value_or("")},
                      {"n_rows", table.n_rows()},
                      {"n_cols", table.n_cols()},
                      {"headers", headers}};
    trace["config"] = config_.to_json();
    const bool record_embeddings = gateway_->embedder_name() != "hashing";
    json embeddings = json::array();

    auto fail = [&](const std::string& stage, const std::string& message) -> PipelineError {
        trace["warnings"] = warnings;
        trace["backend_log"] = backend_log_json(calls);
        if (record_embeddings) {
            trace["embeddings"] = embeddings;
        }
        return PipelineError(stage, message, trace);
    };
    auto stage = [&](const std::string& name, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw fail(name, e.what());
        }
    };
    auto embed = [&](std::span<const std::string> texts) {
        auto vecs = gateway_->embed(texts);
        if (record_embeddings) {
            for (std::size_t i = 0; i < texts.size(); ++i) {
                embeddings.push_back({{"text", texts[i]}, {"vector", vecs[i]}});
            }
        }
        return vecs;
    };

    if (question.empty()) {
        throw fail("input", "question is empty");
    }
    if (table.n_rows() == 0) {
        throw fail("input", "table has no rows");
    }

    const auto entity = stage("entity", [&] { return gateway_->predict_entity_type(question, &calls); });
    trace["entity"] = to_json(entity);
    std::optional<std::string> hint;
    if (entity.fallback) {
        warnings.push_back("entity type response unusable; uniform fallback");
    } else {
        hint = entity.argmax;
    }

    const auto essential =
        stage("essential", [&] { return gateway_->extract_essential_columns(question, headers, hint, &calls); });
    trace["essential"] = to_json(essential);
    if (essential.fallback) {
        warnings.push_back("essential column response unusable; empty set");
    }
    for (const auto& d : essential.dropped) {
        warnings.push_back("essential column '" + d + "' is not a header");
    }

    std::vector<ColumnSamples> samples;
    for (std::size_t j = 0; j < headers.size(); ++j) {
        samples.push_back({headers[j], sample_cell_values(table, headers[j], config_.sample_size,
                                                          derive_seed(config_.seed, "samples", j))});
    }
    const auto descriptions = stage(
        "descriptions", [&] { return gateway_->generate_column_descriptions(question, hint, samples, &calls); });
    trace["descriptions"] = to_json(std::span<const ColumnDescription>(descriptions.columns));
    for (const auto& d : descriptions.columns) {
        if (d.synthetic) {
            warnings.push_back("description for '" + d.column + "' back-filled from samples");
        }
    }

    const auto passes = stage("scoring", [&] {
        std::vector<std::future<ScoringPass>> futures;
        for (std::size_t t = 0; t < config_.iterations; ++t) {
            futures.push_back(std::async(std::launch::async, [&, t] {
                return gateway_->score_columns_once(question, hint, descriptions.columns, t, &calls);
            }));
        }
        std::vector<ScoringPass> out;
        for (auto& f : futures) {
            out.push_back(f.get());
        }
        return out;
    });
    IterationRecord record;
    std::set<std::string> unscored;
    for (const auto& h : headers) {
        auto& list = record.scores[h];
        for (const auto& p : passes) {
            if (auto it = p.scores.find(h); !p.discarded && it != p.scores.end()) {
                list.push_back(it->second);
            }
        }
        if (list.empty()) {
            list.push_back(0.0);
            unscored.insert(h);
            warnings.push_back("column '" + h + "' received no score; scored 0");
        }
    }
    for (std::size_t t = 0; t < passes.size(); ++t) {
        if (passes[t].discarded) {
            warnings.push_back("scoring pass " + std::to_string(t) + " discarded");
        } else {
            for (const auto& m : passes[t].missing) {
                warnings.push_back("scoring pass " + std::to_string(t) + " omitted '" + m + "'");
            }
        }
    }

    const auto pairs_and_vectors = stage("embedding", [&] {
        std::vector<std::string> texts = {question};
        for (const auto& d : descriptions.columns) {
            texts.push_back(column_embedding_text(d.column, d.text));
        }
        auto vecs = embed(texts);
        std::map<std::string, double> raw;
        for (std::size_t j = 0; j < headers.size(); ++j) {
            raw[headers[j]] = cosine_similarity(vecs[0], vecs[j + 1]);
        }
        const auto agg = aggregate_iterations(record);
        auto pairs = build_score_pairs(headers, agg, minmax_normalize(raw), raw);
        return std::make_pair(std::move(pairs), std::move(vecs));
    });
    const auto& pairs = pairs_and_vectors.first;
    const auto& vectors = pairs_and_vectors.second;
    json scores = json::array();
    for (const auto& p : pairs) {
        auto entry = to_json(p);
        entry["scores"] = record.scores.at(p.column);
        entry["n_effective"] = unscored.count(p.column) > 0 ? 0 : record.n_effective(p.column);
        scores.push_back(std::move(entry));
    }
    trace["column_scores"] = scores;

    const auto columns = stage("columns", [&] {
        if (config_.selection_mode == SelectionMode::topk_l2) {
            trace["selection"] = {{"mode", "topk_l2"}};
            return topk_l2_baseline(pairs);
        }
        SelectionInput input;
        input.question = question;
        input.pairs = pairs;
        input.question_vector = vectors[0];
        input.column_vectors.assign(vectors.begin() + 1, vectors.end());
        input.essential = essential.columns;
        SelectionOptions options;
        options.kmeans.k = config_.clusters;
        options.kmeans.seed = derive_seed(config_.seed, "kmeans");
        options.kmeans.restarts = config_.kmeans_restarts;
        options.k_other = config_.k_other;
        const auto selection = select_columns(input, options);
        trace["selection"] = to_json(selection, pairs);
        trace["selection"]["mode"] = "atf";
        return selection.columns;
    });
    trace["selected_columns"] = columns;

    const auto rows = stage("rows", [&] {
        const std::size_t n = table.n_rows();
        RowSignals signals;
        if (row_signals) {
            signals = *row_signals;
            if (signals.tfidf.size() != n || signals.bm25.size() != n || signals.dense.size() != n) {
                throw LengthMismatch("recorded row signals do not cover " + std::to_string(n) + " rows");
            }
        } else {
            std::vector<std::string> texts;
            texts.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                texts.push_back(flatten_row_text(table, i, columns));
            }
            signals.tfidf = tfidf_scores(question, texts);
            signals.bm25 = bm25_scores(question, texts, config_.fusion.k1, config_.fusion.b);
            const auto row_vecs = embed(texts);
            signals.dense = dense_scores(vectors[0], row_vecs);
        }
        return fuse_and_select(signals.tfidf, signals.bm25, signals.dense, config_.fusion);
    });
    trace["rows"] = to_json(rows);
    trace["row_signals_source"] = row_signals ? "recorded" : "computed";

    auto filtered = stage("assemble", [&] {
        return build_filtered_table(table, columns, rows.selected, config_.keep_original_row_order,
                                    config_.tokenizer);
    });
    trace["selected_rows"] = filtered.selected_row_indices;
    trace["stats"] = to_json(filtered.stats);
    trace["filtered_table"] = to_json(filtered.table);
    trace["warnings"] = warnings;
    trace["backend_log"] = backend_log_json(calls);
    if (record_embeddings) {
        trace["embeddings"] = embeddings;
    }
    for (const auto& w : warnings) {
        log(LogLevel::info, w);
    }
    filtered.trace = trace;
    return {std::move(filtered), std::move(trace)};
}

BatchReport Pipeline::run_batch(std::span<const BatchItem> items, std::size_t parallelism) const {
    std::set<std::string> ids;
    for (const auto& item : items) {
        if (!ids.insert(item.id).second) {
            throw ConfigError("duplicate batch id '" + item.id + "'");
        }
    }
    BatchReport report;
    report.items.resize(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            auto& out = report.items[i];
            out.id = items[i].id;
            try {
                out.output = run(items[i].table, items[i].question, items[i].row_signals);
                out.trace = out.output->trace;
            } catch (const PipelineError& e) {
                out.error = e.what();
                out.error_stage = e.stage();
                out.trace = e.partial_trace();
            } catch (const std::exception& e) {
                out.error = e.what();
                out.error_stage = "unknown";
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(items.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    std::size_t raw_cells = 0;
    std::size_t kept_cells = 0;
    std::size_t raw_tokens = 0;
    std::size_t kept_tokens = 0;
    double cell_ratio_sum = 0.0;
    double token_ratio_sum = 0.0;
    for (const auto& r : report.items) {
        if (!r.output) {
            ++report.failed;
            continue;
        }
        ++report.succeeded;
        const auto& s = r.output->filtered.stats;
        raw_cells += s.raw_cells;
        kept_cells += s.kept_cells;
        raw_tokens += s.raw_tokens;
        kept_tokens += s.kept_tokens;
        cell_ratio_sum += s.cell_reduction_ratio;
        token_ratio_sum += s.token_reduction_ratio;
    }
    const double ok = static_cast<double>(report.succeeded);
    report.summary = {
        {"items", report.items.size()},
        {"succeeded", report.succeeded},
        {"failed", report.failed},
        {"raw_cells", raw_cells},
        {"kept_cells", kept_cells},
        {"cells_removed", raw_cells - kept_cells},
        {"cell_reduction_ratio", raw_cells > 0 ? 1.0 - static_cast<double>(kept_cells) / static_cast<double>(raw_cells) : 0.0},
        {"mean_cell_reduction_ratio", ok > 0 ? cell_ratio_sum / ok : 0.0},
        {"raw_tokens", raw_tokens},
        {"kept_tokens", kept_tokens},
        {"token_reduction_ratio", raw_tokens > 0 ? 1.0 - static_cast<double>(kept_tokens) / static_cast<double>(raw_tokens) : 0.0},
        {"mean_token_reduction_ratio", ok > 0 ? token_ratio_sum / ok : 0.0},
    };
    return report;
}

nlohmann::json batch_item_json(const BatchItemResult& r) {
    if (!r.output) {
        return {{"id", r.id}, {"ok", false}, {"stage", r.error_stage}, {"error", r.error}};
    }
    const auto& f = r.output->filtered;
    return {{"id", r.id},
            {"ok", true},
            {"selected_columns", f.selected_columns},
            {"selected_rows", f.selected_row_indices},
            {"table", to_json(f.table)},
            {"stats", to_json(f.stats)}};
}

} // namespace atf
