#include "atf/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "atf/digest.hpp"
#include "atf/errors.hpp"
#include "atf/log.hpp"
#include "atf/response_parsing.hpp"

namespace atf {

const std::vector<std::string>& canonical_entity_types() {
    static const std::vector<std::string> types = {"person", "organization", "date", "number", "location", "other"};
    return types;
}

std::string entity_argmax(const std::map<std::string, double>& scores) {
    std::string best;
    double best_score = -1.0;
    for (const auto& t : canonical_entity_types()) {
        if (auto it = scores.find(t); it != scores.end() && it->second > best_score) {
            best = t;
            best_score = it->second;
        }
    }
    for (const auto& [t, s] : scores) {
        if (s > best_score) {
            best = t;
            best_score = s;
        }
    }
    return best;
}

void CallLog::add(CallRecord r) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(r));
}

std::vector<CallRecord> CallLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

nlohmann::json CallLog::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : records()) {
        out.push_back({{"key", r.key},
                       {"template_id", r.template_id},
                       {"salt", r.salt},
                       {"prompt", r.prompt},
                       {"response", r.response},
                       {"cached", r.cached}});
    }
    return out;
}

namespace {

// Max-in-flight guard; released on scope exit.
class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
    ~SlotGuard() { s_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1024>& s_;
};

std::ptrdiff_t slot_count(std::size_t n) {
    return static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(n, 1, 1024));
}

} // namespace

ModelGateway::ModelGateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<Embedder> embedder,
                           std::shared_ptr<ResponseCache> cache, GatewayOptions options)
    : backend_(std::move(backend)),
      embedder_(std::move(embedder)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      options_(std::move(options)),
      slots_(slot_count(options_.max_in_flight)) {
    if (!backend_ || !embedder_) {
        throw ConfigError("gateway needs a chat backend and an embedder");
    }
    if (options_.temperature != 0.0) {
        throw ConfigError("temperature must be 0.0");
    }
    if (options_.max_retries < 0) {
        throw ConfigError("max_retries must be >= 0");
    }
}

ChatRequest ModelGateway::make_request(const PromptTemplate& t, std::string prompt, nlohmann::json inputs,
                                       std::string salt) const {
    ChatRequest r;
    r.template_id = std::string(t.id);
    r.template_digest = template_digest(t);
    r.prompt = std::move(prompt);
    r.model = options_.model;
    r.temperature = options_.temperature;
    r.salt = std::move(salt);
    r.inputs = std::move(inputs);
    return r;
}

std::string ModelGateway::call(const ChatRequest& request, const std::function<void(const std::string&)>& validate,
                               CallLog* log) {
    const std::string key = request.key();
    if (auto hit = cache_->get(key)) {
        try {
            validate(*hit);
            {
                std::lock_guard lock(counters_mutex_);
                ++counters_.cache_hits;
            }
            if (log != nullptr) {
                log->add({key, request.template_id, request.salt, request.prompt, *hit, true});
            }
            return *hit;
        } catch (const ParseError&) {
            log_warning("cached response for " + key + " no longer parses; refetching");
        }
    }

    std::string last_error;
    bool parse_failure = false;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            {
                std::lock_guard lock(counters_mutex_);
                ++counters_.retries;
            }
            if (options_.backoff_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms) * (1 << (attempt - 1)));
            }
        }
        std::string response;
        try {
            SlotGuard slot(slots_);
            {
                std::lock_guard lock(counters_mutex_);
                ++counters_.backend_calls;
            }
            response = backend_->complete(request);
        } catch (const FixtureMiss&) {
            throw;
        } catch (const BackendError& e) {
            last_error = e.what();
            parse_failure = false;
            continue;
        }
        if (log != nullptr) {
            log->add({key, request.template_id, request.salt, request.prompt, response, false});
        }
        try {
            validate(response);
        } catch (const ParseError& e) {
            last_error = e.what();
            parse_failure = true;
            continue;
        }
        cache_->put(key, request.template_id, response);
        return response;
    }
    const std::string msg = request.template_id + " failed after " + std::to_string(options_.max_retries + 1) +
                            " attempts: " + last_error;
    if (parse_failure) {
        throw ParseError(msg);
    }
    throw BackendError(msg);
}

EntityDistribution ModelGateway::predict_entity_type(const std::string& question, CallLog* log) {
    if (question.empty()) {
        throw ConfigError("question must not be empty");
    }
    const auto request = make_request(entity_type_template(), render_entity_prompt(question), {{"question", question}});
    EntityDistribution d;
    try {
        const auto response = call(request, [](const std::string& r) { parse_entity_response(r); }, log);
        d.scores = parse_entity_response(response);
    } catch (const ParseError& e) {
        log_warning(std::string("entity type fallback: ") + e.what());
        const double p = 1.0 / static_cast<double>(canonical_entity_types().size());
        d.scores.clear();
        for (const auto& t : canonical_entity_types()) {
            d.scores[t] = p;
        }
        d.fallback = true;
        d.argmax = "other";
        return d;
    }
    d.argmax = entity_argmax(d.scores);
    return d;
}

EssentialColumns ModelGateway::extract_essential_columns(const std::string& question,
                                                         std::span<const std::string> headers,
                                                         const std::optional<std::string>& answer_type,
                                                         CallLog* log) {
    if (headers.empty()) {
        throw ConfigError("essential column extraction needs headers");
    }
    const std::vector<std::string> hv(headers.begin(), headers.end());
    const auto request = make_request(essential_columns_template(),
                                      render_essential_prompt(question, headers, answer_type),
                                      {{"question", question}, {"headers", hv}, {"answer_type", answer_type.value_or("")}});
    EssentialColumns out;
    try {
        const auto response = call(request, [](const std::string& r) { parse_string_list(r); }, log);
        const auto names = parse_string_list(response);
        auto m = match_columns(names, headers);
        out.columns = std::move(m.matched);
        out.dropped = std::move(m.unmatched);
        for (const auto& d : out.dropped) {
            log_warning("essential column '" + d + "' is not a header; dropped");
        }
    } catch (const ParseError& e) {
        log_warning(std::string("essential columns fallback: ") + e.what());
        out.fallback = true;
    }
    return out;
}

DescriptionSet ModelGateway::generate_column_descriptions(const std::string& question,
                                                          const std::optional<std::string>& answer_type,
                                                          std::span<const ColumnSamples> columns, CallLog* log) {
    nlohmann::json cols = nlohmann::json::array();
    std::vector<std::string> headers;
    for (const auto& c : columns) {
        if (c.samples.empty()) {
            throw ConfigError("column '" + c.column + "' has no sampled values");
        }
        cols.push_back({{"column", c.column}, {"samples", c.samples}});
        headers.push_back(c.column);
    }
    const auto request = make_request(column_description_template(),
                                      render_description_prompt(question, answer_type, columns),
                                      {{"question", question}, {"answer_type", answer_type.value_or("")}, {"columns", cols}});
    std::map<std::string, std::string> parsed;
    try {
        const auto response = call(
            request,
            [&](const std::string& r) {
                if (parse_column_lines(r, headers).empty()) {
                    throw ParseError("description response has no 'column: description' lines");
                }
            },
            log);
        parsed = parse_column_lines(response, headers);
    } catch (const ParseError& e) {
        log_warning(std::string("column descriptions fallback: ") + e.what());
    }
    DescriptionSet out;
    for (const auto& c : columns) {
        if (auto it = parsed.find(c.column); it != parsed.end()) {
            out.columns.push_back({c.column, it->second, false});
        } else {
            std::string text = "values like: ";
            for (std::size_t i = 0; i < c.samples.size(); ++i) {
                text += (i > 0 ? ", " : "") + c.samples[i];
            }
            out.columns.push_back({c.column, text, true});
            ++out.synthetic;
        }
    }
    return out;
}

ScoringPass ModelGateway::score_columns_once(const std::string& question,
                                             const std::optional<std::string>& answer_type,
                                             std::span<const ColumnDescription> descriptions, std::size_t iteration,
                                             CallLog* log) {
    nlohmann::json descs = nlohmann::json::array();
    std::vector<std::string> headers;
    for (const auto& d : descriptions) {
        descs.push_back({{"column", d.column}, {"text", d.text}});
        headers.push_back(d.column);
    }
    const auto request = make_request(
        column_scoring_template(), render_scoring_prompt(question, answer_type, descriptions),
        {{"question", question}, {"answer_type", answer_type.value_or("")}, {"descriptions", descs}},
        "iteration:" + std::to_string(iteration));
    ScoringPass pass;
    try {
        const auto response = call(request, [&](const std::string& r) { parse_score_lines(r, headers); }, log);
        pass.scores = parse_score_lines(response, headers);
    } catch (const ParseError& e) {
        log_warning("scoring pass " + std::to_string(iteration) + " discarded: " + e.what());
        pass.discarded = true;
        pass.missing = headers;
        return pass;
    }
    for (const auto& h : headers) {
        if (pass.scores.count(h) == 0) {
            pass.missing.push_back(h);
        }
    }
    return pass;
}

std::vector<Vector> ModelGateway::embed(std::span<const std::string> texts) {
    if (texts.empty()) {
        return {};
    }
    // Only remote embeddings are worth caching; local ones are cheap and exact.
    const bool cached = embedder_->name() == "http";
    std::vector<Vector> out(texts.size());
    std::vector<std::string> todo;
    std::vector<std::size_t> todo_index;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cached) {
            const nlohmann::json material = {"embed", embedder_->name(), options_.model, texts[i]};
            if (auto hit = cache_->get(sha256_hex(material.dump()))) {
                auto j = nlohmann::json::parse(*hit, nullptr, false);
                if (!j.is_discarded() && j.is_array()) {
                    out[i] = j.get<Vector>();
                    std::lock_guard lock(counters_mutex_);
                    ++counters_.cache_hits;
                    continue;
                }
            }
        }
        todo.push_back(texts[i]);
        todo_index.push_back(i);
    }
    if (todo.empty()) {
        return out;
    }
    std::vector<Vector> fresh;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0 && options_.backoff_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms) * (1 << (attempt - 1)));
        }
        try {
            SlotGuard slot(slots_);
            {
                std::lock_guard lock(counters_mutex_);
                ++counters_.embed_calls;
            }
            fresh = embedder_->embed(todo);
            break;
        } catch (const FixtureMiss&) {
            throw;
        } catch (const BackendError& e) {
            last_error = e.what();
            if (attempt == options_.max_retries) {
                throw BackendError("embedding failed after " + std::to_string(attempt + 1) +
                                   " attempts: " + last_error);
            }
        }
    }
    for (std::size_t j = 0; j < todo.size(); ++j) {
        if (cached) {
            const nlohmann::json material = {"embed", embedder_->name(), options_.model, todo[j]};
            cache_->put(sha256_hex(material.dump()), "embedding", nlohmann::json(fresh[j]).dump());
        }
        out[todo_index[j]] = std::move(fresh[j]);
    }
    return out;
}

GatewayCounters ModelGateway::counters() const {
    std::lock_guard lock(counters_mutex_);
    return counters_;
}

} // namespace atf
