#include "atf/case_fixture.hpp"

#include <cmath>
#include <fstream>

#include "atf/errors.hpp"
#include "atf/relevance.hpp"
#include "atf/trace_json.hpp"

namespace atf {

CaseFile CaseFile::from_json(const nlohmann::json& j) {
    CaseFile c;
    try {
        c.id = j.at("id").get<std::string>();
        c.question = j.at("question").get<std::string>();
        c.table = table_from_json(j.at("table"));
        const auto& script = j.at("script");
        c.script = Script::from_json(script);
        c.column_cosines = script.at("column_cosines").get<std::map<std::string, double>>();
        if (j.contains("row_signals") && !j.at("row_signals").is_null()) {
            c.row_signals = RowSignals::from_json(j.at("row_signals"));
        }
        c.expected = j.value("expected", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed case file: ") + e.what());
    }
    for (const auto& h : c.table.headers()) {
        if (c.column_cosines.count(h) == 0) {
            throw SchemaError("case '" + c.id + "' has no cosine for column '" + h + "'");
        }
    }
    return c;
}

CaseFile CaseFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open case file " + path);
    }
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ParseError("case file " + path + " is not valid JSON");
    }
    return from_json(j);
}

std::map<std::string, Vector> case_embeddings(const CaseFile& c) {
    std::map<std::string, Vector> out;
    out[c.question] = {1.0, 0.0};
    for (const auto& h : c.table.headers()) {
        auto d = c.script.descriptions.find(h);
        if (d == c.script.descriptions.end()) {
            throw SchemaError("case '" + c.id + "' has no description for column '" + h + "'");
        }
        const double cos = std::clamp(c.column_cosines.at(h), -1.0, 1.0);
        out[column_embedding_text(h, d->second)] = {cos, std::sqrt(std::max(0.0, 1.0 - cos * cos))};
    }
    return out;
}

nlohmann::json make_case_fixture(const CaseFile& c, PipelineConfig config) {
    config.iterations = c.script.scores.size();
    config.backend.max_retries = 0;
    config.backend.backoff_ms = 0;
    GatewayOptions options;
    options.model = config.backend.model;
    options.max_retries = 0;
    options.backoff_ms = 0;
    auto gateway = std::make_shared<ModelGateway>(std::make_shared<ScriptedBackend>(c.script),
                                                  std::make_shared<FixtureEmbedder>(case_embeddings(c)),
                                                  std::make_shared<ResponseCache>(), options);
    const Pipeline pipeline(config, gateway);
    const auto out = pipeline.run(c.table, c.question, c.row_signals);

    nlohmann::json embeddings = nlohmann::json::array();
    for (const auto& [text, v] : case_embeddings(c)) {
        embeddings.push_back({{"text", text}, {"vector", v}});
    }
    return {{"id", c.id}, {"entries", out.trace.at("backend_log")}, {"embeddings", embeddings}};
}

} // namespace atf
