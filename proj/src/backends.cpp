#include "atf/backends.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "atf/digest.hpp"
#include "atf/errors.hpp"
#include "atf/text.hpp"

namespace atf {

std::string ChatRequest::key() const {
    std::ostringstream temp;
    temp << std::setprecision(17) << temperature;
    const nlohmann::json material = {template_id, template_digest, prompt, model, temp.str(), salt};
    return sha256_hex(material.dump());
}

namespace {

const std::set<std::string> kStopwords = {"a",  "an", "the", "of", "in", "on", "for", "to",  "and",
                                          "or", "by", "at",  "is", "was", "be", "with", "as", "from"};

std::string format_score(double v) {
    std::ostringstream out;
    out << std::setprecision(6) << v;
    return out.str();
}

std::string mock_entity(const std::string& question) {
    const auto words = text::word_tokens(question);
    auto has = [&](std::string_view w) { return text::contains_word(words, w); };
    auto phrase = [&](std::string_view a, std::string_view b) {
        for (std::size_t i = 0; i + 1 < words.size(); ++i) {
            if (words[i] == a && words[i + 1] == b) {
                return true;
            }
        }
        return false;
    };
    std::string top = "other";
    if (has("who") || has("whom") || has("whose")) {
        top = "person";
    } else if (has("when") || phrase("what", "year") || phrase("which", "year") || has("date")) {
        top = "date";
    } else if (has("where") || phrase("which", "country") || phrase("which", "city")) {
        top = "location";
    } else if (phrase("how", "many") || phrase("how", "much") || has("number") || has("count") || has("total") ||
               has("average") || has("price") || has("money") || has("amount")) {
        top = "number";
    } else if (has("team") || has("company") || has("club") || has("organization") || has("party")) {
        top = "organization";
    }
    nlohmann::json out = nlohmann::json::object();
    for (const char* name : {"person", "organization", "date", "number", "location", "other"}) {
        out[name] = name == top ? (top == "other" ? 0.6 : 0.9) : 0.1;
    }
    return out.dump();
}

std::string mock_essential(const nlohmann::json& inputs) {
    const auto q = text::word_tokens(inputs.at("question").get<std::string>());
    const std::set<std::string> qset(q.begin(), q.end());
    nlohmann::json picked = nlohmann::json::array();
    for (const auto& h : inputs.at("headers")) {
        const auto header = h.get<std::string>();
        for (const auto& t : text::word_tokens(header)) {
            if (kStopwords.count(t) == 0 && qset.count(t) > 0) {
                picked.push_back(header);
                break;
            }
        }
    }
    return picked.dump();
}

std::string mock_descriptions(const nlohmann::json& inputs) {
    std::string out;
    for (const auto& c : inputs.at("columns")) {
        const auto column = c.at("column").get<std::string>();
        std::vector<std::string> samples;
        for (const auto& s : c.at("samples")) {
            if (samples.size() == 2) {
                break;
            }
            samples.push_back(s.get<std::string>());
        }
        out += column + ": Column " + column + " with values like " + text::join(samples, ", ") + "\n";
    }
    return out;
}

std::string mock_scores(const nlohmann::json& inputs) {
    const auto q = text::word_tokens(inputs.at("question").get<std::string>());
    const std::set<std::string> qset(q.begin(), q.end());
    std::string out;
    for (const auto& d : inputs.at("descriptions")) {
        const auto column = d.at("column").get<std::string>();
        const auto words = text::word_tokens(column + " " + d.at("text").get<std::string>());
        const std::set<std::string> cset(words.begin(), words.end());
        std::size_t overlap = 0;
        for (const auto& w : qset) {
            overlap += cset.count(w);
        }
        const double score = qset.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(qset.size());
        out += column + ": " + format_score(score) + "\n";
    }
    return out;
}

std::size_t iteration_of(const std::string& salt) {
    const std::string prefix = "iteration:";
    if (salt.rfind(prefix, 0) != 0) {
        return 0;
    }
    return static_cast<std::size_t>(std::stoul(salt.substr(prefix.size())));
}

} // namespace

std::string MockBackend::complete(const ChatRequest& request) {
    const auto& in = request.inputs;
    if (request.template_id == "entity_type/v1") {
        return mock_entity(in.at("question").get<std::string>());
    }
    if (request.template_id == "essential_columns/v1") {
        return mock_essential(in);
    }
    if (request.template_id == "column_description/v1") {
        return mock_descriptions(in);
    }
    if (request.template_id == "column_scoring/v1") {
        return mock_scores(in);
    }
    throw BackendError("mock backend has no rule for template " + request.template_id);
}

Script Script::from_json(const nlohmann::json& j) {
    Script s;
    s.entity = j.value("entity", nlohmann::json::object());
    s.essential = j.value("essential", std::vector<std::string>{});
    s.descriptions = j.value("descriptions", std::map<std::string, std::string>{});
    s.scores = j.value("scores", std::vector<std::map<std::string, double>>{});
    return s;
}

ScriptedBackend::ScriptedBackend(Script script) : script_(std::move(script)) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
    if (request.template_id == "entity_type/v1") {
        return script_.entity.dump();
    }
    if (request.template_id == "essential_columns/v1") {
        return nlohmann::json(script_.essential).dump();
    }
    if (request.template_id == "column_description/v1") {
        std::string out;
        for (const auto& c : request.inputs.at("columns")) {
            const auto column = c.at("column").get<std::string>();
            if (auto it = script_.descriptions.find(column); it != script_.descriptions.end()) {
                out += column + ": " + it->second + "\n";
            }
        }
        return out;
    }
    if (request.template_id == "column_scoring/v1") {
        const std::size_t it = iteration_of(request.salt);
        if (it >= script_.scores.size()) {
            throw BackendError("script has no scores for pass " + std::to_string(it));
        }
        std::string out;
        for (const auto& d : request.inputs.at("descriptions")) {
            const auto column = d.at("column").get<std::string>();
            if (auto s = script_.scores[it].find(column); s != script_.scores[it].end()) {
                out += column + ": " + format_score(s->second) + "\n";
            }
        }
        return out;
    }
    throw BackendError("script has no answer for template " + request.template_id);
}

Fixture Fixture::from_json(const nlohmann::json& j) {
    Fixture f;
    const nlohmann::json* entries = nullptr;
    if (j.is_array()) {
        entries = &j;
    } else if (j.is_object()) {
        if (j.contains("entries")) {
            entries = &j.at("entries");
        } else if (j.contains("backend_log")) {
            entries = &j.at("backend_log");
        }
        if (j.contains("embeddings")) {
            for (const auto& e : j.at("embeddings")) {
                f.embeddings[e.at("text").get<std::string>()] = e.at("vector").get<Vector>();
            }
        }
    }
    if (entries == nullptr || !entries->is_array()) {
        throw SchemaError("fixture must be an array of entries or hold 'entries' / 'backend_log'");
    }
    for (const auto& e : *entries) {
        FixtureEntry entry{e.at("key").get<std::string>(), e.value("prompt", ""),
                           e.at("response").get<std::string>()};
        f.entries[entry.key] = std::move(entry);
    }
    return f;
}

Fixture Fixture::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open fixture " + path);
    }
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ParseError("fixture " + path + " is not valid JSON");
    }
    return from_json(j);
}

nlohmann::json Fixture::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& [_, e] : entries) {
        entries_json.push_back({{"key", e.key}, {"prompt", e.prompt}, {"response", e.response}});
    }
    nlohmann::json emb = nlohmann::json::array();
    for (const auto& [t, v] : embeddings) {
        emb.push_back({{"text", t}, {"vector", v}});
    }
    return {{"entries", entries_json}, {"embeddings", emb}};
}

FixtureBackend::FixtureBackend(Fixture fixture) : fixture_(std::move(fixture)) {}

std::string FixtureBackend::complete(const ChatRequest& request) {
    const auto key = request.key();
    auto it = fixture_.entries.find(key);
    if (it == fixture_.entries.end()) {
        throw FixtureMiss(key);
    }
    return it->second.response;
}

} // namespace atf
