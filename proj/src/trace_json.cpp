#include "atf/trace_json.hpp"

#include <algorithm>

namespace atf {

nlohmann::json to_json(const ReductionStats& s) {
    return {
        {"raw_rows", s.raw_rows},
        {"raw_cols", s.raw_cols},
        {"kept_rows", s.kept_rows},
        {"kept_cols", s.kept_cols},
        {"raw_cells", s.raw_cells},
        {"kept_cells", s.kept_cells},
        {"cells_removed", s.cells_removed()},
        {"cell_reduction_ratio", s.cell_reduction_ratio},
        {"tokenizer", s.tokenizer},
        {"raw_tokens", s.raw_tokens},
        {"kept_tokens", s.kept_tokens},
        {"token_reduction_ratio", s.token_reduction_ratio},
    };
}

ReductionStats reduction_stats_from_json(const nlohmann::json& j) {
    ReductionStats s;
    s.raw_rows = j.at("raw_rows").get<std::size_t>();
    s.raw_cols = j.at("raw_cols").get<std::size_t>();
    s.kept_rows = j.at("kept_rows").get<std::size_t>();
    s.kept_cols = j.at("kept_cols").get<std::size_t>();
    s.raw_cells = j.at("raw_cells").get<std::size_t>();
    s.kept_cells = j.at("kept_cells").get<std::size_t>();
    s.cell_reduction_ratio = j.at("cell_reduction_ratio").get<double>();
    s.tokenizer = j.value("tokenizer", "whitespace");
    s.raw_tokens = j.value("raw_tokens", std::size_t{0});
    s.kept_tokens = j.value("kept_tokens", std::size_t{0});
    s.token_reduction_ratio = j.value("token_reduction_ratio", 0.0);
    return s;
}

nlohmann::json to_json(const FilteredTable& f) {
    return {
        {"selected_columns", f.selected_columns},
        {"selected_rows", f.selected_row_indices},
        {"table", to_json(f.table)},
        {"stats", to_json(f.stats)},
    };
}

nlohmann::json to_json(const EntityDistribution& d) {
    return {{"scores", d.scores}, {"argmax", d.argmax}, {"fallback", d.fallback}};
}

nlohmann::json to_json(const EssentialColumns& e) {
    return {{"columns", e.columns}, {"dropped", e.dropped}, {"fallback", e.fallback}};
}

nlohmann::json to_json(std::span<const ColumnDescription> descriptions) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& d : descriptions) {
        out.push_back({{"column", d.column}, {"text", d.text}, {"synthetic", d.synthetic}});
    }
    return out;
}

nlohmann::json to_json(const ColumnScorePair& p) {
    return {{"column", p.column}, {"llm_final", p.llm_final}, {"emb_norm", p.emb_norm},
            {"mu", p.mu},         {"sigma", p.sigma},         {"emb_raw", p.emb_raw}};
}

namespace {

int stage_rank(const std::string& template_id) {
    static const char* order[] = {"entity_type/", "essential_columns/", "column_description/", "column_scoring/"};
    for (int i = 0; i < 4; ++i) {
        if (template_id.rfind(order[i], 0) == 0) {
            return i;
        }
    }
    return 4;
}

} // namespace

nlohmann::json backend_log_json(const CallLog& log) {
    auto records = log.records();
    std::stable_sort(records.begin(), records.end(), [](const CallRecord& a, const CallRecord& b) {
        const int ra = stage_rank(a.template_id);
        const int rb = stage_rank(b.template_id);
        if (ra != rb) {
            return ra < rb;
        }
        return a.salt < b.salt;
    });
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : records) {
        out.push_back({{"key", r.key}, {"template_id", r.template_id}, {"prompt", r.prompt}, {"response", r.response}});
    }
    return out;
}

} // namespace atf
