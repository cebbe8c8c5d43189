#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "atf/backends.hpp"
#include "atf/errors.hpp"
#include "atf/pipeline.hpp"
#include "support.hpp"

using namespace atf;

namespace {

PipelineConfig mock_config() {
    PipelineConfig c;
    c.backend.backoff_ms = 0;
    return c;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

} // namespace

TEST_CASE("configuration") {
    const auto c = PipelineConfig::from_json({{"iterations", 5}, {"row_ratio", 0.5}, {"seed", 7}});
    CHECK(c.iterations == 5);
    CHECK(c.fusion.alpha == 0.5);
    CHECK(PipelineConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS_AS(PipelineConfig::from_json({{"iteratons", 5}}), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json({{"iterations", 0}}), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json({{"fusion", {{"tfidf", 0.9}}}}), ConfigError);
}

TEST_CASE("single cell tables pass through") {
    Pipeline p(mock_config());
    const Table t({"h"}, {{"v"}});
    const auto out = p.run(t, "what is h");
    CHECK(out.filtered.table == t);
    CHECK(out.filtered.selected_row_indices == std::vector<std::size_t>{0});
    CHECK(out.filtered.stats.cells_removed() == 0);
}

TEST_CASE("recorded worked examples replay") {
    const auto t9 = support::replay_case("openwiki_777");
    const auto& e9 = t9.c.expected;
    CHECK(as_set(t9.out.filtered.selected_columns) == as_set(e9["columns"].get<std::vector<std::string>>()));
    CHECK(t9.out.filtered.selected_row_indices == e9["rows"].get<std::vector<std::size_t>>());
    const auto fused = e9["fused"].get<std::vector<double>>();
    for (std::size_t i = 0; i < fused.size(); ++i) {
        const auto row = t9.out.filtered.selected_row_indices[i];
        CHECK(std::abs(t9.out.trace["rows"]["rows"][row]["fused"].get<double>() - fused[i]) <= 5e-4);
    }
    const auto& table = t9.out.filtered.table;
    CHECK(table.cell(0, "Score") == "70-66-73-69=278");
    CHECK(table.cell(0, "Money_") == "48730.0");
    CHECK(t9.out.trace["entity"]["argmax"] == "number");
    CHECK(t9.out.trace["essential"]["columns"] == e9["essential"]);

    const auto t10 = support::replay_case("tabfact_77_7");
    const auto& e10 = t10.c.expected;
    CHECK(as_set(t10.out.filtered.selected_columns) == as_set(e10["columns"].get<std::vector<std::string>>()));
    CHECK(t10.out.filtered.selected_row_indices == e10["rows"].get<std::vector<std::size_t>>());
    for (const auto& cs : t10.out.trace["column_scores"]) {
        const auto name = cs["column"].get<std::string>();
        CHECK(std::abs(cs["llm_final"].get<double>() - e10["llm_final"][name].get<double>()) <= 5e-4);
    }
    CHECK(t10.out.trace["entity"]["argmax"] == "person");
}

TEST_CASE("replay rejects prompt drift") {
    auto c = CaseFile::load(support::data_path("cases/openwiki_777.case.json"));
    PipelineConfig config;
    config.backend.kind = "fixture";
    config.backend.embedder = "fixture";
    config.backend.fixture_path = support::data_path("cases/openwiki_777.fixture.json");
    Pipeline p(config);
    try {
        p.run(c.table, c.question + " please");
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "entity");
        CHECK(e.partial_trace().contains("question"));
    }
}

TEST_CASE("batch isolation") {
    const auto items = support::synthetic_corpus(3, 17);
    Pipeline recorder(mock_config());
    nlohmann::json log = nlohmann::json::array();
    for (std::size_t i : {0u, 2u}) {
        const auto out = recorder.run(items[i].table, items[i].question);
        for (const auto& e : out.trace["backend_log"]) {
            log.push_back(e);
        }
    }
    auto gateway = std::make_shared<ModelGateway>(std::make_shared<FixtureBackend>(Fixture::from_json(log)),
                                                  std::make_shared<HashingEmbedder>());
    Pipeline replay(mock_config(), gateway);
    const auto report = replay.run_batch(items, 2);
    CHECK(report.succeeded == 2);
    CHECK(report.failed == 1);
    CHECK(report.items[0].output.has_value());
    CHECK(!report.items[1].output.has_value());
    CHECK(report.items[1].error.find("fixture") != std::string::npos);
    CHECK(report.items[2].output.has_value());
    CHECK(report.summary["failed"] == 1);
}

TEST_CASE("batch determinism across parallelism") {
    const auto items = support::synthetic_corpus(24, 5);
    const auto serial = Pipeline(mock_config()).run_batch(items, 1);
    const auto parallel = Pipeline(mock_config()).run_batch(items, 8);
    CHECK(support::report_bytes(serial) == support::report_bytes(parallel));
    CHECK(serial.failed == 0);
}

TEST_CASE("batch edge cases") {
    Pipeline p(mock_config());
    const auto empty = p.run_batch({}, 4);
    CHECK(empty.items.empty());
    CHECK(empty.summary["items"] == 0);
    CHECK(empty.summary["raw_cells"] == 0);
    CHECK(empty.summary["cell_reduction_ratio"] == 0.0);

    auto dup = support::synthetic_corpus(2, 1);
    dup[1].id = dup[0].id;
    CHECK_THROWS_AS(p.run_batch(dup), ConfigError);
}

TEST_CASE("selection invariants on synthetic tables") {
    Pipeline p(mock_config());
    for (const auto& item : support::synthetic_corpus(40, 23)) {
        const auto out = p.run(item.table, item.question);
        const auto n = item.table.n_rows();
        CHECK(out.filtered.selected_row_indices.size() == adaptive_k(n, 0.4));
        const auto essential = out.trace["essential"]["columns"].get<std::vector<std::string>>();
        for (const auto& e : essential) {
            CHECK(std::count(out.filtered.selected_columns.begin(), out.filtered.selected_columns.end(), e) == 1);
        }
        CHECK(compute_reduction_stats(item.table, out.filtered).kept_cells == out.filtered.stats.kept_cells);
    }
}

TEST_CASE("top-k L2 mode") {
    auto config = mock_config();
    config.selection_mode = SelectionMode::topk_l2;
    Pipeline p(config);
    const auto t = support::synthetic_table(5, 12, 3);
    const auto out = p.run(t, "Who is the player with the highest score?");
    CHECK(out.filtered.selected_columns.size() == 5);
    CHECK(out.trace["selection"]["mode"] == "topk_l2");
}

TEST_CASE("original row order option") {
    auto config = mock_config();
    config.keep_original_row_order = true;
    const auto t = support::synthetic_table(20, 4, 9);
    const auto out = Pipeline(config).run(t, "Which north river is longer than the lake?");
    CHECK(std::is_sorted(out.filtered.selected_row_indices.begin(), out.filtered.selected_row_indices.end()));
}

TEST_CASE("row signals override") {
    const Table t({"a"}, {{"x"}, {"y"}, {"z"}});
    RowSignals s = RowSignals::from_json(nlohmann::json::array({{0, 0, 0}, {0, 0, 0}, {1, 1, 1}}));
    const auto out = Pipeline(mock_config()).run(t, "anything", s);
    CHECK(out.filtered.selected_row_indices == std::vector<std::size_t>{2, 0});
    CHECK(out.trace["row_signals_source"] == "recorded");
    RowSignals bad = RowSignals::from_json(nlohmann::json::array({{0, 0, 0}}));
    CHECK_THROWS_AS(Pipeline(mock_config()).run(t, "anything", bad), PipelineError);
}
