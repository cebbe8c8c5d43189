#pragma once

#include <chrono>
#include <random>
#include <string>
#include <vector>

#include "atf/case_fixture.hpp"
#include "atf/pipeline.hpp"

namespace support {

inline std::string data_path(const std::string& rel) { return std::string(ATF_TEST_DATA_DIR) + "/" + rel; }

struct Replay {
    atf::CaseFile c;
    atf::RunOutput out;
    double seconds = 0.0;
};

// Runs a recorded case offline: model answers and embeddings come from its
// fixture, row signals from the case file.
inline Replay replay_case(const std::string& id) {
    auto c = atf::CaseFile::load(data_path("cases/" + id + ".case.json"));
    atf::PipelineConfig config;
    config.backend.kind = "fixture";
    config.backend.embedder = "fixture";
    config.backend.fixture_path = data_path("cases/" + id + ".fixture.json");
    const auto start = std::chrono::steady_clock::now();
    atf::Pipeline pipeline(config);
    auto out = pipeline.run(c.table, c.question, c.row_signals);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return Replay{std::move(c), std::move(out), secs};
}

inline atf::Table synthetic_table(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    static const char* words[] = {"north", "south", "east",  "west",  "alpha", "beta",   "gamma",
                                  "delta", "red",   "green", "blue",  "lake",  "river",  "hill",
                                  "score", "money", "year",  "team",  "city",  "player", "award"};
    std::mt19937_64 rng(seed);
    std::vector<std::string> headers;
    for (std::size_t c = 0; c < cols; ++c) {
        headers.push_back(std::string(words[c % 21]) + "_" + std::to_string(c));
    }
    std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c % 3 == 0) {
                cells[r][c] = std::to_string(rng() % 1000);
            } else {
                cells[r][c] = std::string(words[rng() % 21]) + " " + words[rng() % 21];
            }
        }
    }
    return atf::Table(headers, cells);
}

inline std::vector<atf::BatchItem> synthetic_corpus(std::size_t n, std::uint64_t seed) {
    static const char* templates[] = {"Who is the player from {w} with the highest score?",
                                      "How many {w} teams won an award?",
                                      "What year did {w} city report the most money?",
                                      "List every {w} entry between 100 and 500",
                                      "Which {w} river is longer than the lake?"};
    static const char* fill[] = {"north", "green", "delta", "hill", "blue", "alpha"};
    std::mt19937_64 rng(seed);
    std::vector<atf::BatchItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        std::string q = templates[rng() % 5];
        q.replace(q.find("{w}"), 3, fill[rng() % 6]);
        const std::size_t rows = 1 + rng() % 12;
        const std::size_t cols = 1 + rng() % 8;
        items.push_back({"item" + std::to_string(i), synthetic_table(rows, cols, rng()), q, std::nullopt});
    }
    return items;
}

inline std::string report_bytes(const atf::BatchReport& report) {
    std::string out;
    for (const auto& item : report.items) {
        out += atf::batch_item_json(item).dump() + "\n";
        out += item.trace.dump() + "\n";
    }
    return out + report.summary.dump();
}

} // namespace support
