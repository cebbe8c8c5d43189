#include <doctest.h>

#include <map>
#include <random>

#include "atf/errors.hpp"
#include "atf/table.hpp"
#include "atf/tokenizer.hpp"

using namespace atf;

namespace {

Table grid(std::size_t rows, std::size_t cols) {
    std::vector<std::string> headers;
    for (std::size_t c = 0; c < cols; ++c) {
        headers.push_back("c" + std::to_string(c));
    }
    std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            cells[r][c] = "v" + std::to_string(r) + "_" + std::to_string(c);
        }
    }
    return Table(headers, cells);
}

} // namespace

TEST_CASE("csv loading") {
    const auto t = load_table("a,b\n1,2\n3,4", TableFormat::csv);
    CHECK(t.headers() == std::vector<std::string>{"a", "b"});
    CHECK(t.n_rows() == 2);
    CHECK(t.cell(1, "b") == "4");

    const auto q = load_table("\xEF\xBB\xBFname,note\r\n\"Smith, J\",\"said \"\"hi\"\"\"\r\n", TableFormat::csv);
    CHECK(q.headers()[0] == "name");
    CHECK(q.cell(0, 0) == "Smith, J");
    CHECK(q.cell(0, 1) == "said \"hi\"");

    const auto padded = load_table("a,b,c\n1\n", TableFormat::csv);
    CHECK(padded.cell(0, "c").empty());

    CHECK_THROWS_AS(load_table("a,a\n1,2", TableFormat::csv), SchemaError);
    CHECK_THROWS_AS(load_table("a,b\n1,2,3", TableFormat::csv), SchemaError);
    CHECK_THROWS_AS(load_table("a,b\n1\"x\",2", TableFormat::csv), ParseError);
    CHECK_THROWS_AS(load_table("a,b\n\"open,2", TableFormat::csv), ParseError);
    CHECK_THROWS_AS(load_table("", TableFormat::csv), SchemaError);
    CHECK_THROWS_AS(load_table("a, \n1,2", TableFormat::csv), SchemaError);
}

TEST_CASE("json loading and round trips") {
    const auto t = load_table(R"({"headers":["President","Siena_2002"],"rows":[["George Washington","04"]]})",
                              TableFormat::json);
    CHECK(t.n_rows() == 1);
    CHECK(t.n_cols() == 2);
    CHECK(t.cell(0, "Siena_2002") == "04");
    CHECK(load_table(to_json(t).dump(), TableFormat::json) == t);
    CHECK_THROWS_AS(load_table("{\"rows\":[]}", TableFormat::json), SchemaError);
    CHECK_THROWS_AS(load_table("{", TableFormat::json), ParseError);

    std::mt19937_64 rng(3);
    const std::string alphabet = "ab ,\"\n\r;x1";
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rows = rng() % 5;
        const std::size_t cols = 1 + rng() % 4;
        std::vector<std::string> headers;
        for (std::size_t c = 0; c < cols; ++c) {
            headers.push_back("h" + std::to_string(c));
        }
        std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
        for (auto& row : cells) {
            for (auto& cell : row) {
                const std::size_t len = rng() % 6;
                for (std::size_t i = 0; i < len; ++i) {
                    cell.push_back(alphabet[rng() % alphabet.size()]);
                }
                // Cells are stored trimmed, so only trimmed cells can round-trip.
                while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) {
                    cell.pop_back();
                }
                while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) {
                    cell.erase(cell.begin());
                }
            }
        }
        const Table original(headers, cells);
        CHECK(load_table(to_csv(original), TableFormat::csv) == original);
        CHECK(load_table(to_json(original).dump(), TableFormat::json) == original);
    }
}

TEST_CASE("cell access errors") {
    const auto t = grid(2, 2);
    CHECK_THROWS_AS(t.column_index("nope"), UnknownColumn);
    CHECK_THROWS_AS(t.cell(5, 0), RowOutOfRange);
    const std::vector<std::string> cols{"c1"};
    const std::vector<std::size_t> rows{7};
    CHECK_THROWS_AS(t.select(cols, rows), RowOutOfRange);
}

TEST_CASE("sampling") {
    const auto small = grid(2, 1);
    CHECK(sample_cell_values(small, "c0", 5, 1) == std::vector<std::string>{"v0_0", "v1_0"});
    CHECK_THROWS_AS(sample_cell_values(small, "c0", 0, 1), RangeError);

    const auto big = grid(100, 1);
    CHECK(sample_cell_values(big, "c0", 5, 7) == sample_cell_values(big, "c0", 5, 7));
    CHECK(sample_cell_values(big, "c0", 5, 7).size() == 5);

    const auto ten = grid(10, 1);
    std::map<std::string, int> freq;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (const auto& v : sample_cell_values(ten, "c0", 3, seed)) {
            ++freq[v];
        }
    }
    for (const auto& [v, count] : freq) {
        CHECK(std::abs(count / 100.0 - 0.3) <= 0.05 + 1e-12);
    }
}

TEST_CASE("row flattening") {
    const Table t({"President", "Siena_2002", "WSJ_2000"}, {{"George Washington", "04", "01"}, {"a", "", "b"}});
    const std::vector<std::string> all{"President", "Siena_2002", "WSJ_2000"};
    CHECK(flatten_row_text(t, 0, all) == "George Washington 04 01");
    CHECK(flatten_row_text(t, 1, all) == "a b");
    const std::vector<std::string> one{"President"};
    CHECK(flatten_row_text(t, 0, one) == "George Washington");
    CHECK_THROWS_AS(flatten_row_text(t, 2, one), RowOutOfRange);
}

TEST_CASE("linearization") {
    const Table one({"h"}, {{"v"}});
    const auto lin = linearize_table(one);
    CHECK(lin.text == "col: h\nrow 0: v");
    CHECK(lin.token_count == 7);

    const Table blank({"h", "g"}, {{"", ""}});
    CHECK(linearize_table(blank).token_count == 9);

    CHECK(linearize_table(one, "chars4").token_count == (lin.text.size() + 3) / 4);
    CHECK_THROWS_AS(linearize_table(one, "bpe"), UnknownTokenizer);
}

TEST_CASE("reduction statistics") {
    const auto raw = grid(44, 19);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < 18; ++r) {
        rows.push_back(r * 2);
    }
    const auto f = make_filtered_table(raw, {"c3", "c0", "c9"}, rows);
    CHECK(f.stats.raw_cells == 836);
    CHECK(f.stats.kept_cells == 54);
    CHECK(f.stats.cells_removed() == 782);
    CHECK(f.stats.columns_removed() == 16);
    CHECK(f.stats.rows_removed() == 26);
    CHECK(f.stats.cell_reduction_ratio == doctest::Approx(782.0 / 836.0).epsilon(1e-12));
    CHECK(f.stats.token_reduction_ratio > 0.0);
    CHECK(f.stats.token_reduction_ratio < 1.0);
    CHECK(f.table.cell(1, "c3") == "v2_3");

    const auto again = compute_reduction_stats(raw, f);
    CHECK(again.kept_tokens == f.stats.kept_tokens);

    std::vector<std::size_t> all_rows(10);
    for (std::size_t i = 0; i < 10; ++i) {
        all_rows[i] = i;
    }
    const auto t = grid(10, 4);
    const auto same = make_filtered_table(t, t.headers(), all_rows);
    CHECK(same.table == t);
    CHECK(same.stats.cells_removed() == 0);
    CHECK(same.stats.cell_reduction_ratio == 0.0);
    CHECK(same.stats.token_reduction_ratio == 0.0);

    const auto small = make_filtered_table(t, {"c0", "c1"}, {0, 1, 2, 3});
    CHECK(small.stats.cell_reduction_ratio == doctest::Approx(0.8).epsilon(1e-12));

    auto forged = small;
    forged.selected_row_indices[0] = 9;
    CHECK_THROWS_AS(compute_reduction_stats(t, forged), MismatchedProvenance);
}

TEST_CASE("tokenizer registry") {
    CHECK(count_whitespace_tokens("col: a | b") == 5);
    register_tokenizer("words_test", [](std::string_view s) { return s.size(); });
    CHECK(tokenizer("words_test")("abc") == 3);
}
