// atf: adaptive table filtering from the command line.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "atf/case_fixture.hpp"
#include "atf/errors.hpp"
#include "atf/metrics.hpp"
#include "atf/pipeline.hpp"
#include "atf/trace_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kItemFailures = 1;
constexpr int kFatal = 2;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw atf::ConfigError("cannot open " + path);
    }
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw atf::ParseError(path + " is not valid JSON");
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw atf::ConfigError("cannot write " + path);
    }
    out << text;
}

// --backend overrides the config: mock, http, or fixture:PATH.
void apply_backend(atf::PipelineConfig& config, const std::string& spec) {
    if (spec.empty()) {
        return;
    }
    if (spec == "mock" || spec == "http") {
        config.backend.kind = spec;
        return;
    }
    if (spec.rfind("fixture:", 0) == 0) {
        config.backend.kind = "fixture";
        config.backend.fixture_path = spec.substr(8);
        const auto j = read_json_file(config.backend.fixture_path);
        if (j.is_object() && j.contains("embeddings") && !j["embeddings"].empty()) {
            config.backend.embedder = "fixture";
        }
        return;
    }
    throw atf::ConfigError("--backend must be mock, http or fixture:PATH");
}

atf::PipelineConfig load_config(const std::string& path, const std::string& backend) {
    atf::PipelineConfig config = path.empty() ? atf::PipelineConfig{} : atf::PipelineConfig::load(path);
    apply_backend(config, backend);
    config.validate();
    return config;
}

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
    }
    return out.empty() ? "item" : out;
}

atf::BatchItem item_from_json(const json& j, const fs::path& base) {
    atf::BatchItem item{j.at("id").get<std::string>(), atf::Table({"_"}, {}), j.at("question").get<std::string>(),
                        std::nullopt};
    if (j.contains("table")) {
        item.table = atf::table_from_json(j.at("table"));
    } else {
        fs::path p = j.at("table_path").get<std::string>();
        item.table = atf::load_table_file((p.is_absolute() ? p : base / p).string());
    }
    if (j.contains("row_signals") && !j.at("row_signals").is_null()) {
        item.row_signals = atf::RowSignals::from_json(j.at("row_signals"));
    }
    return item;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive table filtering"};
    app.require_subcommand(1);

    std::string table_path, question, config_path, backend, row_signals_path, trace_path, out_path;
    bool keep_order = false;
    auto* filter = app.add_subcommand("filter", "Filter one table for one question");
    filter->add_option("--table", table_path, "CSV or JSON table")->required()->check(CLI::ExistingFile);
    filter->add_option("--question", question, "Question or statement")->required();
    filter->add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    filter->add_option("--backend", backend, "mock | http | fixture:PATH");
    filter->add_option("--row-signals", row_signals_path, "Recorded [tfidf, bm25, dense] row signals")
        ->check(CLI::ExistingFile);
    filter->add_option("--trace", trace_path, "Write the run trace here");
    filter->add_flag("--keep-original-order", keep_order, "Emit selected rows in table order");
    filter->add_option("--out", out_path, "Filtered table CSV (default stdout)");

    std::string dataset_path, batch_out, trace_dir, stats_path;
    std::size_t parallelism = 1;
    auto* batch = app.add_subcommand("batch", "Filter a JSONL dataset");
    batch->add_option("--dataset", dataset_path, "JSONL of {id, question, table | table_path}")
        ->required()
        ->check(CLI::ExistingFile);
    batch->add_option("--out", batch_out, "Output JSONL")->required();
    batch->add_option("--trace-dir", trace_dir, "One trace JSON per item");
    batch->add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    batch->add_option("--backend", backend, "mock | http | fixture:PATH");
    batch->add_option("--parallelism", parallelism, "Concurrent items")->check(CLI::PositiveNumber);
    batch->add_option("--stats", stats_path, "Aggregate reduction statistics JSON");
    batch->add_flag("--keep-original-order", keep_order, "Emit selected rows in table order");

    std::string predictions_path, report_path;
    bool macro = false;
    auto* eval = app.add_subcommand("eval", "Score predictions (EM, F1, accuracy)");
    eval->add_option("--predictions", predictions_path, "JSONL of {id, predicted, gold, task}")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--report", report_path, "Report JSON (default stdout)");
    eval->add_flag("--macro", macro, "Macro-averaged label accuracy for fact verification");

    std::string traces_dir, plots_dir;
    auto* stats = app.add_subcommand("stats", "Reduction distributions and token overflow from traces");
    stats->add_option("--traces", traces_dir, "Directory of trace JSON files")->required()->check(CLI::ExistingDirectory);
    stats->add_option("--plots", plots_dir, "Directory for histogram CSV and summary JSON");

    std::string case_path, fixture_out;
    auto* make_fixture = app.add_subcommand("make-fixture", "Record a replay fixture from a case file");
    make_fixture->add_option("--case", case_path, "Case JSON")->required()->check(CLI::ExistingFile);
    make_fixture->add_option("--out", fixture_out, "Fixture JSON (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*filter) {
            auto config = load_config(config_path, backend);
            config.keep_original_row_order = config.keep_original_row_order || keep_order;
            const atf::Pipeline pipeline(config);
            const auto table = atf::load_table_file(table_path);
            std::optional<atf::RowSignals> signals;
            if (!row_signals_path.empty()) {
                signals = atf::RowSignals::from_json(read_json_file(row_signals_path));
            }
            try {
                const auto out = pipeline.run(table, question, signals);
                if (!trace_path.empty()) {
                    write_text(trace_path, out.trace.dump(2) + "\n");
                }
                write_text(out_path, atf::to_csv(out.filtered.table));
            } catch (const atf::PipelineError& e) {
                if (!trace_path.empty()) {
                    write_text(trace_path, e.partial_trace().dump(2) + "\n");
                }
                std::cerr << "atf: " << e.what() << "\n";
                return kItemFailures;
            }
            return kOk;
        }

        if (*batch) {
            auto config = load_config(config_path, backend);
            config.keep_original_row_order = config.keep_original_row_order || keep_order;
            const atf::Pipeline pipeline(config);
            std::vector<atf::BatchItem> items;
            std::ifstream in(dataset_path);
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.find_first_not_of(" \t\r") == std::string::npos) {
                    continue;
                }
                auto j = json::parse(line, nullptr, false);
                if (j.is_discarded()) {
                    throw atf::ParseError(dataset_path + ":" + std::to_string(line_no) + " is not valid JSON");
                }
                items.push_back(item_from_json(j, fs::path(dataset_path).parent_path()));
            }
            const auto report = pipeline.run_batch(items, parallelism);
            std::string lines;
            for (const auto& r : report.items) {
                lines += atf::batch_item_json(r).dump() + "\n";
                if (!trace_dir.empty() && !r.trace.is_null()) {
                    write_text((fs::path(trace_dir) / (safe_name(r.id) + ".json")).string(), r.trace.dump(2) + "\n");
                }
            }
            write_text(batch_out, lines);
            if (!stats_path.empty()) {
                write_text(stats_path, report.summary.dump(2) + "\n");
            }
            std::cerr << "atf: " << report.succeeded << " succeeded, " << report.failed << " failed\n";
            return report.failed > 0 ? kItemFailures : kOk;
        }

        if (*eval) {
            std::ifstream in(predictions_path);
            const auto preds = atf::metrics::read_predictions_jsonl(in);
            json out = json::array();
            for (const auto& r : atf::metrics::evaluate(preds, macro)) {
                out.push_back(atf::metrics::to_json(r));
            }
            write_text(report_path, out.dump(2) + "\n");
            return kOk;
        }

        if (*stats) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(traces_dir)) {
                if (e.is_regular_file() && e.path().extension() == ".json") {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            std::vector<atf::ReductionStats> all;
            for (const auto& f : files) {
                const auto j = read_json_file(f.string());
                if (j.contains("stats")) {
                    all.push_back(atf::reduction_stats_from_json(j.at("stats")));
                }
            }
            if (all.empty()) {
                throw atf::ConfigError("no traces with statistics under " + traces_dir);
            }
            const auto hist = atf::metrics::reduction_distributions(all);
            json summary = {{"records", all.size()}, {"histograms", atf::metrics::to_json(hist)}};
            json overflow = json::object();
            for (std::size_t budget : {512, 1024}) {
                const auto o = atf::metrics::overflow_ratio(all, budget);
                overflow[std::to_string(budget)] = {{"raw", o.raw}, {"filtered", o.filtered}, {"total", o.total}};
            }
            summary["overflow"] = overflow;
            if (!plots_dir.empty()) {
                fs::create_directories(plots_dir);
                write_text((fs::path(plots_dir) / "histograms.csv").string(), atf::metrics::histograms_csv(hist));
                write_text((fs::path(plots_dir) / "summary.json").string(), summary.dump(2) + "\n");
            }
            std::cout << summary.dump(2) << "\n";
            return kOk;
        }

        if (*make_fixture) {
            const auto c = atf::CaseFile::load(case_path);
            write_text(fixture_out, atf::make_case_fixture(c).dump(1) + "\n");
            return kOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "atf: " << e.what() << "\n";
        return kFatal;
    }
    return kOk;
}
