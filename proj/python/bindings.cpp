#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "atf/errors.hpp"
#include "atf/kmeans.hpp"
#include "atf/metrics.hpp"
#include "atf/pipeline.hpp"
#include "atf/relevance.hpp"
#include "atf/row_filter.hpp"
#include "atf/table.hpp"

namespace py = pybind11;

namespace {

atf::PipelineConfig config_from(const std::string& config_json, const std::string& backend) {
    auto config = config_json.empty() ? atf::PipelineConfig{}
                                      : atf::PipelineConfig::from_json(nlohmann::json::parse(config_json));
    if (backend.rfind("fixture:", 0) == 0) {
        config.backend.kind = "fixture";
        config.backend.fixture_path = backend.substr(8);
        config.backend.embedder = "fixture";
    } else if (!backend.empty()) {
        config.backend.kind = backend;
    }
    return config;
}

} // namespace

PYBIND11_MODULE(_atf, m) {
    m.doc() = "Question-aware table filtering";

    py::register_exception<atf::Error>(m, "AtfError", PyExc_RuntimeError);

    py::class_<atf::Table>(m, "Table")
        .def(py::init<std::vector<std::string>, std::vector<std::vector<std::string>>>(), py::arg("headers"),
             py::arg("rows"))
        .def_property_readonly("headers", &atf::Table::headers)
        .def_property_readonly("rows", &atf::Table::rows)
        .def_property_readonly("n_rows", &atf::Table::n_rows)
        .def_property_readonly("n_cols", &atf::Table::n_cols)
        .def("cell", py::overload_cast<std::size_t, std::string_view>(&atf::Table::cell, py::const_))
        .def("to_csv", [](const atf::Table& t) { return atf::to_csv(t); })
        .def("__eq__", [](const atf::Table& a, const atf::Table& b) { return a == b; });

    m.def("load_table", &atf::load_table_file, py::arg("path"));
    m.def("table_from_csv", [](const std::string& text) { return atf::load_table(text, atf::TableFormat::csv); });

    m.def("normalize_answer", &atf::metrics::normalize_answer);
    m.def("exact_match", [](const std::string& pred, const std::vector<std::string>& gold) {
        return atf::metrics::exact_match(pred, gold);
    });
    m.def("f1_score", [](const std::string& pred, const std::vector<std::string>& gold) {
        return atf::metrics::f1_score(pred, gold);
    });

    m.def("aggregate_scores", [](const std::vector<double>& scores) {
        const auto a = atf::aggregate_scores(scores);
        return py::make_tuple(a.mu, a.sigma, a.llm_final);
    });

    m.def(
        "kmeans",
        [](const std::vector<std::pair<double, double>>& points, std::size_t k, std::uint64_t seed,
           std::size_t restarts) {
            std::vector<atf::Point2> pts;
            for (const auto& [x, y] : points) {
                pts.push_back({x, y});
            }
            atf::KMeansOptions opts;
            opts.k = k;
            opts.seed = seed;
            opts.restarts = restarts;
            const auto model = atf::kmeans_2d(pts, opts);
            std::vector<std::pair<double, double>> centroids;
            for (const auto& c : model.centroids) {
                centroids.emplace_back(c[0], c[1]);
            }
            py::dict out;
            out["assignments"] = model.assignments;
            out["centroids"] = centroids;
            out["inertia"] = model.inertia;
            return out;
        },
        py::arg("points"), py::arg("k") = 3, py::arg("seed") = 42, py::arg("restarts") = 10);

    m.def("tfidf_scores", [](const std::string& q, const std::vector<std::string>& rows) {
        return atf::tfidf_scores(q, rows);
    });
    m.def(
        "bm25_scores",
        [](const std::string& q, const std::vector<std::string>& rows, double k1, double b) {
            return atf::bm25_scores(q, rows, k1, b);
        },
        py::arg("question"), py::arg("rows"), py::arg("k1") = 1.5, py::arg("b") = 0.75);
    m.def("softmax", [](const std::vector<double>& v) { return atf::softmax(v); });
    m.def("adaptive_k", &atf::adaptive_k, py::arg("n"), py::arg("alpha") = 0.4);
    m.def(
        "fuse_and_select",
        [](const std::vector<double>& tfidf, const std::vector<double>& bm25, const std::vector<double>& dense,
           double alpha) {
            atf::FusionConfig config;
            config.alpha = alpha;
            config.validate();
            const auto sel = atf::fuse_and_select(tfidf, bm25, dense, config);
            std::vector<double> fused;
            for (const auto& r : sel.rows) {
                fused.push_back(r.fused);
            }
            return py::make_tuple(sel.selected, fused);
        },
        py::arg("tfidf"), py::arg("bm25"), py::arg("dense"), py::arg("alpha") = 0.4);

    m.def(
        "_run",
        [](const atf::Table& table, const std::string& question, const std::string& config_json,
           const std::string& backend, const std::string& row_signals_json) {
            std::optional<atf::RowSignals> signals;
            if (!row_signals_json.empty()) {
                signals = atf::RowSignals::from_json(nlohmann::json::parse(row_signals_json));
            }
            std::optional<atf::RunOutput> out;
            {
                py::gil_scoped_release release;
                atf::Pipeline pipeline(config_from(config_json, backend));
                out = pipeline.run(table, question, signals);
            }
            return py::make_tuple(out->filtered.table, out->trace.dump());
        },
        py::arg("table"), py::arg("question"), py::arg("config_json") = "", py::arg("backend") = "",
        py::arg("row_signals_json") = "");
}
