#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "atf/backends.hpp"
#include "atf/pipeline.hpp"
#include "atf/table.hpp"

namespace atf {

/// A recorded worked example: the inputs, the model answers observed for
/// it, and the expected filtering result.
struct CaseFile {
    std::string id;
    std::string question;
    Table table{{"_"}, {}};
    Script script;
    /// Raw question-to-column cosine per header.
    std::map<std::string, double> column_cosines;
    std::optional<RowSignals> row_signals;
    nlohmann::json expected = nlohmann::json::object();

    static CaseFile from_json(const nlohmann::json& j);
    static CaseFile load(const std::string& path);
};

/// 2-D vectors realising the recorded cosines: the question maps to (1, 0)
/// and each `header: description` text to (c, sqrt(1 - c^2)).
std::map<std::string, Vector> case_embeddings(const CaseFile& c);

/// Runs the pipeline against scripted answers and returns the replay
/// fixture (`entries` and `embeddings`) it produced.
nlohmann::json make_case_fixture(const CaseFile& c, PipelineConfig config = {});

} // namespace atf
