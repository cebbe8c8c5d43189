#pragma once

#include <span>

#include <json.hpp>

#include "atf/gateway.hpp"
#include "atf/relevance.hpp"
#include "atf/table.hpp"

namespace atf {

nlohmann::json to_json(const ReductionStats& stats);
ReductionStats reduction_stats_from_json(const nlohmann::json& j);

/// Selected columns and rows, the sub-table itself and its statistics.
nlohmann::json to_json(const FilteredTable& filtered);

nlohmann::json to_json(const EntityDistribution& d);
nlohmann::json to_json(const EssentialColumns& e);
nlohmann::json to_json(std::span<const ColumnDescription> descriptions);
nlohmann::json to_json(const ColumnScorePair& p);

/// Model traffic in a stable order: by template stage, then pass, then arrival.
nlohmann::json backend_log_json(const CallLog& log);

} // namespace atf
