#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairpred/eventlog.hpp"

namespace fairpred {

struct ColumnMapping {
    std::string case_column;
    std::string activity_column;
    std::optional<std::string> timestamp_column;
};

// Attributes removed on ingestion by default ("activity", "time", "@@index").
const std::vector<std::string>& default_dropped_attributes();

// RFC-4180 CSV with a header row. Rows are grouped by case id and sorted by
// timestamp within a case (ties keep file order). Unmapped columns become
// attributes; kinds are inferred per column (all numbers -> numeric,
// all true/false -> boolean, else categorical). Empty cells mean the
// attribute is absent for that event.
EventLog parse_csv(const std::string& path, const ColumnMapping& mapping,
                   const std::vector<std::string>& dropped_attributes = default_dropped_attributes());

// Native layout: header case_id,activity,timestamp,<attr...>.
EventLog parse_native_csv(const std::string& path,
                          const std::vector<std::string>& dropped_attributes = {});
void write_native_csv(const EventLog& log, const std::string& path);

// Low-level RFC-4180 record handling, shared with report writers.
std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> read_csv_records(const std::string& path);

} // namespace fairpred
