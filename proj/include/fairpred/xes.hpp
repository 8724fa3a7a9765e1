#pragma once

#include <string>
#include <vector>

#include "fairpred/csv.hpp"
#include "fairpred/eventlog.hpp"

namespace fairpred {

// Reads the XES subset used by process-mining tools: <log>/<trace>/<event>
// with typed attribute elements. The event activity comes from
// "concept:name", the timestamp from "time:timestamp". string -> categorical,
// int/float -> numeric, boolean -> boolean. Throws DataError with the line
// number on malformed XML and names the trace when an event lacks
// "concept:name".
EventLog parse_xes(const std::string& path,
                   const std::vector<std::string>& dropped_attributes = default_dropped_attributes());

void write_xes(const EventLog& log, const std::string& path);

} // namespace fairpred
