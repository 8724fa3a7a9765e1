#pragma once

#include <string>
#include <variant>

#include "fairpred/eventlog.hpp"

namespace fairpred {

struct TotalTime {
    bool operator==(const TotalTime&) const = default;
};

struct ActivityOccurrence {
    std::string activity;
    bool operator==(const ActivityOccurrence&) const = default;
};

// Regression target (total duration in hours) or binary classification
// target (does the activity ever occur).
using OutcomeSpec = std::variant<TotalTime, ActivityOccurrence>;

bool is_classification(const OutcomeSpec& spec);

// TotalTime: (last - first) timestamp in hours; requires both timestamps.
// ActivityOccurrence(a): 1 if any event has activity a, else 0.
double eval_outcome(const OutcomeSpec& spec, const Trace& trace);

// Every prefix row is labeled with the completed trace's outcome.
double outcome_for_prefix_row(const OutcomeSpec& spec, const Trace& full_trace);

// "total_time" or "occurs:<activity>".
OutcomeSpec parse_outcome(const std::string& text);
std::string outcome_to_string(const OutcomeSpec& spec);

} // namespace fairpred
