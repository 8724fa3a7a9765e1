#include "fairpred/outcomes.hpp"

#include <algorithm>

#include "fairpred/errors.hpp"

namespace fairpred {

bool is_classification(const OutcomeSpec& spec) {
    return std::holds_alternative<ActivityOccurrence>(spec);
}

double eval_outcome(const OutcomeSpec& spec, const Trace& trace) {
    if (const auto* occurrence = std::get_if<ActivityOccurrence>(&spec)) {
        bool found = std::any_of(trace.events.begin(), trace.events.end(),
                                 [&](const Event& e) { return e.activity == occurrence->activity; });
        return found ? 1.0 : 0.0;
    }
    if (trace.events.empty()) {
        throw DataError("case '" + trace.case_id + "' has no events");
    }
    const auto& first = trace.events.front().timestamp_ms;
    const auto& last = trace.events.back().timestamp_ms;
    if (!first || !last) {
        throw DataError("case '" + trace.case_id + "' lacks timestamps for the total-time outcome");
    }
    return static_cast<double>(*last - *first) / 3600000.0;
}

double outcome_for_prefix_row(const OutcomeSpec& spec, const Trace& full_trace) {
    return eval_outcome(spec, full_trace);
}

OutcomeSpec parse_outcome(const std::string& text) {
    if (text == "total_time") {
        return TotalTime{};
    }
    if (text.starts_with("occurs:")) {
        std::string activity = text.substr(7);
        if (activity.empty()) {
            throw ConfigError("outcome 'occurs:' needs an activity label");
        }
        return ActivityOccurrence{activity};
    }
    throw ConfigError("unknown outcome '" + text + "' (expected total_time or occurs:<activity>)");
}

std::string outcome_to_string(const OutcomeSpec& spec) {
    if (const auto* occurrence = std::get_if<ActivityOccurrence>(&spec)) {
        return "occurs:" + occurrence->activity;
    }
    return "total_time";
}

} // namespace fairpred
