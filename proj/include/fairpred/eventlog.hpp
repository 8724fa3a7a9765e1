#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fairpred {

enum class AttributeKind { Numeric, Categorical, Boolean };

// numeric (finite real) | categorical (string) | boolean
using AttributeValue = std::variant<double, std::string, bool>;

AttributeKind kind_of(const AttributeValue& v);
std::string kind_name(AttributeKind k);

inline AttributeValue numeric_value(double v) { return AttributeValue{v}; }
inline AttributeValue categorical_value(std::string v) { return AttributeValue{std::move(v)}; }
inline AttributeValue boolean_value(bool v) { return AttributeValue{v}; }

struct Event {
    std::string activity;
    std::map<std::string, AttributeValue> attributes;
    std::optional<std::int64_t> timestamp_ms; // UTC milliseconds since epoch

    bool operator==(const Event&) const = default;
};

struct Trace {
    std::string case_id;
    std::vector<Event> events;

    bool operator==(const Trace&) const = default;
};

struct AttributeSchema {
    struct AttributeInfo {
        AttributeKind kind = AttributeKind::Categorical;
        // Observed values, categorical/boolean attributes only (booleans are
        // recorded as "false"/"true").
        std::set<std::string> categories;
        // Values present in this log but not in the log that built the schema
        // (populated on the test side of a temporal split).
        std::set<std::string> unseen_categories;

        bool operator==(const AttributeInfo&) const = default;
    };

    std::map<std::string, AttributeInfo> attributes;
    std::set<std::string> activities;
    std::set<std::string> unseen_activities;

    bool operator==(const AttributeSchema&) const = default;
};

struct EventLog {
    std::vector<Trace> traces;
    AttributeSchema schema;

    bool operator==(const EventLog&) const = default;
};

// ISO-8601 timestamp with optional fractional seconds and offset
// ("2011-01-01T12:30:00.250+01:00"). A missing offset is read as UTC.
// Throws DataError on malformed input.
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t ms_utc);

// Schema whose category sets and activity alphabet are exactly the values
// observed in the given traces. Throws DataError on mixed-kind attributes.
AttributeSchema build_attribute_schema(const std::vector<Trace>& traces);

// Checks the event-log invariants: non-empty activities and traces, values
// conforming to the schema, unique case ids, non-decreasing timestamps.
// Throws DataError naming the offending case.
void validate_log(const EventLog& log);

// All non-empty prefixes of the trace in length order; the last element is
// the full trace.
std::vector<Trace> prefixes(const Trace& trace);

// Splits by first-event timestamp: the earliest traces form the training log.
// Ties are broken by case_id. Both halves carry the train schema, with the
// test schema augmented by values observed only in test (flagged unseen).
std::pair<EventLog, EventLog> temporal_split(const EventLog& log, double train_fraction);

} // namespace fairpred
