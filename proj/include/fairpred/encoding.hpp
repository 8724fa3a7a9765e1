#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fairpred/eventlog.hpp"
#include "fairpred/outcomes.hpp"

namespace fairpred {

enum class FeatureKind {
    ActivityCount,     // number of events with a given activity
    NumericValue,      // latest value of a numeric attribute, min-max scaled
    NumericUnassigned, // 1 when the numeric attribute was never assigned
    OneHot,            // latest categorical/boolean value equals a category
    OneHotUnknown,     // latest value not among the training categories
    OneHotUnassigned,  // attribute never assigned in the prefix
};

struct FeatureDescriptor {
    FeatureKind kind = FeatureKind::ActivityCount;
    std::string name;     // activity label for ActivityCount, attribute name otherwise
    std::string category; // OneHot only
    double min = 0.0;     // NumericValue normalization statistics (training data)
    double max = 0.0;

    bool operator==(const FeatureDescriptor&) const = default;
};

struct FeatureSchema {
    std::vector<FeatureDescriptor> features;
    std::vector<std::size_t> protected_indices; // ascending
    std::set<std::string> protected_names;

    std::string feature_name(std::size_t index) const;
    std::size_t size() const { return features.size(); }

    // Attribution players: one group per activity count, one per attribute
    // (a categorical attribute's one-hot slots are never split).
    struct Group {
        std::string label;
        std::vector<std::size_t> indices;
    };
    std::vector<Group> groups() const;

    bool operator==(const FeatureSchema&) const = default;
};

struct EncodedInstance {
    std::vector<double> values;

    bool operator==(const EncodedInstance&) const = default;
};

struct Dataset {
    struct Provenance {
        std::string case_id;
        std::size_t prefix_length = 0;
    };

    std::vector<EncodedInstance> instances;
    std::vector<double> targets;
    std::vector<std::vector<double>> protected_rows;
    std::vector<Provenance> provenance;

    std::size_t size() const { return instances.size(); }
};

// Feature layout from the training log: activity counts (activities sorted),
// then per attribute (sorted) either the scaled numeric value plus its
// unassigned indicator, or the one-hot group (categories sorted, then
// unknown, then unassigned). Protected indices cover every feature derived
// from the protected attribute names. Throws ConfigError when a protected
// name is not an attribute of the schema.
FeatureSchema build_schema(const EventLog& train_log, const std::set<std::string>& protected_names);

// The trace-to-instance encoding: per-activity event counts and the latest
// value assigned to each attribute (an assignment by the first event counts).
EncodedInstance encode_trace(const FeatureSchema& schema, const Trace& prefix);
EncodedInstance encode_events(const FeatureSchema& schema, std::span<const Event> events);

// One row per non-empty prefix of every trace; the target of every prefix row
// is the outcome of the completed trace.
Dataset build_dataset(const FeatureSchema& schema, const EventLog& log, const OutcomeSpec& outcome);

// Entries of x at the protected indices, in schema order.
std::vector<double> protected_projection(const FeatureSchema& schema, const EncodedInstance& x);

// Inspection export: feature names + "target" + protected feature names.
void write_dataset_csv(const FeatureSchema& schema, const Dataset& dataset, const std::string& path);

} // namespace fairpred
