#include "fairpred/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "fairpred/csv.hpp"
#include "fairpred/errors.hpp"

namespace fairpred {

std::string FeatureSchema::feature_name(std::size_t index) const {
    const FeatureDescriptor& f = features.at(index);
    switch (f.kind) {
    case FeatureKind::ActivityCount: return "#" + f.name;
    case FeatureKind::NumericValue: return f.name;
    case FeatureKind::NumericUnassigned: return f.name + "=(unassigned)";
    case FeatureKind::OneHot: return f.name + "=" + f.category;
    case FeatureKind::OneHotUnknown: return f.name + "=(unknown)";
    default: return f.name + "=(unassigned)";
    }
}

std::vector<FeatureSchema::Group> FeatureSchema::groups() const {
    std::vector<Group> out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const FeatureDescriptor& f = features[i];
        if (f.kind == FeatureKind::ActivityCount) {
            out.push_back({"#" + f.name, {i}});
        } else if (out.empty() || out.back().label != f.name) {
            out.push_back({f.name, {i}});
        } else {
            out.back().indices.push_back(i);
        }
    }
    return out;
}

FeatureSchema build_schema(const EventLog& train_log, const std::set<std::string>& protected_names) {
    for (const std::string& name : protected_names) {
        if (!train_log.schema.attributes.contains(name)) {
            std::string available;
            for (const auto& [attr, info] : train_log.schema.attributes) {
                if (!available.empty()) available += ", ";
                available += attr;
            }
            throw ConfigError("protected attribute '" + name +
                              "' is not in the schema (available: " + available +
                              "); protection applies to whole attributes only");
        }
    }

    // Numeric normalization statistics over the training events. Every value
    // assigned by some event is the latest value of the prefix ending there,
    // so the scan over events covers all training prefixes.
    std::map<std::string, std::pair<double, double>> numeric_range;
    for (const Trace& trace : train_log.traces) {
        for (const Event& event : trace.events) {
            for (const auto& [name, value] : event.attributes) {
                if (kind_of(value) != AttributeKind::Numeric) continue;
                double v = std::get<double>(value);
                auto [it, inserted] = numeric_range.try_emplace(name, std::make_pair(v, v));
                if (!inserted) {
                    it->second.first = std::min(it->second.first, v);
                    it->second.second = std::max(it->second.second, v);
                }
            }
        }
    }

    FeatureSchema schema;
    schema.protected_names = protected_names;
    for (const std::string& activity : train_log.schema.activities) {
        schema.features.push_back({FeatureKind::ActivityCount, activity, "", 0.0, 0.0});
    }
    for (const auto& [name, info] : train_log.schema.attributes) {
        std::size_t group_start = schema.features.size();
        if (info.kind == AttributeKind::Numeric) {
            auto range = numeric_range.count(name) ? numeric_range[name] : std::make_pair(0.0, 0.0);
            schema.features.push_back({FeatureKind::NumericValue, name, "", range.first, range.second});
            schema.features.push_back({FeatureKind::NumericUnassigned, name, "", 0.0, 0.0});
        } else {
            for (const std::string& category : info.categories) {
                schema.features.push_back({FeatureKind::OneHot, name, category, 0.0, 0.0});
            }
            schema.features.push_back({FeatureKind::OneHotUnknown, name, "", 0.0, 0.0});
            schema.features.push_back({FeatureKind::OneHotUnassigned, name, "", 0.0, 0.0});
        }
        if (protected_names.contains(name)) {
            for (std::size_t i = group_start; i < schema.features.size(); ++i) {
                schema.protected_indices.push_back(i);
            }
        }
    }
    return schema;
}

EncodedInstance encode_events(const FeatureSchema& schema, std::span<const Event> events) {
    if (events.empty()) {
        throw DataError("cannot encode an empty prefix");
    }

    std::map<std::string, std::size_t> activity_counts;
    std::map<std::string, const AttributeValue*> latest; // last assignment wins
    for (const Event& event : events) {
        ++activity_counts[event.activity];
        for (const auto& [name, value] : event.attributes) {
            latest[name] = &value;
        }
    }

    EncodedInstance instance;
    instance.values.assign(schema.features.size(), 0.0);
    const auto& features = schema.features;
    std::size_t i = 0;
    while (i < features.size()) {
        const FeatureDescriptor& f = features[i];
        if (f.kind == FeatureKind::ActivityCount) {
            auto it = activity_counts.find(f.name);
            instance.values[i] = it == activity_counts.end() ? 0.0 : static_cast<double>(it->second);
            ++i;
            continue;
        }

        // Attribute features are contiguous per attribute name.
        std::size_t group_end = i;
        while (group_end < features.size() && features[group_end].kind != FeatureKind::ActivityCount &&
               features[group_end].name == f.name) {
            ++group_end;
        }
        auto it = latest.find(f.name);
        const AttributeValue* value = it == latest.end() ? nullptr : it->second;

        if (f.kind == FeatureKind::NumericValue || f.kind == FeatureKind::NumericUnassigned) {
            bool assigned = value && kind_of(*value) == AttributeKind::Numeric;
            for (std::size_t k = i; k < group_end; ++k) {
                if (features[k].kind == FeatureKind::NumericUnassigned) {
                    instance.values[k] = assigned ? 0.0 : 1.0;
                } else if (assigned) {
                    double v = std::get<double>(*value);
                    double range = features[k].max - features[k].min;
                    double scaled = range > 0.0
                                        ? (v - features[k].min) / range
                                        : (v == features[k].min ? 0.5 : (v < features[k].min ? 0.0 : 1.0));
                    instance.values[k] = std::clamp(scaled, 0.0, 1.0);
                }
            }
        } else {
            bool assigned = value && kind_of(*value) != AttributeKind::Numeric;
            std::string text;
            bool known = false;
            if (assigned) {
                text = kind_of(*value) == AttributeKind::Boolean
                           ? (std::get<bool>(*value) ? "true" : "false")
                           : std::get<std::string>(*value);
                for (std::size_t k = i; k < group_end && !known; ++k) {
                    known = features[k].kind == FeatureKind::OneHot && features[k].category == text;
                }
            }
            for (std::size_t k = i; k < group_end; ++k) {
                switch (features[k].kind) {
                case FeatureKind::OneHot:
                    instance.values[k] = (assigned && known && features[k].category == text) ? 1.0 : 0.0;
                    break;
                case FeatureKind::OneHotUnknown:
                    instance.values[k] = (assigned && !known) ? 1.0 : 0.0;
                    break;
                case FeatureKind::OneHotUnassigned:
                    instance.values[k] = assigned ? 0.0 : 1.0;
                    break;
                default:
                    break;
                }
            }
        }
        i = group_end;
    }
    return instance;
}

EncodedInstance encode_trace(const FeatureSchema& schema, const Trace& prefix) {
    return encode_events(schema, std::span<const Event>(prefix.events));
}

Dataset build_dataset(const FeatureSchema& schema, const EventLog& log, const OutcomeSpec& outcome) {
    Dataset dataset;
    for (const Trace& trace : log.traces) {
        double target = eval_outcome(outcome, trace);
        std::span<const Event> events(trace.events);
        for (std::size_t len = 1; len <= events.size(); ++len) {
            EncodedInstance instance = encode_events(schema, events.subspan(0, len));
            dataset.protected_rows.push_back(protected_projection(schema, instance));
            dataset.instances.push_back(std::move(instance));
            dataset.targets.push_back(target);
            dataset.provenance.push_back({trace.case_id, len});
        }
    }
    return dataset;
}

std::vector<double> protected_projection(const FeatureSchema& schema, const EncodedInstance& x) {
    std::vector<double> out;
    out.reserve(schema.protected_indices.size());
    for (std::size_t index : schema.protected_indices) {
        out.push_back(x.values.at(index));
    }
    return out;
}

void write_dataset_csv(const FeatureSchema& schema, const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write dataset CSV: " + path);
    }
    // header: feature names, "target", protected feature names
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (i > 0) out << ',';
        out << csv_escape(schema.feature_name(i));
    }
    out << ",target";
    for (std::size_t index : schema.protected_indices) {
        out << ',' << csv_escape("protected:" + schema.feature_name(index));
    }
    out << '\n';

    char buf[40];
    auto write_value = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (std::size_t row = 0; row < dataset.size(); ++row) {
        bool first = true;
        for (double v : dataset.instances[row].values) {
            if (!first) out << ',';
            first = false;
            write_value(v);
        }
        out << ',';
        write_value(dataset.targets[row]);
        for (double v : dataset.protected_rows[row]) {
            out << ',';
            write_value(v);
        }
        out << '\n';
    }
}

} // namespace fairpred
