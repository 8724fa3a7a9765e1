#include "fairpred/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "fairpred/errors.hpp"

namespace fairpred {

const std::vector<std::string>& default_dropped_attributes() {
    static const std::vector<std::string> names = {"activity", "time", "@@index"};
    return names;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open CSV file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.erase(0, 3); // UTF-8 BOM
    }

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (record.size() > 1 || !record.front().empty()) {
            records.push_back(record);
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) {
        throw DataError(path + ": unterminated quoted field");
    }
    if (!field.empty() || !record.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_record();
    }
    return records;
}

namespace {

bool parse_full_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE) return false;
    if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ColumnInference {
    bool all_numeric = true;
    bool all_boolean = true;
    bool any_value = false;
};

} // namespace

EventLog parse_csv(const std::string& path, const ColumnMapping& mapping,
                   const std::vector<std::string>& dropped_attributes) {
    auto records = read_csv_records(path);
    if (records.empty()) {
        throw DataError(path + ": empty CSV file (header row required)");
    }
    const std::vector<std::string>& header = records.front();

    auto column_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            std::string available;
            for (const auto& h : header) {
                if (!available.empty()) available += ", ";
                available += h;
            }
            throw ConfigError(path + ": mapped column '" + name +
                              "' not found (available: " + available + ")");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t case_col = column_index(mapping.case_column);
    std::size_t activity_col = column_index(mapping.activity_column);
    std::optional<std::size_t> timestamp_col;
    if (mapping.timestamp_column) {
        timestamp_col = column_index(*mapping.timestamp_column);
    }

    std::vector<std::size_t> attr_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == case_col || c == activity_col) continue;
        if (timestamp_col && c == *timestamp_col) continue;
        if (std::find(dropped_attributes.begin(), dropped_attributes.end(), header[c]) !=
            dropped_attributes.end())
            continue;
        attr_cols.push_back(c);
    }

    // Kind inference over non-empty cells, per column.
    std::map<std::size_t, ColumnInference> inference;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() != header.size()) {
            throw DataError(path + ": row " + std::to_string(r) + " has " +
                            std::to_string(row.size()) + " fields, header has " +
                            std::to_string(header.size()));
        }
        for (std::size_t c : attr_cols) {
            const std::string& cell = row[c];
            if (cell.empty()) continue;
            auto& inf = inference[c];
            inf.any_value = true;
            double ignored;
            if (!parse_full_double(cell, ignored)) inf.all_numeric = false;
            if (cell != "true" && cell != "false") inf.all_boolean = false;
        }
    }

    struct PendingEvent {
        Event event;
        std::size_t file_order;
    };
    std::vector<std::string> case_order;
    std::map<std::string, std::vector<PendingEvent>> cases;

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        Event event;
        event.activity = row[activity_col];
        if (event.activity.empty()) {
            throw DataError(path + ": row " + std::to_string(r) + " has an empty activity");
        }
        if (timestamp_col && !row[*timestamp_col].empty()) {
            try {
                event.timestamp_ms = parse_iso8601(row[*timestamp_col]);
            } catch (const DataError& e) {
                throw DataError(path + ": row " + std::to_string(r) + ": " + e.what());
            }
        }
        for (std::size_t c : attr_cols) {
            const std::string& cell = row[c];
            if (cell.empty()) continue;
            const auto& inf = inference[c];
            if (inf.all_numeric) {
                double v = 0.0;
                parse_full_double(cell, v);
                event.attributes[header[c]] = numeric_value(v);
            } else if (inf.all_boolean) {
                event.attributes[header[c]] = boolean_value(cell == "true");
            } else {
                event.attributes[header[c]] = categorical_value(cell);
            }
        }
        const std::string& case_id = row[case_col];
        if (case_id.empty()) {
            throw DataError(path + ": row " + std::to_string(r) + " has an empty case id");
        }
        auto [it, inserted] = cases.try_emplace(case_id);
        if (inserted) case_order.push_back(case_id);
        it->second.push_back({std::move(event), r});
    }

    EventLog log;
    log.traces.reserve(case_order.size());
    for (const std::string& case_id : case_order) {
        auto& pending = cases[case_id];
        std::stable_sort(pending.begin(), pending.end(), [](const PendingEvent& a, const PendingEvent& b) {
            std::int64_t ta = a.event.timestamp_ms.value_or(INT64_MIN);
            std::int64_t tb = b.event.timestamp_ms.value_or(INT64_MIN);
            return ta < tb;
        });
        Trace trace;
        trace.case_id = case_id;
        trace.events.reserve(pending.size());
        for (auto& p : pending) trace.events.push_back(std::move(p.event));
        log.traces.push_back(std::move(trace));
    }
    log.schema = build_attribute_schema(log.traces);
    return log;
}

EventLog parse_native_csv(const std::string& path, const std::vector<std::string>& dropped_attributes) {
    ColumnMapping mapping;
    mapping.case_column = "case_id";
    mapping.activity_column = "activity";
    mapping.timestamp_column = "timestamp";
    return parse_csv(path, mapping, dropped_attributes);
}

void write_native_csv(const EventLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write CSV file: " + path);
    }

    std::vector<std::string> attr_names;
    for (const auto& [name, info] : log.schema.attributes) {
        attr_names.push_back(name);
    }

    out << "case_id,activity,timestamp";
    for (const auto& name : attr_names) out << ',' << csv_escape(name);
    out << '\n';

    for (const Trace& trace : log.traces) {
        for (const Event& event : trace.events) {
            out << csv_escape(trace.case_id) << ',' << csv_escape(event.activity) << ',';
            if (event.timestamp_ms) out << format_iso8601(*event.timestamp_ms);
            for (const auto& name : attr_names) {
                out << ',';
                auto it = event.attributes.find(name);
                if (it == event.attributes.end()) continue;
                const AttributeValue& value = it->second;
                switch (kind_of(value)) {
                case AttributeKind::Numeric:
                    out << format_double(std::get<double>(value));
                    break;
                case AttributeKind::Boolean:
                    out << (std::get<bool>(value) ? "true" : "false");
                    break;
                case AttributeKind::Categorical:
                    out << csv_escape(std::get<std::string>(value));
                    break;
                }
            }
            out << '\n';
        }
    }
}

} // namespace fairpred
