#include "fairpred/eventlog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fairpred/errors.hpp"

namespace fairpred {

AttributeKind kind_of(const AttributeValue& v) {
    switch (v.index()) {
    case 0: return AttributeKind::Numeric;
    case 1: return AttributeKind::Categorical;
    default: return AttributeKind::Boolean;
    }
}

std::string kind_name(AttributeKind k) {
    switch (k) {
    case AttributeKind::Numeric: return "numeric";
    case AttributeKind::Categorical: return "categorical";
    default: return "boolean";
    }
}

namespace {

// Days since 1970-01-01 from a proleptic Gregorian date (Howard Hinnant's
// civil-date algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
    y += m <= 2;
}

bool read_digits(const std::string& s, std::size_t& pos, std::size_t count, long& out) {
    if (pos + count > s.size()) return false;
    long v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    pos += count;
    out = v;
    return true;
}

[[noreturn]] void bad_timestamp(const std::string& text) {
    throw DataError("invalid timestamp '" + text + "' (expected ISO-8601)");
}

} // namespace

std::int64_t parse_iso8601(const std::string& text) {
    std::size_t pos = 0;
    long year, month, day;
    if (!read_digits(text, pos, 4, year)) bad_timestamp(text);
    if (pos >= text.size() || text[pos] != '-') bad_timestamp(text);
    ++pos;
    if (!read_digits(text, pos, 2, month)) bad_timestamp(text);
    if (pos >= text.size() || text[pos] != '-') bad_timestamp(text);
    ++pos;
    if (!read_digits(text, pos, 2, day)) bad_timestamp(text);
    if (month < 1 || month > 12 || day < 1 || day > 31) bad_timestamp(text);

    long hour = 0, minute = 0, second = 0, millis = 0;
    long offset_minutes = 0;
    if (pos < text.size()) {
        char sep = text[pos];
        if (sep != 'T' && sep != ' ') bad_timestamp(text);
        ++pos;
        if (!read_digits(text, pos, 2, hour)) bad_timestamp(text);
        if (pos >= text.size() || text[pos] != ':') bad_timestamp(text);
        ++pos;
        if (!read_digits(text, pos, 2, minute)) bad_timestamp(text);
        if (pos < text.size() && text[pos] == ':') {
            ++pos;
            if (!read_digits(text, pos, 2, second)) bad_timestamp(text);
        }
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            std::size_t start = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            if (pos == start) bad_timestamp(text);
            // milliseconds: first three fractional digits, zero padded
            std::string frac = text.substr(start, pos - start);
            frac.resize(3, '0');
            millis = std::stol(frac.substr(0, 3));
        }
        if (pos < text.size()) {
            char c = text[pos];
            if (c == 'Z' || c == 'z') {
                ++pos;
            } else if (c == '+' || c == '-') {
                int sign = c == '+' ? 1 : -1;
                ++pos;
                long oh = 0, om = 0;
                if (!read_digits(text, pos, 2, oh)) bad_timestamp(text);
                if (pos < text.size() && text[pos] == ':') ++pos;
                if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                    if (!read_digits(text, pos, 2, om)) bad_timestamp(text);
                }
                offset_minutes = sign * (oh * 60 + om);
            } else {
                bad_timestamp(text);
            }
        }
        if (hour > 23 || minute > 59 || second > 60) bad_timestamp(text);
    }
    if (pos != text.size()) bad_timestamp(text);

    std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    std::int64_t ms = ((days * 24 + hour) * 60 + minute) * 60000 + second * 1000 + millis;
    return ms - offset_minutes * 60000;
}

std::string format_iso8601(std::int64_t ms_utc) {
    std::int64_t days = ms_utc / 86400000;
    std::int64_t rem = ms_utc % 86400000;
    if (rem < 0) {
        rem += 86400000;
        --days;
    }
    std::int64_t year;
    unsigned month, day;
    civil_from_days(days, year, month, day);
    long hour = static_cast<long>(rem / 3600000);
    long minute = static_cast<long>(rem / 60000 % 60);
    long second = static_cast<long>(rem / 1000 % 60);
    long millis = static_cast<long>(rem % 1000);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ",
                  static_cast<long long>(year), month, day, hour, minute, second, millis);
    return buf;
}

AttributeSchema build_attribute_schema(const std::vector<Trace>& traces) {
    AttributeSchema schema;
    for (const Trace& trace : traces) {
        for (const Event& event : trace.events) {
            schema.activities.insert(event.activity);
            for (const auto& [name, value] : event.attributes) {
                AttributeKind kind = kind_of(value);
                auto [it, inserted] = schema.attributes.try_emplace(name);
                if (inserted) {
                    it->second.kind = kind;
                } else if (it->second.kind != kind) {
                    throw DataError("attribute '" + name + "' has mixed kinds (" +
                                    kind_name(it->second.kind) + " vs " + kind_name(kind) +
                                    ") in case '" + trace.case_id + "'");
                }
                if (kind == AttributeKind::Categorical) {
                    it->second.categories.insert(std::get<std::string>(value));
                } else if (kind == AttributeKind::Boolean) {
                    it->second.categories.insert(std::get<bool>(value) ? "true" : "false");
                }
            }
        }
    }
    return schema;
}

void validate_log(const EventLog& log) {
    std::set<std::string> seen_ids;
    for (const Trace& trace : log.traces) {
        if (!seen_ids.insert(trace.case_id).second) {
            throw DataError("duplicate case id '" + trace.case_id + "'");
        }
        if (trace.events.empty()) {
            throw DataError("case '" + trace.case_id + "' has no events");
        }
        std::optional<std::int64_t> last_ts;
        for (const Event& event : trace.events) {
            if (event.activity.empty()) {
                throw DataError("case '" + trace.case_id + "' has an event with an empty activity");
            }
            if (!log.schema.activities.contains(event.activity)) {
                throw DataError("case '" + trace.case_id + "': activity '" + event.activity +
                                "' not in schema");
            }
            if (event.timestamp_ms) {
                if (last_ts && *event.timestamp_ms < *last_ts) {
                    throw DataError("case '" + trace.case_id + "': timestamps decrease");
                }
                last_ts = event.timestamp_ms;
            }
            for (const auto& [name, value] : event.attributes) {
                auto it = log.schema.attributes.find(name);
                if (it == log.schema.attributes.end()) {
                    throw DataError("case '" + trace.case_id + "': attribute '" + name +
                                    "' not in schema");
                }
                if (it->second.kind != kind_of(value)) {
                    throw DataError("case '" + trace.case_id + "': attribute '" + name +
                                    "' does not conform to its declared kind");
                }
                if (it->second.kind == AttributeKind::Numeric &&
                    !std::isfinite(std::get<double>(value))) {
                    throw DataError("case '" + trace.case_id + "': attribute '" + name +
                                    "' is not finite");
                }
            }
        }
    }
}

std::vector<Trace> prefixes(const Trace& trace) {
    std::vector<Trace> out;
    out.reserve(trace.events.size());
    for (std::size_t len = 1; len <= trace.events.size(); ++len) {
        Trace prefix;
        prefix.case_id = trace.case_id;
        prefix.events.assign(trace.events.begin(), trace.events.begin() + static_cast<std::ptrdiff_t>(len));
        out.push_back(std::move(prefix));
    }
    return out;
}

std::pair<EventLog, EventLog> temporal_split(const EventLog& log, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must be in (0, 1)");
    }
    if (log.traces.size() < 2) {
        throw DataError("temporal split needs at least 2 traces");
    }
    for (const Trace& trace : log.traces) {
        if (trace.events.empty() || !trace.events.front().timestamp_ms) {
            throw DataError("case '" + trace.case_id + "' has no timestamped first event");
        }
    }

    std::vector<std::size_t> order(log.traces.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        std::int64_t ta = *log.traces[a].events.front().timestamp_ms;
        std::int64_t tb = *log.traces[b].events.front().timestamp_ms;
        if (ta != tb) return ta < tb;
        return log.traces[a].case_id < log.traces[b].case_id;
    });

    // The earliest floor(fraction * |L|) traces (7,456 at 0.7 -> 5,219).
    std::size_t n = log.traces.size();
    std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    EventLog train, test;
    train.traces.reserve(n_train);
    test.traces.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_train ? train : test).traces.push_back(log.traces[order[i]]);
    }

    train.schema = build_attribute_schema(train.traces);
    AttributeSchema observed_test = build_attribute_schema(test.traces);

    // Test side: train schema plus anything only seen in test, flagged.
    test.schema = train.schema;
    for (const std::string& activity : observed_test.activities) {
        if (test.schema.activities.insert(activity).second) {
            test.schema.unseen_activities.insert(activity);
        }
    }
    for (const auto& [name, info] : observed_test.attributes) {
        auto it = test.schema.attributes.find(name);
        if (it == test.schema.attributes.end()) {
            auto& added = test.schema.attributes[name];
            added.kind = info.kind;
            added.categories = info.categories;
            added.unseen_categories = info.categories;
        } else {
            if (it->second.kind != info.kind) {
                throw DataError("attribute '" + name + "' changes kind between train and test");
            }
            for (const std::string& category : info.categories) {
                if (it->second.categories.insert(category).second) {
                    it->second.unseen_categories.insert(category);
                }
            }
        }
    }
    return {std::move(train), std::move(test)};
}

} // namespace fairpred
