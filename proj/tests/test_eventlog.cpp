#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <set>

#include "fairpred/csv.hpp"
#include "fairpred/errors.hpp"
#include "fairpred/eventlog.hpp"
#include "fairpred/neuralnet.hpp"
#include "fairpred/xes.hpp"
#include "support/helpers.hpp"

using namespace fairpred;
using testsupport::test_dir;
using testsupport::write_file;

namespace {

const char* kSmallXes = R"(<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>
  <trace>
    <string key="concept:name" value="c1"/>
    <event>
      <string key="concept:name" value="A"/>
      <date key="time:timestamp" value="2011-01-01T00:00:00.000+00:00"/>
      <int key="CreditScore" value="112"/>
    </event>
    <event>
      <string key="concept:name" value="B"/>
      <date key="time:timestamp" value="2011-01-02T12:00:00.000+00:00"/>
    </event>
  </trace>
</log>
)";

Trace timestamped_trace(const std::string& case_id, std::int64_t first_ms) {
    Trace trace;
    trace.case_id = case_id;
    Event event;
    event.activity = "A";
    event.timestamp_ms = first_ms;
    trace.events.push_back(event);
    return trace;
}

} // namespace

TEST_CASE("iso8601 parsing and formatting") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("1970-01-01T00:00:01Z") == 1000);
    CHECK(parse_iso8601("2011-01-01T00:00:00.250Z") == parse_iso8601("2011-01-01T00:00:00Z") + 250);
    // +01:00 means one hour ahead of UTC
    CHECK(parse_iso8601("2011-01-01T01:00:00+01:00") == parse_iso8601("2011-01-01T00:00:00Z"));
    CHECK(parse_iso8601("2011-01-01T01:00:00+0100") == parse_iso8601("2011-01-01T00:00:00Z"));
    CHECK(parse_iso8601("2010-12-31T23:30:00-00:30") == parse_iso8601("2011-01-01T00:00:00Z"));
    CHECK(parse_iso8601("2011-01-01") == parse_iso8601("2011-01-01T00:00:00Z"));

    std::int64_t ms = parse_iso8601("2013-04-11T15:09:03.817+02:00");
    CHECK(parse_iso8601(format_iso8601(ms)) == ms);
    CHECK(format_iso8601(0) == "1970-01-01T00:00:00.000Z");

    CHECK_THROWS_AS(parse_iso8601("not a date"), DataError);
    CHECK_THROWS_AS(parse_iso8601("2011-13-01"), DataError);
    CHECK_THROWS_AS(parse_iso8601("2011-01-01T25:00:00"), DataError);
}

TEST_CASE("parse_xes maps the structure directly") {
    auto dir = test_dir("xes_small");
    auto path = write_file(dir, "small.xes", kSmallXes);
    EventLog log = parse_xes(path);

    REQUIRE(log.traces.size() == 1);
    const Trace& trace = log.traces.front();
    CHECK(trace.case_id == "c1");
    REQUIRE(trace.events.size() == 2);
    CHECK(trace.events[0].activity == "A");
    CHECK(trace.events[1].activity == "B");
    CHECK(log.schema.activities == std::set<std::string>{"A", "B"});

    // integer attribute -> numeric
    REQUIRE(trace.events[0].attributes.count("CreditScore") == 1);
    CHECK(std::get<double>(trace.events[0].attributes.at("CreditScore")) == 112.0);
    CHECK(log.schema.attributes.at("CreditScore").kind == AttributeKind::Numeric);

    // 36 hour span
    CHECK(*trace.events[1].timestamp_ms - *trace.events[0].timestamp_ms == 36 * 3600000LL);
}

TEST_CASE("parse_xes keeps identical traces under different case ids") {
    std::string xes = "<log>";
    for (int i = 0; i < 2; ++i) {
        xes += "<trace><string key=\"concept:name\" value=\"case" + std::to_string(i) + "\"/>";
        xes += "<event><string key=\"concept:name\" value=\"A\"/></event></trace>";
    }
    xes += "</log>";
    auto dir = test_dir("xes_multiset");
    EventLog log = parse_xes(write_file(dir, "dup.xes", xes));
    REQUIRE(log.traces.size() == 2);
    CHECK(log.traces[0].events == log.traces[1].events);
    CHECK(log.traces[0].case_id != log.traces[1].case_id);
}

TEST_CASE("parse_xes reports malformed XML with a line number") {
    auto dir = test_dir("xes_bad");
    auto path = write_file(dir, "bad.xes",
                           "<log>\n<trace>\n<event><string key=\"concept:name\" value=\"A/></event>\n");
    try {
        parse_xes(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        // "<path>:<line>: <message>"
        std::string message = e.what();
        auto pos = message.find(".xes:");
        REQUIRE(pos != std::string::npos);
        CHECK(std::isdigit(static_cast<unsigned char>(message[pos + 5])));
    }
}

TEST_CASE("parse_xes names the trace when concept:name is missing") {
    auto dir = test_dir("xes_noname");
    auto path = write_file(dir, "noname.xes",
                           "<log><trace><string key=\"concept:name\" value=\"broken_case\"/>"
                           "<event><int key=\"x\" value=\"1\"/></event></trace></log>");
    try {
        parse_xes(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("broken_case") != std::string::npos);
        CHECK(std::string(e.what()).find("concept:name") != std::string::npos);
    }
}

TEST_CASE("parse_xes drops the configured attribute names") {
    auto dir = test_dir("xes_drop");
    auto path = write_file(dir, "drop.xes",
                           "<log><trace><string key=\"concept:name\" value=\"c\"/>"
                           "<event><string key=\"concept:name\" value=\"A\"/>"
                           "<string key=\"activity\" value=\"A\"/>"
                           "<string key=\"time\" value=\"x\"/>"
                           "<int key=\"@@index\" value=\"0\"/>"
                           "<string key=\"kept\" value=\"v\"/></event></trace></log>");
    EventLog log = parse_xes(path);
    const auto& attrs = log.traces[0].events[0].attributes;
    CHECK(attrs.size() == 1);
    CHECK(attrs.count("kept") == 1);
}

TEST_CASE("parse_csv groups rows by case and infers kinds") {
    auto dir = test_dir("csv_basic");
    auto path = write_file(dir, "log.csv",
                           "case,act,ts,amount,g\n"
                           "1,A,2020-01-01T00:00:00Z,1.5,m\n"
                           "1,B,2020-01-01T01:00:00Z,2,f\n"
                           "2,A,2020-01-01T02:00:00Z,,m\n");
    ColumnMapping mapping{"case", "act", "ts"};
    EventLog log = parse_csv(path, mapping);

    REQUIRE(log.traces.size() == 2);
    CHECK(log.traces[0].events.size() == 2);
    CHECK(log.traces[1].events.size() == 1);
    // {"1.5", "2"} parse as numbers -> numeric kind
    CHECK(log.schema.attributes.at("amount").kind == AttributeKind::Numeric);
    CHECK(log.schema.attributes.at("g").kind == AttributeKind::Categorical);
    // empty cell -> attribute absent
    CHECK(log.traces[1].events[0].attributes.count("amount") == 0);
}

TEST_CASE("parse_csv sorts events by timestamp within a case") {
    auto dir = test_dir("csv_sort");
    auto path = write_file(dir, "log.csv",
                           "case,act,ts\n"
                           "1,C,2020-01-01T02:00:00Z\n"
                           "1,A,2020-01-01T00:00:00Z\n"
                           "1,B,2020-01-01T01:00:00Z\n");
    EventLog log = parse_csv(path, {"case", "act", "ts"});
    REQUIRE(log.traces.size() == 1);
    CHECK(log.traces[0].events[0].activity == "A");
    CHECK(log.traces[0].events[1].activity == "B");
    CHECK(log.traces[0].events[2].activity == "C");
}

TEST_CASE("parse_csv boolean inference and errors") {
    auto dir = test_dir("csv_errors");
    auto path = write_file(dir, "log.csv",
                           "case,act,flag\n"
                           "1,A,true\n"
                           "1,B,false\n");
    EventLog log = parse_csv(path, {"case", "act", std::nullopt});
    CHECK(log.schema.attributes.at("flag").kind == AttributeKind::Boolean);

    // missing mapped column -> config error listing the available ones
    try {
        parse_csv(path, {"nope", "act", std::nullopt});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("case") != std::string::npos);
    }

    auto bad_ts = write_file(dir, "bad_ts.csv",
                             "case,act,ts\n"
                             "1,A,2020-01-01T00:00:00Z\n"
                             "1,B,yesterday\n");
    try {
        parse_csv(bad_ts, {"case", "act", "ts"});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("temporal_split takes the earliest traces") {
    EventLog log;
    for (int i = 1; i <= 10; ++i) {
        log.traces.push_back(timestamped_trace("case" + std::to_string(i), i * 1000));
    }
    log.schema = build_attribute_schema(log.traces);

    auto [train, test] = temporal_split(log, 0.7);
    REQUIRE(train.traces.size() == 7);
    REQUIRE(test.traces.size() == 3);
    for (int i = 0; i < 7; ++i) {
        CHECK(train.traces[i].case_id == "case" + std::to_string(i + 1));
    }
    CHECK(test.traces[0].case_id == "case8");
}

TEST_CASE("temporal_split rounds down on fractional boundaries") {
    EventLog log;
    for (int i = 0; i < 7456; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "c%05d", i);
        log.traces.push_back(timestamped_trace(id, i * 60000LL));
    }
    log.schema = build_attribute_schema(log.traces);
    auto [train, test] = temporal_split(log, 0.7);
    CHECK(train.traces.size() == 5219);
    CHECK(test.traces.size() == 2237);
}

TEST_CASE("temporal_split breaks timestamp ties by case id") {
    EventLog log;
    log.traces.push_back(timestamped_trace("b", 1000));
    log.traces.push_back(timestamped_trace("a", 1000));
    log.traces.push_back(timestamped_trace("c", 1000));
    log.schema = build_attribute_schema(log.traces);
    auto [train, test] = temporal_split(log, 0.67);
    REQUIRE(train.traces.size() == 2);
    CHECK(train.traces[0].case_id == "a");
    CHECK(train.traces[1].case_id == "b");
    CHECK(test.traces[0].case_id == "c");
}

TEST_CASE("temporal_split rejects untimestamped traces and bad fractions") {
    EventLog log;
    log.traces.push_back(timestamped_trace("ok", 1000));
    Trace untimestamped;
    untimestamped.case_id = "broken";
    Event event;
    event.activity = "A";
    untimestamped.events.push_back(event);
    log.traces.push_back(untimestamped);
    log.schema = build_attribute_schema(log.traces);

    try {
        temporal_split(log, 0.5);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("broken") != std::string::npos);
    }
    CHECK_THROWS_AS(temporal_split(log, 1.0), ConfigError);
    CHECK_THROWS_AS(temporal_split(log, 0.0), ConfigError);
}

TEST_CASE("temporal_split partitions the multiset and orders by first event") {
    Rng rng(99);
    EventLog log;
    for (int i = 0; i < 57; ++i) {
        log.traces.push_back(
            timestamped_trace("case" + std::to_string(i), static_cast<std::int64_t>(rng.index(20)) * 1000));
    }
    log.schema = build_attribute_schema(log.traces);
    auto [train, test] = temporal_split(log, 0.7);

    CHECK(train.traces.size() + test.traces.size() == log.traces.size());
    std::multiset<std::string> before, after;
    for (const auto& t : log.traces) before.insert(t.case_id);
    for (const auto& t : train.traces) after.insert(t.case_id);
    for (const auto& t : test.traces) after.insert(t.case_id);
    CHECK(before == after);

    std::int64_t max_train = INT64_MIN, min_test = INT64_MAX;
    for (const auto& t : train.traces) max_train = std::max(max_train, *t.events[0].timestamp_ms);
    for (const auto& t : test.traces) min_test = std::min(min_test, *t.events[0].timestamp_ms);
    CHECK(max_train <= min_test);
}

TEST_CASE("temporal_split flags categories only observed in test") {
    EventLog log;
    for (int i = 0; i < 4; ++i) {
        Trace trace = timestamped_trace("case" + std::to_string(i), i * 1000);
        trace.events[0].attributes["g"] = categorical_value(i < 3 ? "m" : "novel");
        log.traces.push_back(trace);
    }
    log.schema = build_attribute_schema(log.traces);
    auto [train, test] = temporal_split(log, 0.75);
    CHECK(!train.schema.attributes.at("g").categories.contains("novel"));
    CHECK(test.schema.attributes.at("g").categories.contains("novel"));
    CHECK(test.schema.attributes.at("g").unseen_categories == std::set<std::string>{"novel"});
}

TEST_CASE("prefixes returns every non-empty prefix in length order") {
    Trace trace;
    trace.case_id = "c";
    for (const char* activity : {"A", "B", "C"}) {
        Event event;
        event.activity = activity;
        trace.events.push_back(event);
    }
    auto all = prefixes(trace);
    REQUIRE(all.size() == 3);
    for (std::size_t k = 0; k < all.size(); ++k) {
        CHECK(all[k].events.size() == k + 1);
        CHECK(all[k].case_id == "c");
    }
    CHECK(all.back() == trace);

    Trace single;
    single.case_id = "s";
    Event event;
    event.activity = "A";
    single.events.push_back(event);
    auto one = prefixes(single);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == single);
}

TEST_CASE("native CSV round trip preserves traces and schema") {
    Rng rng(2024);
    auto dir = test_dir("csv_roundtrip");
    for (int iteration = 0; iteration < 20; ++iteration) {
        EventLog log;
        std::size_t n_traces = 1 + rng.index(6);
        for (std::size_t t = 0; t < n_traces; ++t) {
            Trace trace;
            trace.case_id = "case_" + std::to_string(t);
            std::size_t n_events = 1 + rng.index(5);
            std::int64_t ts = 1000000 + static_cast<std::int64_t>(rng.index(1000)) * 1000;
            for (std::size_t e = 0; e < n_events; ++e) {
                Event event;
                event.activity = std::string("act") + char('A' + rng.index(3));
                ts += static_cast<std::int64_t>(rng.index(5000));
                event.timestamp_ms = ts;
                if (rng.uniform() < 0.7) {
                    event.attributes["measure"] = numeric_value(rng.uniform(-100.0, 100.0));
                }
                if (rng.uniform() < 0.7) {
                    event.attributes["label,with \"quotes\""] =
                        categorical_value("v" + std::to_string(rng.index(4)) + ",\ntricky");
                }
                if (rng.uniform() < 0.5) {
                    event.attributes["flag"] = boolean_value(rng.uniform() < 0.5);
                }
                trace.events.push_back(std::move(event));
            }
            log.traces.push_back(std::move(trace));
        }
        log.schema = build_attribute_schema(log.traces);

        std::string path = dir + "/roundtrip.csv";
        write_native_csv(log, path);
        EventLog parsed = parse_native_csv(path);
        CHECK(parsed == log);
    }
}

TEST_CASE("XES round trip preserves traces and schema") {
    EventLog log;
    Trace trace;
    trace.case_id = "weird <case> & \"id\"";
    Event event;
    event.activity = "A & B";
    event.timestamp_ms = 1234567;
    event.attributes["note"] = categorical_value("x < y > z");
    event.attributes["value"] = numeric_value(0.1);
    event.attributes["ok"] = boolean_value(true);
    trace.events.push_back(event);
    log.traces.push_back(trace);
    log.schema = build_attribute_schema(log.traces);

    auto dir = test_dir("xes_roundtrip");
    std::string path = dir + "/roundtrip.xes";
    write_xes(log, path);
    EventLog parsed = parse_xes(path, {});
    CHECK(parsed == log);
}

TEST_CASE("validate_log enforces the invariants") {
    EventLog log;
    log.traces.push_back(timestamped_trace("a", 1000));
    log.traces.push_back(timestamped_trace("a", 2000));
    log.schema = build_attribute_schema(log.traces);
    CHECK_THROWS_AS(validate_log(log), DataError); // duplicate case id

    EventLog decreasing;
    Trace trace = timestamped_trace("c", 5000);
    Event event;
    event.activity = "B";
    event.timestamp_ms = 1000;
    trace.events.push_back(event);
    decreasing.traces.push_back(trace);
    decreasing.schema = build_attribute_schema(decreasing.traces);
    CHECK_THROWS_AS(validate_log(decreasing), DataError);
}
