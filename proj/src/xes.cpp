#include "fairpred/xes.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "fairpred/errors.hpp"

namespace fairpred {

namespace {

struct XmlTag {
    enum class Kind { Open, Close, SelfClose };
    Kind kind = Kind::Open;
    std::string name;
    std::map<std::string, std::string> attributes;
    std::size_t line = 0;
};

// Minimal XML tokenizer for the XES subset: elements and attributes only;
// text content, comments, PIs, and DOCTYPE are skipped.
class XmlScanner {
public:
    XmlScanner(std::string text, std::string path)
        : text_(std::move(text)), path_(std::move(path)) {}

    // next element tag, or false at end of input
    bool next(XmlTag& tag) {
        while (true) {
            skip_until('<');
            if (pos_ >= text_.size()) return false;
            std::size_t tag_line = line_;
            advance(); // '<'
            if (starts_with("!--")) {
                skip_past("-->");
                continue;
            }
            if (starts_with("?")) {
                skip_past("?>");
                continue;
            }
            if (starts_with("!")) {
                skip_until('>');
                advance();
                continue;
            }
            return read_tag(tag, tag_line);
        }
    }

    [[noreturn]] void fail(const std::string& message, std::size_t line) const {
        throw DataError(path_ + ":" + std::to_string(line) + ": " + message);
    }

private:
    bool starts_with(const char* prefix) const {
        return text_.compare(pos_, std::strlen(prefix), prefix) == 0;
    }

    void advance() {
        if (pos_ < text_.size() && text_[pos_] == '\n') ++line_;
        ++pos_;
    }

    void skip_until(char c) {
        while (pos_ < text_.size() && text_[pos_] != c) advance();
    }

    void skip_past(const char* marker) {
        std::size_t found = text_.find(marker, pos_);
        if (found == std::string::npos) fail("unterminated markup", line_);
        while (pos_ < found) advance();
        pos_ += std::strlen(marker);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
    }

    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '_' || c == '-' ||
               c == '.' || c == '@';
    }

    std::string read_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    std::string decode_entities(const std::string& raw, std::size_t line) const {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                out += raw[i];
                continue;
            }
            std::size_t semi = raw.find(';', i);
            if (semi == std::string::npos) fail("unterminated entity", line);
            std::string entity = raw.substr(i + 1, semi - i - 1);
            if (entity == "amp") out += '&';
            else if (entity == "lt") out += '<';
            else if (entity == "gt") out += '>';
            else if (entity == "quot") out += '"';
            else if (entity == "apos") out += '\'';
            else if (!entity.empty() && entity[0] == '#') {
                long code = std::strtol(entity.c_str() + (entity[1] == 'x' ? 2 : 1), nullptr,
                                        entity[1] == 'x' ? 16 : 10);
                if (code <= 0 || code > 0x10FFFF) fail("bad character reference", line);
                // UTF-8 encode
                unsigned cp = static_cast<unsigned>(code);
                if (cp < 0x80) out += static_cast<char>(cp);
                else if (cp < 0x800) {
                    out += static_cast<char>(0xC0 | (cp >> 6));
                    out += static_cast<char>(0x80 | (cp & 0x3F));
                } else if (cp < 0x10000) {
                    out += static_cast<char>(0xE0 | (cp >> 12));
                    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (cp & 0x3F));
                } else {
                    out += static_cast<char>(0xF0 | (cp >> 18));
                    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
                    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (cp & 0x3F));
                }
            } else {
                fail("unknown entity '&" + entity + ";'", line);
            }
            i = semi;
        }
        return out;
    }

    bool read_tag(XmlTag& tag, std::size_t tag_line) {
        tag = XmlTag{};
        tag.line = tag_line;
        if (pos_ < text_.size() && text_[pos_] == '/') {
            tag.kind = XmlTag::Kind::Close;
            ++pos_;
        }
        tag.name = read_name();
        if (tag.name.empty()) fail("expected element name", tag_line);
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) fail("unterminated tag <" + tag.name + ">", tag_line);
            char c = text_[pos_];
            if (c == '>') {
                advance();
                return true;
            }
            if (c == '/') {
                advance();
                if (pos_ >= text_.size() || text_[pos_] != '>') fail("malformed tag end", line_);
                advance();
                if (tag.kind == XmlTag::Kind::Close) fail("malformed close tag", tag_line);
                tag.kind = XmlTag::Kind::SelfClose;
                return true;
            }
            std::string attr = read_name();
            if (attr.empty()) fail("malformed attribute in <" + tag.name + ">", line_);
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != '=') fail("attribute '" + attr + "' missing '='", line_);
            advance();
            skip_space();
            if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
                fail("attribute '" + attr + "' missing quoted value", line_);
            }
            char quote = text_[pos_];
            advance();
            std::size_t start = pos_;
            while (pos_ < text_.size() && text_[pos_] != quote) advance();
            if (pos_ >= text_.size()) fail("unterminated attribute value", line_);
            tag.attributes[attr] = decode_entities(text_.substr(start, pos_ - start), line_);
            advance();
        }
    }

    std::string text_;
    std::string path_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

bool parse_xes_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) return false;
    out = v;
    return true;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

EventLog parse_xes(const std::string& path, const std::vector<std::string>& dropped_attributes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open XES file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    XmlScanner scanner(buffer.str(), path);

    EventLog log;
    std::set<std::string> case_ids;

    bool in_log = false;
    bool in_trace = false;
    bool in_event = false;
    std::size_t anon_depth = 0; // unknown containers are skipped structurally
    std::size_t trace_index = 0;

    Trace current_trace;
    std::optional<std::string> trace_name;
    Event current_event;
    bool event_has_activity = false;
    std::size_t event_line = 0;

    XmlTag tag;
    while (scanner.next(tag)) {
        if (anon_depth > 0) {
            if (tag.kind == XmlTag::Kind::Open) ++anon_depth;
            else if (tag.kind == XmlTag::Kind::Close) --anon_depth;
            continue;
        }

        const std::string& name = tag.name;
        if (name == "log") {
            if (tag.kind == XmlTag::Kind::Open) in_log = true;
            else if (tag.kind == XmlTag::Kind::Close) in_log = false;
            continue;
        }
        if (name == "trace") {
            if (tag.kind == XmlTag::Kind::Open) {
                if (!in_log) scanner.fail("<trace> outside <log>", tag.line);
                in_trace = true;
                current_trace = Trace{};
                trace_name.reset();
            } else if (tag.kind == XmlTag::Kind::Close) {
                if (!in_trace) scanner.fail("unmatched </trace>", tag.line);
                in_trace = false;
                current_trace.case_id = trace_name.value_or("trace_" + std::to_string(trace_index));
                if (!case_ids.insert(current_trace.case_id).second) {
                    scanner.fail("duplicate trace id '" + current_trace.case_id + "'", tag.line);
                }
                ++trace_index;
                log.traces.push_back(std::move(current_trace));
            }
            continue;
        }
        if (name == "event") {
            if (tag.kind == XmlTag::Kind::Open) {
                if (!in_trace) scanner.fail("<event> outside <trace>", tag.line);
                in_event = true;
                current_event = Event{};
                event_has_activity = false;
                event_line = tag.line;
            } else if (tag.kind == XmlTag::Kind::Close) {
                if (!in_event) scanner.fail("unmatched </event>", tag.line);
                in_event = false;
                if (!event_has_activity) {
                    throw DataError(path + ": event at line " + std::to_string(event_line) +
                                    " in trace '" +
                                    trace_name.value_or("trace_" + std::to_string(trace_index)) +
                                    "' has no concept:name");
                }
                current_trace.events.push_back(std::move(current_event));
            }
            continue;
        }

        bool typed_attribute = name == "string" || name == "int" || name == "float" ||
                               name == "boolean" || name == "date" || name == "id";
        if (!typed_attribute) {
            // extension/classifier/global declarations, list containers, ...
            if (tag.kind == XmlTag::Kind::Open) ++anon_depth;
            continue;
        }
        if (tag.kind == XmlTag::Kind::Close) continue;
        if (tag.kind == XmlTag::Kind::Open) ++anon_depth; // nested values are out of scope

        auto key_it = tag.attributes.find("key");
        auto value_it = tag.attributes.find("value");
        if (key_it == tag.attributes.end() || value_it == tag.attributes.end()) continue;
        const std::string& key = key_it->second;
        const std::string& value = value_it->second;

        if (in_event) {
            if (key == "concept:name") {
                if (name != "string") scanner.fail("concept:name must be a string", tag.line);
                if (value.empty()) scanner.fail("empty concept:name", tag.line);
                current_event.activity = value;
                event_has_activity = true;
                continue;
            }
            if (key == "time:timestamp") {
                try {
                    current_event.timestamp_ms = parse_iso8601(value);
                } catch (const DataError& e) {
                    scanner.fail(e.what(), tag.line);
                }
                continue;
            }
            if (std::find(dropped_attributes.begin(), dropped_attributes.end(), key) !=
                dropped_attributes.end()) {
                continue;
            }
            if (name == "string" || name == "id") {
                current_event.attributes[key] = categorical_value(value);
            } else if (name == "int" || name == "float") {
                double v = 0.0;
                if (!parse_xes_double(value, v)) {
                    scanner.fail("attribute '" + key + "' has non-numeric value '" + value + "'",
                                 tag.line);
                }
                current_event.attributes[key] = numeric_value(v);
            } else if (name == "boolean") {
                current_event.attributes[key] = boolean_value(value == "true");
            }
            // other date attributes are outside the supported subset
        } else if (in_trace) {
            if (key == "concept:name") trace_name = value;
        }
    }

    if (in_log || in_trace || in_event) {
        throw DataError(path + ": unexpected end of file (unclosed element)");
    }
    log.schema = build_attribute_schema(log.traces);
    validate_log(log);
    return log;
}

void write_xes(const EventLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write XES file: " + path);
    }
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<log xes.version=\"1.0\" xes.features=\"\">\n";
    out << "  <extension name=\"Concept\" prefix=\"concept\" uri=\"http://www.xes-standard.org/concept.xesext\"/>\n";
    out << "  <extension name=\"Time\" prefix=\"time\" uri=\"http://www.xes-standard.org/time.xesext\"/>\n";
    for (const Trace& trace : log.traces) {
        out << "  <trace>\n";
        out << "    <string key=\"concept:name\" value=\"" << xml_escape(trace.case_id) << "\"/>\n";
        for (const Event& event : trace.events) {
            out << "    <event>\n";
            out << "      <string key=\"concept:name\" value=\"" << xml_escape(event.activity)
                << "\"/>\n";
            if (event.timestamp_ms) {
                out << "      <date key=\"time:timestamp\" value=\""
                    << format_iso8601(*event.timestamp_ms) << "\"/>\n";
            }
            for (const auto& [name, value] : event.attributes) {
                switch (kind_of(value)) {
                case AttributeKind::Numeric: {
                    char buf[40];
                    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(value));
                    out << "      <float key=\"" << xml_escape(name) << "\" value=\"" << buf
                        << "\"/>\n";
                    break;
                }
                case AttributeKind::Boolean:
                    out << "      <boolean key=\"" << xml_escape(name) << "\" value=\""
                        << (std::get<bool>(value) ? "true" : "false") << "\"/>\n";
                    break;
                case AttributeKind::Categorical:
                    out << "      <string key=\"" << xml_escape(name) << "\" value=\""
                        << xml_escape(std::get<std::string>(value)) << "\"/>\n";
                    break;
                }
            }
            out << "    </event>\n";
        }
        out << "  </trace>\n";
    }
    out << "</log>\n";
}

} // namespace fairpred
