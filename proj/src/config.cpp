#include "fairpred/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fairpred/errors.hpp"

namespace fairpred {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char separator) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == separator) {
            out.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    out.push_back(trim(current));
    return out;
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

Config Config::from_string(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value, got '" + trimmed + "'");
        }
        std::string key = trim(trimmed.substr(0, eq));
        std::string value = trim(trimmed.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        config.entries_[key] = value;
    }
    return config;
}

void Config::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

bool Config::has(const std::string& key) const {
    return entries_.contains(key);
}

std::string Config::require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError("missing required config key '" + key + "'");
    }
    return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

namespace {

double parse_double_or_throw(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64_or_throw(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" +
                          value + "'");
    }
    return v;
}

} // namespace

double Config::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_double_or_throw(key, it->second);
}

double Config::require_double(const std::string& key) const {
    return parse_double_or_throw(key, require(key));
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_u64_or_throw(key, it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + it->second + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || trim(it->second).empty()) return {};
    return split(it->second, ',');
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : get_list(key)) {
        out.push_back(parse_double_or_throw(key, item));
    }
    return out;
}

std::vector<std::size_t> Config::get_size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const std::string& item : get_list(key)) {
        out.push_back(static_cast<std::size_t>(parse_u64_or_throw(key, item)));
    }
    return out;
}

std::vector<std::vector<std::size_t>> Config::get_shape_list(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || trim(it->second).empty()) return {};
    std::vector<std::vector<std::size_t>> out;
    for (const std::string& shape : split(it->second, ';')) {
        std::vector<std::size_t> widths;
        for (const std::string& item : split(shape, ',')) {
            widths.push_back(static_cast<std::size_t>(parse_u64_or_throw(key, item)));
        }
        out.push_back(std::move(widths));
    }
    return out;
}

} // namespace fairpred
