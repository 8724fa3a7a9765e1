#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fairpred {

// Flat key = value configuration ('#' starts a comment). One file drives all
// commands; CLI flags override file keys.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string require(const std::string& key) const; // ConfigError when absent
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    double require_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Comma-separated values; empty key -> empty list.
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::size_t> get_size_list(const std::string& key) const;
    // Semicolon-separated layer shapes, each a comma list ("32,16; 64,32").
    std::vector<std::vector<std::size_t>> get_shape_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

} // namespace fairpred
