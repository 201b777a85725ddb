#pragma once

#include "degcz/core.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace degcz {

// Flat key/value configuration.
//
// Accepted syntax, one entry per line:
//   key = value            # comment
//   [section]              # prefixes following keys with "section."
//   example = {variant = plain, n = 2, eps = 0.5}
//   rho = [2, 3, 3.6]
class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "<string>");
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void merge(const Config& other);  // other wins
    bool has(const std::string& key) const;
    void erase(const std::string& key);

    std::string get(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> get_strings(const std::string& key,
                                         const std::vector<std::string>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }
    // sorted "key = value" lines
    std::string canonical() const;
    std::string one_line() const;
    std::uint64_t hash() const;

private:
    std::map<std::string, std::string> entries_;
};

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal representation, locale independent.
std::string format_double(double v);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace degcz
