#include "degcz/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace degcz {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

// split on commas not nested in braces or brackets
std::vector<std::string> split_top(const std::string& s) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '{' || c == '[') ++depth;
        if (c == '}' || c == ']') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) parts.push_back(trim(cur));
    return parts;
}

void add_entry(std::map<std::string, std::string>& out, const std::string& key, const std::string& raw,
               const std::string& where) {
    if (key.empty()) throw InvalidInput(where + ": empty key");
    std::string value = trim(raw);
    if (!value.empty() && value.front() == '{') {
        if (value.back() != '}') throw InvalidInput(where + ": unterminated inline table");
        for (const std::string& item : split_top(value.substr(1, value.size() - 2))) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw InvalidInput(where + ": inline table item needs '='");
            add_entry(out, key + "." + trim(item.substr(0, eq)), item.substr(eq + 1), where);
        }
        return;
    }
    out[key] = unquote(value);
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string where = source + ":" + std::to_string(lineno);
        std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) throw InvalidInput(where + ": expected 'key = value'");
        std::string key = trim(body.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        add_entry(cfg.entries_, key, body.substr(eq + 1), where);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

void Config::set(const std::string& key, const std::string& value) { add_entry(entries_, key, value, "set"); }

void Config::set(const std::string& key, double value) { entries_[key] = format_double(value); }

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

void Config::erase(const std::string& key) { entries_.erase(key); }

std::string Config::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw InvalidInput("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

namespace {
double to_double(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    double out = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw InvalidInput("config key '" + key + "': not a number: '" + v + "'");
    }
    return out;
}
}  // namespace

double Config::get_double(const std::string& key) const { return to_double(key, get(key)); }

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    double v = get_double(key);
    if (v != std::floor(v)) throw InvalidInput("config key '" + key + "': expected an integer");
    return static_cast<long>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    std::string t = trim(get(key));
    std::uint64_t out = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw InvalidInput("config key '" + key + "': expected an unsigned integer");
    }
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = trim(get(key));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidInput("config key '" + key + "': expected a boolean");
}

std::vector<double> parse_double_list(const std::string& text) {
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']') throw InvalidInput("unterminated list '" + text + "'");
        t = t.substr(1, t.size() - 2);
    }
    std::vector<double> out;
    std::string cur;
    for (char c : t + ",") {
        if (c == ',' || c == ' ' || c == ';') {
            if (!trim(cur).empty()) out.push_back(to_double("list", cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    try {
        return parse_double_list(get(key));
    } catch (const InvalidInput&) {
        throw InvalidInput("config key '" + key + "': expected a list of numbers");
    }
}

std::vector<std::string> Config::get_strings(const std::string& key,
                                             const std::vector<std::string>& fallback) const {
    if (!has(key)) return fallback;
    std::string t = trim(get(key));
    if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
    std::vector<std::string> out;
    for (const std::string& part : split_top(t)) out.push_back(unquote(part));
    return out;
}

std::string Config::canonical() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
    return out.str();
}

std::string Config::one_line() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [k, v] : entries_) {
        if (!first) out << "; ";
        out << k << "=" << v;
        first = false;
    }
    return out.str();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace degcz
