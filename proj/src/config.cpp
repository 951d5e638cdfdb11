#include "kftune/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kftune {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

FlatConfig FlatConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);

    FlatConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        cfg.entries_[key] = value;
    }
    return cfg;
}

void FlatConfig::set(const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must be key=value: " + key_value);
    set(trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)));
}

void FlatConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

bool FlatConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(it->second.c_str(), &end);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not a number: " + it->second);
    return v;
}

int FlatConfig::get_int(const std::string& key, int fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(it->second.c_str(), &end, 10);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not an integer: " + it->second);
    return static_cast<int>(v);
}

uint64_t FlatConfig::get_uint64(const std::string& key, uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not an unsigned integer: " + it->second);
    return static_cast<uint64_t>(v);
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + v);
}

std::vector<double> FlatConfig::get_doubles(const std::string& key,
                                            const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError("config key '" + key + "': empty list element");
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(item.c_str(), &end);
        if (errno != 0 || end == item.c_str() || *end != '\0')
            throw ConfigError("config key '" + key + "': not a number: " + item);
        out.push_back(v);
    }
    if (out.empty())
        throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::string FlatConfig::snapshot() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
    return out.str();
}

}  // namespace kftune
