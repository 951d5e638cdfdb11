#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kftune {

/// Configuration or usage problem; maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key/value experiment configuration with dotted keys
/// (e.g. `tuning.n_seed=10`), loadable from a file and overridable
/// from the command line.
class FlatConfig {
public:
    FlatConfig() = default;

    /// Parse `key = value` lines; '#' starts a comment. Errors carry the line number.
    static FlatConfig from_file(const std::string& path);

    /// Apply a single `key=value` override.
    void set(const std::string& key_value);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_uint64(const std::string& key, uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    /// Canonical snapshot, one sorted `key=value` line each.
    std::string snapshot() const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace kftune
