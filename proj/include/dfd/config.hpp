#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dfd {

/// Sectioned key-value configuration.
///
/// Format: `[section]` headers, `key = value` lines, `#` comments, blank
/// lines ignored. Keys before any header live in the "" section. Values
/// are kept verbatim (trimmed); typed access converts on demand.
class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    std::string serialize() const;
    void save(const std::string& path) const;

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_int(const std::string& section, const std::string& key, long long value);

    std::optional<std::string> get(const std::string& section, const std::string& key) const;

    // Required getters throw std::runtime_error naming the missing field.
    std::string require(const std::string& section, const std::string& key) const;
    double require_double(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    /// Comma-separated list of reals.
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const;

    std::vector<std::string> section_names() const;
    std::vector<std::pair<std::string, std::string>> items(const std::string& section) const;

    /// Field-by-field equality (section and key order ignored).
    bool semantically_equal(const Config& other) const;

private:
    // Section -> ordered key/value pairs; sections kept in first-seen order.
    std::vector<std::string> section_order_;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;
};

} // namespace dfd
