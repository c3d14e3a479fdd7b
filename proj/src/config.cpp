#include "dfd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dfd {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string field_name(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_string(ss.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t[0] == '[') {
            if (t.back() != ']')
                throw std::runtime_error("line " + std::to_string(lineno) +
                                         ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!cfg.sections_.count(section)) {
                cfg.section_order_.push_back(section);
                cfg.sections_[section];
            }
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        cfg.set(section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

std::string Config::serialize() const {
    std::ostringstream out;
    for (const std::string& sec : section_order_) {
        if (!sec.empty()) out << "[" << sec << "]\n";
        for (const auto& [k, v] : sections_.at(sec)) out << k << " = " << v << "\n";
        out << "\n";
    }
    return out.str();
}

void Config::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << serialize();
    if (!f) throw std::runtime_error(path + ": short write");
}

bool Config::has_section(const std::string& section) const {
    return sections_.count(section) != 0;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return get(section, key).has_value();
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    auto it = sections_.find(section);
    if (it == sections_.end()) {
        section_order_.push_back(section);
        it = sections_.emplace(section, std::vector<std::pair<std::string, std::string>>{}).first;
    }
    for (auto& [k, v] : it->second)
        if (k == key) {
            v = value;
            return;
        }
    it->second.emplace_back(key, value);
}

void Config::set_double(const std::string& section, const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    set(section, key, buf);
}

void Config::set_int(const std::string& section, const std::string& key, long long value) {
    set(section, key, std::to_string(value));
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return std::nullopt;
    for (const auto& [k, v] : it->second)
        if (k == key) return v;
    return std::nullopt;
}

std::string Config::require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v)
        throw std::runtime_error("missing required config field: " + field_name(section, key));
    return *v;
}

double Config::require_double(const std::string& section, const std::string& key) const {
    const std::string s = require(section, key);
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw std::runtime_error("config field " + field_name(section, key) +
                                 " is not a number: '" + s + "'");
    }
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? require_double(section, key) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = require(section, key);
    try {
        size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw std::runtime_error("config field " + field_name(section, key) +
                                 " is not an integer: '" + s + "'");
    }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string s = require(section, key);
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::runtime_error("config field " + field_name(section, key) +
                             " is not a boolean: '" + s + "'");
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key,
                                            const std::vector<double>& fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = require(section, key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        const std::string t = trim(cell);
        if (t.empty()) continue;
        try {
            out.push_back(std::stod(t));
        } catch (...) {
            throw std::runtime_error("config field " + field_name(section, key) +
                                     " has a non-numeric entry: '" + t + "'");
        }
    }
    return out;
}

std::vector<std::string> Config::section_names() const { return section_order_; }

std::vector<std::pair<std::string, std::string>> Config::items(const std::string& section) const {
    auto it = sections_.find(section);
    return it == sections_.end() ? std::vector<std::pair<std::string, std::string>>{}
                                 : it->second;
}

bool Config::semantically_equal(const Config& other) const {
    auto normalized = [](const Config& c) {
        std::map<std::string, std::map<std::string, std::string>> m;
        for (const auto& [sec, kvs] : c.sections_)
            for (const auto& [k, v] : kvs) m[sec][k] = v;
        return m;
    };
    return normalized(*this) == normalized(other);
}

} // namespace dfd
