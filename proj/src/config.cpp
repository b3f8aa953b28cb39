// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mlmkit {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

void check_name(const std::string& name, const std::string& what, const std::string& where) {
    if (name.empty()) throw ConfigError("empty " + what + " at " + where);
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') continue;
        throw ConfigError("bad character '" + std::string(1, c) + "' in " + what + " '" + name +
                          "' at " + where);
    }
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.filename().string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string where = origin + ":" + std::to_string(line_no);
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("unterminated section header at " + where);
            section = trim(t.substr(1, t.size() - 2));
            check_name(section, "section name", where);
            cfg.store_[section];  // a header alone registers the section
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value at " + where);
        if (section.empty()) throw ConfigError("key outside any [section] at " + where);
        std::string key = trim(t.substr(0, eq));
        check_name(key, "key", where);
        cfg.store_[section][key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

void Config::apply_override(const std::string& dotted) {
    size_t eq = dotted.find('=');
    if (eq == std::string::npos)
        throw UsageError("override '" + dotted + "' lacks '=' (want section.key=value)");
    std::string lhs = trim(dotted.substr(0, eq));
    size_t dot = lhs.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size())
        throw UsageError("override '" + dotted + "' lacks a section.key left side");
    std::string section = lhs.substr(0, dot);
    std::string key = lhs.substr(dot + 1);
    check_name(section, "section name", "override");
    check_name(key, "key", "override");
    store_[section][key] = trim(dotted.substr(eq + 1));
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto s = store_.find(section);
    return s != store_.end() && s->second.count(key) > 0;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    store_[section][key] = value;
}

void Config::default_to(const std::string& section, const std::string& key,
                        const std::string& value) {
    auto& sec = store_[section];
    sec.emplace(key, value);
}

std::string Config::require_str(const std::string& section, const std::string& key) const {
    auto s = store_.find(section);
    if (s != store_.end()) {
        auto k = s->second.find(key);
        if (k != s->second.end()) return k->second;
    }
    throw ConfigError("missing required config key " + section + "." + key);
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    return has(section, key) ? require_str(section, key) : fallback;
}

int64_t Config::parse_int(const std::string& section, const std::string& key,
                          const std::string& raw) const {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
        throw ConfigError("config key " + section + "." + key + " is not an integer: '" + raw +
                          "'");
    return v;
}

double Config::parse_double(const std::string& section, const std::string& key,
                            const std::string& raw) const {
    try {
        size_t used = 0;
        double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + section + "." + key + " is not a number: '" + raw +
                          "'");
    }
}

int64_t Config::get_int(const std::string& section, const std::string& key,
                        int64_t fallback) const {
    return has(section, key) ? parse_int(section, key, require_str(section, key)) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? parse_double(section, key, require_str(section, key)) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string raw = require_str(section, key);
    if (raw == "true" || raw == "yes" || raw == "1") return true;
    if (raw == "false" || raw == "no" || raw == "0") return false;
    throw ConfigError("config key " + section + "." + key + " is not a boolean: '" + raw + "'");
}

int64_t Config::require_int(const std::string& section, const std::string& key) const {
    return parse_int(section, key, require_str(section, key));
}

double Config::require_double(const std::string& section, const std::string& key) const {
    return parse_double(section, key, require_str(section, key));
}

std::string Config::resolved() const {
    std::string out;
    bool first = true;
    for (const auto& [section, entries] : store_) {
        if (!first) out += '\n';
        first = false;
        out += '[' + section + "]\n";
        for (const auto& [key, value] : entries) out += key + " = " + value + '\n';
    }
    return out;
}

void Config::write_resolved(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << resolved();
    if (!out) throw IoError("failed writing " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Try shorter forms that still round-trip.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[64];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        if (std::stod(shorter) == v) return shorter;
    }
    return buf;
}

std::string format_int(int64_t v) { return std::to_string(v); }

}  // namespace mlmkit
