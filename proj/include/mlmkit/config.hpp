// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "mlmkit/common.hpp"

namespace mlmkit {

/// INI-style key/value configuration: [section] headers, key = value lines,
/// full-line # comments. Values stay strings until a typed getter parses
/// them. The store is sorted, so snapshots are canonical.
class Config {
public:
    Config() = default;
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    /// "section.key=value" (the CLI --set form).
    void apply_override(const std::string& dotted);

    bool has(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, const std::string& value);
    /// set() only when the key is still absent; used to materialize defaults
    /// so the resolved snapshot is complete.
    void default_to(const std::string& section, const std::string& key, const std::string& value);

    std::string require_str(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    int64_t require_int(const std::string& section, const std::string& key) const;
    double require_double(const std::string& section, const std::string& key) const;

    /// Canonical text form; parse_string(resolved()) reproduces the store.
    std::string resolved() const;
    void write_resolved(const std::filesystem::path& path) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return store_;
    }

private:
    int64_t parse_int(const std::string& section, const std::string& key,
                      const std::string& raw) const;
    double parse_double(const std::string& section, const std::string& key,
                        const std::string& raw) const;

    std::map<std::string, std::map<std::string, std::string>> store_;
};

std::string format_double(double v);  // shortest round-trip decimal form
std::string format_int(int64_t v);

}  // namespace mlmkit
