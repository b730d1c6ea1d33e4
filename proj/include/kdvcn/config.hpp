#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kdvcn/errors.hpp"

namespace kdvcn {

/**
 * Minimal config document: `key = value` lines grouped under `[section]`
 * headers, `#` starts a comment, blank lines ignored. Order is preserved so
 * parse-emit-parse is the identity on the parsed content.
 */
struct ConfigDoc {
    using Entries = std::vector<std::pair<std::string, std::string>>;
    std::vector<std::pair<std::string, Entries>> sections;

    bool operator==(const ConfigDoc&) const = default;

    Entries& section(const std::string& name) {
        for (auto& [s, entries] : sections)
            if (s == name) return entries;
        sections.emplace_back(name, Entries{});
        return sections.back().second;
    }

    const Entries* find_section(const std::string& name) const {
        for (const auto& [s, entries] : sections)
            if (s == name) return &entries;
        return nullptr;
    }

    void set(const std::string& section_name, const std::string& key, const std::string& value) {
        section(section_name).emplace_back(key, value);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline ConfigDoc parse_config(const std::string& text) {
    ConfigDoc doc;
    std::string current;
    std::size_t pos = 0, lineno = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;

        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            current = detail::trim(line.substr(1, line.size() - 2));
            doc.section(current);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        doc.set(current, key, value);
    }
    return doc;
}

inline std::string emit_config(const ConfigDoc& doc) {
    std::string out;
    bool first = true;
    for (const auto& [name, entries] : doc.sections) {
        if (!first) out += '\n';
        first = false;
        if (!name.empty()) out += '[' + name + "]\n";
        for (const auto& [k, v] : entries) out += k + " = " + v + '\n';
    }
    return out;
}

} // namespace kdvcn
