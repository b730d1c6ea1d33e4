#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kdvcn/grid.hpp"

namespace kdvcn {

/// Shortest-faithful decimal: 17 significant digits round-trip any double.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

struct Snapshot {
    GridFunction u;
    std::map<std::string, std::string> metadata;
};

/// Snapshot CSV: '#'-prefixed metadata lines, an `x,u` header, then one row
/// per node at 17 significant digits (bit-exact round-trip).
inline void write_snapshot(const std::filesystem::path& path, const GridFunction& u,
                           const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ostringstream out;
    out << "# n = " << u.grid.n_cells << "\n";
    out << "# dx = " << format_g17(u.grid.dx) << "\n";
    out << "# x_left = " << format_g17(u.grid.x_left) << "\n";
    for (const auto& [k, v] : metadata) out << "# " << k << " = " << v << "\n";
    out << "x,u\n";
    for (std::int64_t j = 0; j < u.size(); ++j)
        out << format_g17(u.grid.x(j)) << ',' << format_g17(u[j]) << "\n";

    // write-then-rename so concurrent readers never see a torn file
    const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream f(tmp);
        if (!f) throw ConfigError("write_snapshot: cannot open " + tmp.string());
        f << out.str();
    }
    std::filesystem::rename(tmp, path);
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("read_snapshot: cannot open " + path.string());
    Snapshot snap;
    std::string line;
    std::vector<double> values;
    bool seen_header = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                std::string val = line.substr(eq + 1);
                const auto trim = [](std::string& s) {
                    const auto b = s.find_first_not_of(" \t");
                    const auto e = s.find_last_not_of(" \t\r");
                    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
                };
                trim(key);
                trim(val);
                snap.metadata[key] = val;
            }
            continue;
        }
        if (!seen_header) {
            seen_header = true;   // the `x,u` column header
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("read_snapshot: malformed row in " + path.string());
        values.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
    }
    const auto need = [&](const char* key) {
        auto it = snap.metadata.find(key);
        if (it == snap.metadata.end())
            throw ConfigError("read_snapshot: missing metadata '" + std::string(key) + "'");
        return it->second;
    };
    const std::int64_t n = std::strtoll(need("n").c_str(), nullptr, 10);
    const double dx = std::strtod(need("dx").c_str(), nullptr);
    const double x_left = std::strtod(need("x_left").c_str(), nullptr);
    if (n != static_cast<std::int64_t>(values.size()))
        throw ConfigError("read_snapshot: row count does not match n in " + path.string());
    snap.u = GridFunction(Grid(n, dx, x_left), std::move(values));
    return snap;
}

} // namespace kdvcn
