#pragma once

#include "tactix/activity.hpp"
#include "tactix/digest.hpp"
#include "tactix/zone_map.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tactix::test {

inline std::string data_path(const std::string& name) { return std::string(TACTIX_DATA_DIR) + "/" + name; }
inline std::string test_data_path(const std::string& name) { return std::string(TACTIX_TEST_DATA_DIR) + "/" + name; }

inline const ZoneMap& shipped_map()
{
    static const ZoneMap map = load_map_file(data_path("cell_a4.map.json"));
    return map;
}

inline const Activity& shipped_activity()
{
    static const Activity activity = load_activity_file(data_path("cell_activity.json"));
    return activity;
}

inline const std::string& shipped_map_hash()
{
    static const std::string hash = sha256_hex(read_file(data_path("cell_a4.map.json")));
    return hash;
}

/// Classic even-odd ray casting (horizontal ray to +x), written independently
/// of the library's winding-number test. Boundary points are not handled.
inline bool ray_cast_inside(const std::vector<std::pair<double, double>>& poly, double x, double y)
{
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto [xi, yi] = poly[i];
        const auto [xj, yj] = poly[j];
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

/// Textbook two-pass Pearson over plain vectors, long double accumulation.
inline double brute_pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    const std::size_t n = a.size();
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

/// A fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("tactix_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace tactix::test
