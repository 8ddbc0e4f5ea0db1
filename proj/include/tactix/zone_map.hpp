#pragma once

#include "tactix/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tactix {

enum class ZoneKind { organelle, background };

struct Zone {
    std::string id;
    std::string name;
    ZoneKind kind = ZoneKind::organelle;
    Polygon polygon; // empty iff kind == background
    std::array<int, 3> color{0, 0, 0};
    std::string info_text;

    bool operator==(const Zone&) const = default;
};

/// Cell map: organelle polygons on an A4 sheet plus one background zone.
///
/// Frame: origin at the top-left corner of the landscape sheet, x to the right,
/// y downward, millimetres. Immutable once loaded.
class ZoneMap {
public:
    ZoneMap() = default;

    /// Validates every invariant; throws ValidationError naming the first violation.
    ZoneMap(double width_mm, double height_mm, std::vector<Zone> zones);

    double width_mm() const { return width_mm_; }
    double height_mm() const { return height_mm_; }
    const std::vector<Zone>& zones() const { return zones_; }
    const std::string& background_zone_id() const { return zones_[background_index_].id; }

    bool in_bounds(const Vec2& p) const;
    Vec2 clamp_to_bounds(const Vec2& p) const;

    bool has_zone(std::string_view id) const;
    const Zone& zone(std::string_view id) const;
    bool is_organelle(std::string_view id) const { return zone(id).kind == ZoneKind::organelle; }

    /// Id of the first organelle (file order) containing p, boundary inclusive;
    /// the background id otherwise. Throws DomainError for out-of-bounds points.
    const std::string& locate(const Vec2& p) const;

    /// Area centroid of an organelle. Throws DomainError for the background.
    Vec2 zone_centroid(std::string_view id) const;

    /// A representative in-bounds point for any zone: the centroid for an
    /// organelle, and for the background the grid point farthest from every
    /// organelle and the sheet edge.
    Vec2 anchor_point(std::string_view id) const;

    bool operator==(const ZoneMap& other) const
    {
        return width_mm_ == other.width_mm_ && height_mm_ == other.height_mm_ && zones_ == other.zones_;
    }

private:
    double width_mm_ = 297.0;
    double height_mm_ = 210.0;
    std::vector<Zone> zones_;
    std::size_t background_index_ = 0;
    Vec2 background_anchor_ = Vec2::Zero();
};

/// Parses and validates a map document (UTF-8 JSON).
ZoneMap load_map(std::string_view document);
ZoneMap load_map_file(const std::string& path);

/// Canonical JSON text for a map; load_map(serialize_map(m)) == m.
std::string serialize_map(const ZoneMap& map);

std::string_view to_string(ZoneKind kind);

} // namespace tactix
