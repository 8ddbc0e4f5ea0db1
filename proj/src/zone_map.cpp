#include "tactix/zone_map.hpp"

#include "tactix/digest.hpp"
#include "tactix/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace tactix {

using nlohmann::json;

namespace {

bool polygons_overlap(const Polygon& a, const Polygon& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            if (segments_cross(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) return true;
    for (const auto& v : a)
        if (strictly_contains(b, v)) return true;
    for (const auto& v : b)
        if (strictly_contains(a, v)) return true;
    // coincident or nested boundaries: probe centroids and edge midpoints
    if (strictly_contains(b, area_centroid(a)) || strictly_contains(a, area_centroid(b))) return true;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (strictly_contains(b, Vec2((a[i] + a[(i + 1) % a.size()]) / 2))) return true;
    return false;
}

} // namespace

std::string_view to_string(ZoneKind kind)
{
    return kind == ZoneKind::organelle ? "organelle" : "background";
}

ZoneMap::ZoneMap(double width_mm, double height_mm, std::vector<Zone> zones)
    : width_mm_(width_mm), height_mm_(height_mm), zones_(std::move(zones))
{
    if (!(width_mm_ > 0) || !(height_mm_ > 0) || !std::isfinite(width_mm_) || !std::isfinite(height_mm_))
        throw ValidationError("map bounds must be positive and finite");

    std::set<std::string> ids;
    std::size_t backgrounds = 0;
    for (std::size_t i = 0; i < zones_.size(); ++i) {
        const Zone& z = zones_[i];
        if (z.id.empty()) throw ValidationError("zone with empty id");
        if (!ids.insert(z.id).second) throw ValidationError("duplicate zone id '" + z.id + "'");
        for (int c : z.color)
            if (c < 0 || c > 255) throw ValidationError("zone '" + z.id + "': color component out of range");
        if (z.kind == ZoneKind::background) {
            ++backgrounds;
            background_index_ = i;
            if (!z.polygon.empty()) throw ValidationError("background zone '" + z.id + "' must not have a polygon");
            continue;
        }
        if (z.polygon.size() < 3) throw ValidationError("zone '" + z.id + "': polygon needs at least 3 vertices");
        for (const auto& v : z.polygon) {
            if (!is_finite(v)) throw ValidationError("zone '" + z.id + "': non-finite vertex");
            if (!in_bounds(v)) throw ValidationError("zone '" + z.id + "': vertex out of bounds");
        }
        if (!is_simple(z.polygon)) throw ValidationError("zone '" + z.id + "': polygon is self-intersecting");
        if (!(signed_area(z.polygon) > 0))
            throw ValidationError("zone '" + z.id + "': bad winding (polygon must be counter-clockwise)");
    }
    if (backgrounds == 0) throw ValidationError("no background zone");
    if (backgrounds > 1) throw ValidationError("more than one background zone");

    for (std::size_t i = 0; i < zones_.size(); ++i) {
        if (zones_[i].kind != ZoneKind::organelle) continue;
        for (std::size_t j = i + 1; j < zones_.size(); ++j) {
            if (zones_[j].kind != ZoneKind::organelle) continue;
            if (polygons_overlap(zones_[i].polygon, zones_[j].polygon))
                throw ValidationError("zones overlap: '" + zones_[i].id + "' and '" + zones_[j].id + "'");
        }
    }

    // Background anchor: 1 mm grid point maximising clearance to organelles and edges.
    double best = -1.0;
    for (double y = 1.0; y < height_mm_; y += 1.0) {
        for (double x = 1.0; x < width_mm_; x += 1.0) {
            const Vec2 p(x, y);
            double clearance = std::min({x, y, width_mm_ - x, height_mm_ - y});
            bool inside = false;
            for (const Zone& z : zones_) {
                if (z.kind != ZoneKind::organelle) continue;
                if (contains(z.polygon, p)) {
                    inside = true;
                    break;
                }
                for (std::size_t k = 0; k < z.polygon.size(); ++k)
                    clearance = std::min(clearance, segment_distance(p, z.polygon[k], z.polygon[(k + 1) % z.polygon.size()]));
            }
            if (!inside && clearance > best) {
                best = clearance;
                background_anchor_ = p;
            }
        }
    }
}

bool ZoneMap::in_bounds(const Vec2& p) const
{
    return p.x() >= 0 && p.x() <= width_mm_ && p.y() >= 0 && p.y() <= height_mm_;
}

Vec2 ZoneMap::clamp_to_bounds(const Vec2& p) const
{
    return {std::clamp(p.x(), 0.0, width_mm_), std::clamp(p.y(), 0.0, height_mm_)};
}

bool ZoneMap::has_zone(std::string_view id) const
{
    for (const Zone& z : zones_)
        if (z.id == id) return true;
    return false;
}

const Zone& ZoneMap::zone(std::string_view id) const
{
    for (const Zone& z : zones_)
        if (z.id == id) return z;
    throw DomainError("unknown zone id '" + std::string(id) + "'");
}

const std::string& ZoneMap::locate(const Vec2& p) const
{
    if (!is_finite(p) || !in_bounds(p)) throw DomainError("point out of map bounds");
    for (const Zone& z : zones_)
        if (z.kind == ZoneKind::organelle && contains(z.polygon, p)) return z.id;
    return zones_[background_index_].id;
}

Vec2 ZoneMap::zone_centroid(std::string_view id) const
{
    const Zone& z = zone(id);
    if (z.kind == ZoneKind::background) throw DomainError("background has no centroid");
    return area_centroid(z.polygon);
}

Vec2 ZoneMap::anchor_point(std::string_view id) const
{
    const Zone& z = zone(id);
    return z.kind == ZoneKind::background ? background_anchor_ : area_centroid(z.polygon);
}

namespace {

Zone parse_zone(const json& j)
{
    Zone z;
    z.id = j.at("id").get<std::string>();
    z.name = j.value("name", z.id);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "organelle")
        z.kind = ZoneKind::organelle;
    else if (kind == "background")
        z.kind = ZoneKind::background;
    else
        throw ValidationError("zone '" + z.id + "': unknown kind '" + kind + "'");
    if (j.contains("polygon")) {
        for (const auto& v : j.at("polygon")) {
            if (!v.is_array() || v.size() != 2) throw ParseError("zone '" + z.id + "': vertex must be [x, y]");
            z.polygon.emplace_back(v[0].get<double>(), v[1].get<double>());
        }
    }
    if (j.contains("color")) {
        const auto& c = j.at("color");
        if (!c.is_array() || c.size() != 3) throw ParseError("zone '" + z.id + "': color must be [r, g, b]");
        for (int i = 0; i < 3; ++i) z.color[i] = c[i].get<int>();
    }
    z.info_text = j.value("info_text", std::string{});
    return z;
}

} // namespace

ZoneMap load_map(std::string_view document)
{
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("map: malformed JSON: ") + e.what());
    }
    try {
        if (!j.is_object()) throw ParseError("map: document must be a JSON object");
        if (j.value("version", 1) != 1) throw ParseError("map: unsupported version");
        std::vector<Zone> zones;
        for (const auto& zj : j.at("zones")) zones.push_back(parse_zone(zj));
        return ZoneMap(j.value("width_mm", 297.0), j.value("height_mm", 210.0), std::move(zones));
    } catch (const json::exception& e) {
        throw ParseError(std::string("map: ") + e.what());
    }
}

ZoneMap load_map_file(const std::string& path)
{
    return load_map(read_file(path));
}

std::string serialize_map(const ZoneMap& map)
{
    json zones = json::array();
    for (const Zone& z : map.zones()) {
        json zj = {{"id", z.id}, {"name", z.name}, {"kind", std::string(to_string(z.kind))}};
        if (z.kind == ZoneKind::organelle) {
            json poly = json::array();
            for (const auto& v : z.polygon) poly.push_back({v.x(), v.y()});
            zj["polygon"] = std::move(poly);
        }
        zj["color"] = {z.color[0], z.color[1], z.color[2]};
        zj["info_text"] = z.info_text;
        zones.push_back(std::move(zj));
    }
    json j = {{"version", 1}, {"width_mm", map.width_mm()}, {"height_mm", map.height_mm()}, {"zones", std::move(zones)}};
    return j.dump(2);
}

} // namespace tactix
