#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tactix {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;

/// Planar point or force. Millimetres for positions, force units for forces.
using Vec2 = Vec2T<double>;

template <typename Scalar>
using PolygonT = std::vector<Vec2T<Scalar>>;

using Polygon = PolygonT<double>;

template <typename Scalar>
bool is_finite(const Vec2T<Scalar>& v)
{
    return std::isfinite(v.x()) && std::isfinite(v.y());
}

/// Rounding after a rescale can leave the norm one ulp above the cap.
template <typename Derived>
void trim_to_norm(Eigen::MatrixBase<Derived>& v, typename Derived::Scalar max_norm)
{
    using Scalar = typename Derived::Scalar;
    while (v.norm() > max_norm) v *= Scalar(1) - std::numeric_limits<Scalar>::epsilon();
}

/// Scales v down to norm max_norm if it is longer; direction is preserved.
template <typename Derived>
auto clamp_norm(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar max_norm)
{
    using Scalar = typename Derived::Scalar;
    const Scalar n = v.norm();
    typename Derived::PlainObject out = v;
    if (n > max_norm && n > Scalar(0)) {
        out *= max_norm / n;
        trim_to_norm(out, max_norm);
    }
    return out;
}

/// z-component of (b - a) x (c - a).
template <typename Scalar>
Scalar cross(const Vec2T<Scalar>& a, const Vec2T<Scalar>& b, const Vec2T<Scalar>& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

/// Shoelace signed area. Positive for counter-clockwise winding in (x, y).
template <typename Scalar>
Scalar signed_area(const PolygonT<Scalar>& poly)
{
    Scalar twice = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % n];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return twice / Scalar(2);
}

/// Area centroid of a simple polygon.
template <typename Scalar>
Vec2T<Scalar> area_centroid(const PolygonT<Scalar>& poly)
{
    Scalar twice = 0;
    Vec2T<Scalar> acc = Vec2T<Scalar>::Zero();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % n];
        const Scalar w = p.x() * q.y() - q.x() * p.y();
        twice += w;
        acc += (p + q) * w;
    }
    return acc / (Scalar(3) * twice);
}

template <typename Scalar>
bool on_segment(const Vec2T<Scalar>& p, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b, Scalar eps = Scalar(1e-9))
{
    const Vec2T<Scalar> ab = b - a;
    const Scalar len = ab.norm();
    if (len == Scalar(0)) return (p - a).norm() <= eps;
    if (std::abs(cross(a, b, p)) / len > eps) return false;
    const Scalar t = (p - a).dot(ab) / (len * len);
    return t >= -eps / len && t <= Scalar(1) + eps / len;
}

/// Boundary-inclusive containment via the winding number.
template <typename Scalar>
bool contains(const PolygonT<Scalar>& poly, const Vec2T<Scalar>& p)
{
    const std::size_t n = poly.size();
    if (n < 3) return false;
    int winding = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        if (on_segment(p, a, b)) return true;
        if (a.y() <= p.y()) {
            if (b.y() > p.y() && cross(a, b, p) > 0) ++winding;
        } else {
            if (b.y() <= p.y() && cross(a, b, p) < 0) --winding;
        }
    }
    return winding != 0;
}

/// Strict interior containment (boundary excluded).
template <typename Scalar>
bool strictly_contains(const PolygonT<Scalar>& poly, const Vec2T<Scalar>& p)
{
    for (std::size_t i = 0; i < poly.size(); ++i)
        if (on_segment(p, poly[i], poly[(i + 1) % poly.size()])) return false;
    return contains(poly, p);
}

/// True when the open segments ab and cd cross at a single interior point.
template <typename Scalar>
bool segments_cross(const Vec2T<Scalar>& a, const Vec2T<Scalar>& b, const Vec2T<Scalar>& c, const Vec2T<Scalar>& d)
{
    const Scalar d1 = cross(c, d, a);
    const Scalar d2 = cross(c, d, b);
    const Scalar d3 = cross(a, b, c);
    const Scalar d4 = cross(a, b, d);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

/// True when segments ab and cd share any point, touching included.
template <typename Scalar>
bool segments_touch(const Vec2T<Scalar>& a, const Vec2T<Scalar>& b, const Vec2T<Scalar>& c, const Vec2T<Scalar>& d)
{
    return segments_cross(a, b, c, d) || on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) ||
           on_segment(d, a, b);
}

/// Non-adjacent edges never touch.
template <typename Scalar>
bool is_simple(const PolygonT<Scalar>& poly)
{
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const auto& a = poly[i];
            const auto& b = poly[(i + 1) % n];
            const auto& c = poly[j];
            const auto& d = poly[(j + 1) % n];
            if (adjacent) {
                // adjacent edges may only share their common vertex
                if (n == 3) continue;
                const auto& shared = (j == i + 1) ? b : a;
                const auto& other_ab = (j == i + 1) ? a : b;
                const auto& other_cd = (j == i + 1) ? d : c;
                if (on_segment(other_ab, c, d) && (other_ab - shared).norm() > 1e-9) return false;
                if (on_segment(other_cd, a, b) && (other_cd - shared).norm() > 1e-9) return false;
                continue;
            }
            if (segments_touch(a, b, c, d)) return false;
        }
    }
    return true;
}

/// Distance from p to segment ab.
template <typename Scalar>
Scalar segment_distance(const Vec2T<Scalar>& p, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b)
{
    const Vec2T<Scalar> ab = b - a;
    const Scalar len2 = ab.squaredNorm();
    Scalar t = len2 > 0 ? (p - a).dot(ab) / len2 : Scalar(0);
    t = std::clamp(t, Scalar(0), Scalar(1));
    return (a + t * ab - p).norm();
}

} // namespace tactix
