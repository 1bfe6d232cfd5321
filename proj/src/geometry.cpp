#include "bovi/geometry.hpp"

#include "bovi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bovi {

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool less_yx(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.y() != b.y() ? a.y() < b.y() : a.x() < b.x();
}

} // namespace

std::array<Eigen::Vector2d, 4> RotatedRect::corners() const {
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const Eigen::Vector2d u{std::cos(rad), std::sin(rad)};  // long-side direction
    const Eigen::Vector2d v{-std::sin(rad), std::cos(rad)}; // short-side direction
    const Eigen::Vector2d ha = 0.5 * side_a * u;
    const Eigen::Vector2d hb = 0.5 * side_b * v;
    return {center - ha - hb, center + ha - hb, center + ha + hb, center - ha + hb};
}

std::vector<Eigen::Vector2d> convex_hull(const std::vector<Eigen::Vector2d>& points) {
    std::vector<Eigen::Vector2d> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
                              return a.x() == b.x() && a.y() == b.y();
                          }),
              pts.end());
    if (pts.size() < 3) throw DegenerateInput("convex hull needs >= 3 distinct points");

    // Monotone chain; strict turns only, so collinear points are dropped.
    const std::size_t n = pts.size();
    std::vector<Eigen::Vector2d> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1); // last point repeats the first
    if (hull.size() < 3) throw DegenerateInput("all points are collinear");

    // Canonical start: lowest-then-leftmost vertex.
    auto start = std::min_element(hull.begin(), hull.end(), less_yx);
    std::rotate(hull.begin(), start, hull.end());
    return hull;
}

RotatedRect min_area_rect(const std::vector<Eigen::Vector2d>& points) {
    const auto hull = convex_hull(points);
    const std::size_t n = hull.size();

    RotatedRect best;
    double best_area = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d edge = hull[(i + 1) % n] - hull[i];
        const double len = edge.norm();
        if (len == 0.0) continue;
        const Eigen::Vector2d u = edge / len;
        const Eigen::Vector2d v{-u.y(), u.x()};

        double lo_u = std::numeric_limits<double>::infinity(), hi_u = -lo_u;
        double lo_v = lo_u, hi_v = -lo_u;
        for (const auto& p : hull) {
            const double pu = p.dot(u);
            const double pv = p.dot(v);
            lo_u = std::min(lo_u, pu);
            hi_u = std::max(hi_u, pu);
            lo_v = std::min(lo_v, pv);
            hi_v = std::max(hi_v, pv);
        }

        const double du = hi_u - lo_u;
        const double dv = hi_v - lo_v;
        const double area = du * dv;
        if (area >= best_area) continue;
        best_area = area;

        const double mid_u = 0.5 * (lo_u + hi_u);
        const double mid_v = 0.5 * (lo_v + hi_v);
        best.center = mid_u * u + mid_v * v;

        // Fold the long-side direction into [0, 180); a square's axes are
        // interchangeable, so it folds further to [0, 90).
        double theta = std::atan2(u.y(), u.x()) * 180.0 / std::numbers::pi;
        if (du < dv) theta += 90.0;
        const double period = du == dv ? 90.0 : 180.0;
        theta = std::fmod(theta, period);
        if (theta < 0) theta += period;
        best.angle_deg = theta;
        best.side_a = std::max(du, dv);
        best.side_b = std::min(du, dv);
    }

    if (!std::isfinite(best_area) || best.side_b <= 0.0)
        throw DegenerateInput("points do not span a 2-d rectangle");
    return best;
}

RotatedRect min_area_rect(const Contour& contour) { return min_area_rect(to_points_d(contour)); }

Aabb axis_aligned_bbox(const Contour& contour) {
    if (contour.points.empty()) throw DegenerateInput("empty contour");
    int min_x = contour.points.front().x(), max_x = min_x;
    int min_y = contour.points.front().y(), max_y = min_y;
    for (const auto& p : contour.points) {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_y = std::min(min_y, p.y());
        max_y = std::max(max_y, p.y());
    }
    return {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

Eigen::Vector2d centroid(const MaskGrid& mask) {
    double m00 = 0, m10 = 0, m01 = 0;
    for (Eigen::Index y = 0; y < mask.rows(); ++y)
        for (Eigen::Index x = 0; x < mask.cols(); ++x)
            if (mask(y, x)) {
                m00 += 1.0;
                m10 += static_cast<double>(x);
                m01 += static_cast<double>(y);
            }
    if (m00 == 0) throw NoForeground("centroid of empty mask");
    return {m10 / m00, m01 / m00};
}

std::vector<Eigen::Vector2d> to_points_d(const Contour& contour) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(contour.points.size());
    for (const auto& p : contour.points) pts.emplace_back(p.x(), p.y());
    return pts;
}

} // namespace bovi
