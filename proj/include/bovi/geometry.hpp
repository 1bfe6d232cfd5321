#pragma once

#include "bovi/types.hpp"

#include <array>
#include <vector>

namespace bovi {

/// Closed pixel boundary of one connected region, traced in order.
/// area_px is the number of pixels enclosed by the boundary (holes included).
struct Contour {
    std::vector<Eigen::Vector2i> points; // (x, y)
    double area_px = 0.0;
};

/// Arbitrarily oriented rectangle. Canonical form: side_a >= side_b and
/// angle = direction of the long side in [0, 180) degrees ([0, 90) for
/// squares, whose axes are interchangeable).
struct RotatedRect {
    Eigen::Vector2d center{0, 0};
    double side_a = 0.0;
    double side_b = 0.0;
    double angle_deg = 0.0;

    /// The four corners, counter-clockwise.
    std::array<Eigen::Vector2d, 4> corners() const;
    double area() const { return side_a * side_b; }
};

/// Axis-aligned pixel bounding box (w, h count pixels inclusively).
struct Aabb {
    int x = 0, y = 0, w = 0, h = 0;
};

/// Counter-clockwise convex hull with no collinear interior vertices,
/// starting at the lowest-then-leftmost point. Throws DegenerateInput for
/// fewer than 3 distinct points or an all-collinear set.
std::vector<Eigen::Vector2d> convex_hull(const std::vector<Eigen::Vector2d>& points);

/// Minimum-area enclosing rectangle by rotating calipers over hull edges.
RotatedRect min_area_rect(const std::vector<Eigen::Vector2d>& points);
RotatedRect min_area_rect(const Contour& contour);

/// Tightest axis-aligned box containing all contour points.
Aabb axis_aligned_bbox(const Contour& contour);

/// Area-moment centroid of the white pixels (pixel centers at integer
/// coordinates). Returns (x, y). Throws NoForeground on an empty mask.
Eigen::Vector2d centroid(const MaskGrid& mask);

std::vector<Eigen::Vector2d> to_points_d(const Contour& contour);

} // namespace bovi
