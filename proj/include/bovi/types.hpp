#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace bovi {

/// Dense row/column image grid, indexed (row, col) = (y, x).
template <class Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-pixel camera-to-surface distance in meters; 0.0 marks missing data.
using DepthGrid = Grid<double>;

/// Hue channel on the half-degree integer scale [0, 179].
using HueGrid = Grid<std::uint8_t>;

/// Binary image: 0 = background, 255 = foreground.
using MaskGrid = Grid<std::uint8_t>;

constexpr std::uint8_t kMaskOn = 255;
constexpr std::uint8_t kMaskOff = 0;
constexpr int kHueMax = 179;

/// Planar RGB raster (one grid per channel).
struct ColorImage {
    Grid<std::uint8_t> r, g, b;

    Eigen::Index rows() const { return r.rows(); }
    Eigen::Index cols() const { return r.cols(); }
};

/// Integer pixel rectangle, (x, y) top-left corner, w x h extent.
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

enum class Side { Left, Right };

inline std::string to_string(Side s) { return s == Side::Left ? "left" : "right"; }

} // namespace bovi
