#pragma once

#include "bovi/errors.hpp"
#include "bovi/geometry.hpp"
#include "bovi/ingest.hpp"
#include "bovi/types.hpp"

#include <string>
#include <vector>

namespace bovi {

struct CameraConfig {
    double height_m = 2.95; // lens to pen floor, straight down
};

/// Measurements taken from one segmented frame. Lengths are in pixels of the
/// image plane; heights and volume come from the depth channel.
struct FrameFeatures {
    double length_px = 0.0;        // long side of the minimum-area rectangle
    double width_px = 0.0;         // short side
    double centroid_height_m = 0.0;
    double avg_height_m = 0.0;
    double volume = 0.0;           // sum of per-pixel heights over the mask
};

/// Per-video medians of the frame measurements.
struct VideoFeatures {
    std::string video_id;
    Session session;
    double length_px = 0.0;
    double width_px = 0.0;
    double centroid_height_m = 0.0;
    double avg_height_m = 0.0;
    double volume = 0.0;
    long n_frames_used = 0;
};

/// Copy of `depth` where zeros (missing readings) under the mask are replaced
/// by the mean of the non-zero in-mask depths. Pixels outside the mask are
/// untouched.
DepthGrid replace_missing_depths(const DepthGrid& depth, const MaskGrid& mask);

/// Extract all frame measurements from a filled body mask, its boundary, and
/// the matching depth grid.
FrameFeatures frame_features(const MaskGrid& mask, const Contour& contour,
                             const DepthGrid& depth, const CameraConfig& cam = {});

/// Median of each field across frames; n_frames_used is the frame count.
VideoFeatures aggregate_video(const std::vector<FrameFeatures>& frames);

/// Median with the even-count convention: mean of the two central values.
double median(std::vector<double> values);

} // namespace bovi
