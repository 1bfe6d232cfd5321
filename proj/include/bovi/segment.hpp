#pragma once

#include "bovi/errors.hpp"
#include "bovi/geometry.hpp"
#include "bovi/types.hpp"

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace bovi {

enum class SegMethod { Single, Adaptive, External };

std::string to_string(SegMethod m);
SegMethod seg_method_from_string(const std::string& s);

/// Filled body mask plus its traced outer boundary.
struct SegmentationResult {
    MaskGrid mask;
    Contour contour;
    std::optional<int> threshold_used;
    SegMethod method = SegMethod::Single;
};

/// Neck-removal and composition options shared by the segmentation entry
/// points. `head_side` says which image edge the head points toward.
struct SegmentOptions {
    bool remove_neck = true;
    double neck_ratio = 0.3;
    Side head_side = Side::Left;
};

/// Rounded mean of all hue values pooled over the supplied images.
int mean_hue_threshold(const std::vector<HueGrid>& images);

/// Binarize: pixel > t -> white (255), pixel <= t -> black (0).
template <class Derived>
MaskGrid threshold(const Eigen::ArrayBase<Derived>& hue, int t) {
    if (t < 0 || t > kHueMax) throw OutOfBounds("hue threshold outside [0,179]");
    MaskGrid out(hue.rows(), hue.cols());
    out = (hue.derived().template cast<int>() > t).template cast<std::uint8_t>() * kMaskOn;
    return out;
}

/// Keep the 8-connected white component whose outer contour encloses the
/// largest pixel area; fill its interior holes. Returns the filled mask and
/// the traced boundary.
std::pair<MaskGrid, Contour> extract_body(const MaskGrid& mask);

/// Truncate the mask at the first column (scanning from the image center
/// toward `head_side`) whose white-pixel count falls below `ratio` of the
/// maximum column count; every column from there to the head-side edge is
/// blackened.
MaskGrid remove_neck(const MaskGrid& mask, double ratio = 0.3, Side head_side = Side::Left);

/// Threshold at `t`, isolate the body, and (optionally) remove the neck.
SegmentationResult single_segment(const HueGrid& hue, int t,
                                  const SegmentOptions& opts = {});

/// Search the minimal threshold, starting at the lowest hue present, whose
/// largest-contour bounding box stays more than `margin` pixels away from
/// every image edge; then finish like single_segment.
SegmentationResult adaptive_segment(const HueGrid& hue, int margin = 5,
                                    const SegmentOptions& opts = {});

/// Ingest an externally produced mask (e.g. neural-network output) through
/// the same body isolation step. Neck removal defaults to off here.
SegmentationResult load_external_mask(const std::filesystem::path& path,
                                      Eigen::Index rows, Eigen::Index cols,
                                      const SegmentOptions& opts = {.remove_neck = false});

SegmentationResult external_mask_result(const MaskGrid& raw,
                                        const SegmentOptions& opts = {.remove_neck = false});

} // namespace bovi
