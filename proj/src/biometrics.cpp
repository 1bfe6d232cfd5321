#include "bovi/biometrics.hpp"

#include <algorithm>
#include <cmath>

namespace bovi {

DepthGrid replace_missing_depths(const DepthGrid& depth, const MaskGrid& mask) {
    if (depth.rows() != mask.rows() || depth.cols() != mask.cols())
        throw DimensionMismatch("depth and mask dimensions differ");

    double sum = 0.0;
    long n = 0;
    for (Eigen::Index y = 0; y < depth.rows(); ++y) {
        for (Eigen::Index x = 0; x < depth.cols(); ++x) {
            if (mask(y, x) != kMaskOff && depth(y, x) > 0.0) {
                sum += depth(y, x);
                ++n;
            }
        }
    }
    if (n == 0) throw AllDepthMissing("no valid depth reading under the mask");
    const double mean = sum / static_cast<double>(n);

    DepthGrid out = depth;
    for (Eigen::Index y = 0; y < depth.rows(); ++y)
        for (Eigen::Index x = 0; x < depth.cols(); ++x)
            if (mask(y, x) != kMaskOff && depth(y, x) == 0.0) out(y, x) = mean;
    return out;
}

FrameFeatures frame_features(const MaskGrid& mask, const Contour& contour,
                             const DepthGrid& depth, const CameraConfig& cam) {
    const RotatedRect rect = min_area_rect(contour);
    const DepthGrid filled = replace_missing_depths(depth, mask);

    double depth_sum = 0.0;
    double volume = 0.0;
    double cx = 0.0, cy = 0.0;
    long n = 0;
    for (Eigen::Index y = 0; y < mask.rows(); ++y) {
        for (Eigen::Index x = 0; x < mask.cols(); ++x) {
            if (mask(y, x) == kMaskOff) continue;
            depth_sum += filled(y, x);
            volume += std::max(0.0, cam.height_m - filled(y, x));
            cx += static_cast<double>(x);
            cy += static_cast<double>(y);
            ++n;
        }
    }
    if (n == 0) throw NoForeground("mask has no white pixels");

    const auto ix = static_cast<Eigen::Index>(std::lround(cx / static_cast<double>(n)));
    const auto iy = static_cast<Eigen::Index>(std::lround(cy / static_cast<double>(n)));

    FrameFeatures f;
    f.length_px = std::max(rect.side_a, rect.side_b);
    f.width_px = std::min(rect.side_a, rect.side_b);
    f.centroid_height_m = cam.height_m - filled(iy, ix);
    f.avg_height_m = cam.height_m - depth_sum / static_cast<double>(n);
    f.volume = volume;
    return f;
}

double median(std::vector<double> values) {
    if (values.empty()) throw EmptyInput("median of empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

VideoFeatures aggregate_video(const std::vector<FrameFeatures>& frames) {
    if (frames.empty()) throw EmptyInput("no frames to aggregate");
    std::vector<double> buf(frames.size());
    auto field = [&](auto getter) {
        std::transform(frames.begin(), frames.end(), buf.begin(), getter);
        return median(buf);
    };
    VideoFeatures v;
    v.length_px = field([](const FrameFeatures& f) { return f.length_px; });
    v.width_px = field([](const FrameFeatures& f) { return f.width_px; });
    v.centroid_height_m = field([](const FrameFeatures& f) { return f.centroid_height_m; });
    v.avg_height_m = field([](const FrameFeatures& f) { return f.avg_height_m; });
    v.volume = field([](const FrameFeatures& f) { return f.volume; });
    v.n_frames_used = static_cast<long>(frames.size());
    return v;
}

} // namespace bovi
