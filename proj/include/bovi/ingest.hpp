#pragma once

#include "bovi/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bovi {

/// One video frame: colorized depth raster paired with the metric depth map.
struct DepthFrame {
    ColorImage color;
    DepthGrid depth; // meters; 0.0 = missing
    int frame_index = 0;
    std::string video_id;

    Eigen::Index rows() const { return depth.rows(); }
    Eigen::Index cols() const { return depth.cols(); }
};

enum class Period { AM, PM };

std::string to_string(Period p);
Period period_from_string(const std::string& s);

/// One weighing session: a cow on a given day and milking period.
struct Session {
    std::string cow_id;
    int day = 0;
    Period period = Period::AM;
    std::optional<double> body_weight_kg;
};

/// Dataset index: sessions keyed by video, with exclusion rules applied.
struct Manifest {
    std::vector<Session> sessions;                 // same order as videos
    std::vector<std::string> video_ids;            // sessions[i] belongs to video_ids[i]
    std::vector<std::pair<int, Period>> exclusions;

    const Session& session_for(const std::string& video_id) const;
    std::size_t size() const { return sessions.size(); }
};

/// Load a PNG depth image and its CSV depth map as one frame.
DepthFrame load_frame_pair(const std::filesystem::path& png_path,
                           const std::filesystem::path& csv_path);

/// Crop color and depth identically to `rect`. Throws OutOfBounds.
DepthFrame crop_frame(const DepthFrame& frame, const PixelRect& rect);

/// Extract the HSV hue channel on the integer [0,179] scale.
/// Achromatic pixels (r == g == b) map to hue 0.
HueGrid rgb_to_hue(const ColorImage& color);
inline HueGrid rgb_to_hue(const DepthFrame& frame) { return rgb_to_hue(frame.color); }

std::uint8_t pixel_hue(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Frame retention rule: drop the first `skip` frames, keep every
/// `stride`-th thereafter. Returns the retained indices.
std::vector<int> subsample_frames(int frame_count, int skip = 2, int stride = 15);

/// Read `video_id,cow_id,day,period,body_weight_kg` rows; drop any session
/// whose (day, period) appears in `exclusions`.
Manifest load_manifest(const std::filesystem::path& path,
                       const std::vector<std::pair<int, Period>>& exclusions = {});

/// Read a `day,period` exclusion list (header optional).
std::vector<std::pair<int, Period>> load_exclusions(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

} // namespace bovi
