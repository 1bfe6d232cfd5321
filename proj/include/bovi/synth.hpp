#pragma once

#include "bovi/biometrics.hpp"
#include "bovi/ingest.hpp"
#include "bovi/regress.hpp"
#include "bovi/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bovi {

/// Body silhouettes the renderer knows. The plateau is a flat-topped box
/// useful when a test needs pixel-exact feature recovery.
enum class BodyShape { HalfEllipsoid, Plateau };

struct NeckSpec {
    double length_px = 120.0;
    double radius_px = 30.0;
    double height_m = 0.35; // half-cylinder crest above the floor
    Side side = Side::Left;
};

struct RailSpec {
    bool horizontal = true; // full-width stripe; false = full-height
    int lo = 0;             // first row (or column) of the stripe
    int hi = 0;             // last row (or column), inclusive
    double height_m = 0.1;  // stripe crest above the floor
};

struct SceneSpec {
    int width = 848;
    int height = 480;
    BodyShape shape = BodyShape::HalfEllipsoid;
    double a_px = 250.0; // semi-axis along the body axis (half side for plateau)
    double b_px = 110.0;
    double c_m = 0.55;   // apex height above the floor
    double center_x = 424.0;
    double center_y = 240.0;
    double yaw_deg = 0.0;
    std::optional<NeckSpec> neck;
    std::vector<RailSpec> rails;
    double floor_depth_m = 2.95;
    double noise_sd_m = 0.0;
    double dropout_rate = 0.0; // fraction of body pixels dropped to 0 depth
    unsigned seed = 0;
};

/// Closed-form measurements of the body (neck excluded), in the same units
/// the pipeline reports: heights relative to the camera, volume in m·px².
struct SceneTruth {
    double length_px = 0.0;
    double width_px = 0.0;
    double max_height_m = 0.0;
    double avg_height_m = 0.0;
    double volume = 0.0;
};

struct Scene {
    DepthFrame frame;
    SceneTruth truth;
    MaskGrid gt_mask; // exact rasterized body+neck footprint
};

/// Fixed monotone colormap: deeper pixels get smaller hues. Depth 0 (missing)
/// maps to hue 0; valid depths land on [1, 179] over the 1–3 m working range.
int depth_to_hue(double depth_m);

/// Hue (half-degree scale) to fully saturated RGB. Inverse of pixel hue
/// extraction: extracting the hue of the returned color gives `hue` back.
void hue_to_rgb(int hue, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b);

/// Render the color raster for a depth grid via the fixed colormap.
ColorImage render_color(const DepthGrid& depth);

Scene generate_scene(const SceneSpec& spec, const CameraConfig& cam = {});

/// Write a scene the way the ingest layer expects data on disk:
/// <root>/frames/<video>/frame_%06d.png + .csv, the ground-truth mask under
/// <root>/masks/truth/<video>/, and a JSON truth sidecar next to the frame.
void save_scene_files(const std::filesystem::path& root, const std::string& video_id,
                      int frame_index, const Scene& scene);

struct LongitudinalSpec {
    int n_cows = 12;
    int n_sessions = 55;           // time covariate runs 0..n_sessions-1
    Eigen::VectorXd beta;          // aligned with [intercept, predictors...]
    double var_intercept = 0.0;
    double var_slope = 0.0;
    double cov_int_slope = 0.0;
    double var_resid = 0.0;
    unsigned seed = 0;
};

/// Simulate a feature table plus weights from the random intercept+slope
/// generative model: y = Xβ + b0_i + b1_i·t + ε.
DesignMatrix generate_longitudinal(const LongitudinalSpec& spec);

} // namespace bovi
