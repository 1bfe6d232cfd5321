#include "bovi/synth.hpp"

#include "bovi/csv.hpp"
#include "bovi/png_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace bovi {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHueNear = 1.0; // depth mapped to the top of the hue ramp
constexpr double kHueFar = 3.0;

void validate(const SceneSpec& spec, const CameraConfig& cam) {
    if (spec.width <= 0 || spec.height <= 0) throw SpecOutOfFrame("empty frame");
    if (spec.a_px <= 0.0 || spec.b_px <= 0.0 || spec.c_m <= 0.0)
        throw SpecOutOfFrame("body axes must be positive");
    if (!(spec.c_m < cam.height_m)) throw SpecOutOfFrame("body taller than the camera mount");
    if (!(spec.floor_depth_m > 0.0)) throw SpecOutOfFrame("floor depth must be positive");
    if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0)
        throw SpecOutOfFrame("dropout rate outside [0,1)");

    const double theta = spec.yaw_deg * kPi / 180.0;
    const double ct = std::abs(std::cos(theta));
    const double st = std::abs(std::sin(theta));
    double along = spec.a_px; // reach along the local body axis
    double across = spec.b_px;
    if (spec.neck) {
        along += spec.neck->length_px;
        across = std::max(across, spec.neck->radius_px);
    }
    double ex, ey;
    if (spec.shape == BodyShape::HalfEllipsoid && !spec.neck) {
        ex = std::sqrt(std::pow(spec.a_px * ct, 2) + std::pow(spec.b_px * st, 2));
        ey = std::sqrt(std::pow(spec.a_px * st, 2) + std::pow(spec.b_px * ct, 2));
    } else {
        ex = along * ct + across * st;
        ey = along * st + across * ct;
    }
    if (spec.center_x - ex < 0.0 || spec.center_x + ex > spec.width - 1 ||
        spec.center_y - ey < 0.0 || spec.center_y + ey > spec.height - 1)
        throw SpecOutOfFrame("body does not fit inside the frame");

    for (const RailSpec& rail : spec.rails) {
        const int limit = rail.horizontal ? spec.height : spec.width;
        if (rail.lo < 0 || rail.hi < rail.lo || rail.hi >= limit)
            throw SpecOutOfFrame("rail stripe outside the frame");
    }
}

} // namespace

int depth_to_hue(double depth_m) {
    if (depth_m <= 0.0) return 0;
    const long h =
        1 + std::lround(178.0 * (kHueFar - depth_m) / (kHueFar - kHueNear));
    return static_cast<int>(std::clamp(h, 1l, 179l));
}

void hue_to_rgb(int hue, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
    if (hue < 0 || hue > kHueMax) throw OutOfBounds("hue outside [0,179]");
    const int sector = hue / 30;
    const double f = (hue - 30 * sector) / 30.0;
    const auto q = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - f)));
    const auto t = static_cast<std::uint8_t>(std::lround(255.0 * f));
    switch (sector) {
    case 0: r = 255; g = t; b = 0; break;
    case 1: r = q; g = 255; b = 0; break;
    case 2: r = 0; g = 255; b = t; break;
    case 3: r = 0; g = q; b = 255; break;
    case 4: r = t; g = 0; b = 255; break;
    default: r = 255; g = 0; b = q; break;
    }
}

ColorImage render_color(const DepthGrid& depth) {
    ColorImage img;
    img.r.resize(depth.rows(), depth.cols());
    img.g.resize(depth.rows(), depth.cols());
    img.b.resize(depth.rows(), depth.cols());
    for (Eigen::Index y = 0; y < depth.rows(); ++y) {
        for (Eigen::Index x = 0; x < depth.cols(); ++x) {
            std::uint8_t r, g, b;
            hue_to_rgb(depth_to_hue(depth(y, x)), r, g, b);
            img.r(y, x) = r;
            img.g(y, x) = g;
            img.b(y, x) = b;
        }
    }
    return img;
}

Scene generate_scene(const SceneSpec& spec, const CameraConfig& cam) {
    validate(spec, cam);

    Scene scene;
    scene.frame.depth = DepthGrid::Constant(spec.height, spec.width, spec.floor_depth_m);
    scene.gt_mask = MaskGrid::Zero(spec.height, spec.width);
    DepthGrid& depth = scene.frame.depth;

    for (const RailSpec& rail : spec.rails) {
        const double d = spec.floor_depth_m - rail.height_m;
        if (rail.horizontal)
            depth.block(rail.lo, 0, rail.hi - rail.lo + 1, spec.width).setConstant(d);
        else
            depth.block(0, rail.lo, spec.height, rail.hi - rail.lo + 1).setConstant(d);
    }

    const double theta = spec.yaw_deg * kPi / 180.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double head = spec.neck && spec.neck->side == Side::Left ? -1.0 : 1.0;

    long body_px = 0;
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double dx = x - spec.center_x;
            const double dy = y - spec.center_y;
            const double u = dx * ct + dy * st;
            const double v = -dx * st + dy * ct;

            double h = -1.0;
            if (spec.shape == BodyShape::HalfEllipsoid) {
                const double s2 = (u / spec.a_px) * (u / spec.a_px) +
                                  (v / spec.b_px) * (v / spec.b_px);
                if (s2 <= 1.0) h = spec.c_m * std::sqrt(1.0 - s2);
            } else {
                if (std::abs(u) <= spec.a_px && std::abs(v) <= spec.b_px) h = spec.c_m;
            }
            const bool on_body = h >= 0.0;
            if (on_body) ++body_px;

            if (spec.neck) {
                const double along = head > 0 ? u - spec.a_px : -u - spec.a_px;
                if (along >= 0.0 && along <= spec.neck->length_px &&
                    std::abs(v) <= spec.neck->radius_px) {
                    const double vr = v / spec.neck->radius_px;
                    h = std::max(h, spec.neck->height_m * std::sqrt(1.0 - vr * vr));
                }
            }
            if (h >= 0.0) {
                depth(y, x) = spec.floor_depth_m - h;
                scene.gt_mask(y, x) = kMaskOn;
            }
        }
    }

    std::mt19937 rng(spec.seed);
    if (spec.noise_sd_m > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sd_m);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (scene.gt_mask(y, x) != kMaskOff)
                    depth(y, x) = std::max(1e-9, depth(y, x) + noise(rng));
    }
    if (spec.dropout_rate > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (scene.gt_mask(y, x) != kMaskOff && unit(rng) < spec.dropout_rate)
                    depth(y, x) = 0.0;
    }

    scene.frame.color = render_color(depth);
    scene.frame.frame_index = 0;

    const double base = cam.height_m - spec.floor_depth_m;
    SceneTruth& t = scene.truth;
    t.length_px = 2.0 * std::max(spec.a_px, spec.b_px);
    t.width_px = 2.0 * std::min(spec.a_px, spec.b_px);
    t.max_height_m = base + spec.c_m;
    if (spec.shape == BodyShape::HalfEllipsoid) {
        t.avg_height_m = base + 2.0 * spec.c_m / 3.0;
        t.volume = kPi * spec.a_px * spec.b_px * base +
                   2.0 / 3.0 * kPi * spec.a_px * spec.b_px * spec.c_m;
    } else {
        // the plateau is a pixel construct; its exact forms count pixels
        t.avg_height_m = base + spec.c_m;
        t.volume = static_cast<double>(body_px) * (base + spec.c_m);
    }
    return scene;
}

void save_scene_files(const std::filesystem::path& root, const std::string& video_id,
                      int frame_index, const Scene& scene) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d", frame_index);

    const auto frame_dir = root / "frames" / video_id;
    const auto mask_dir = root / "masks" / "truth" / video_id;
    std::filesystem::create_directories(frame_dir);
    std::filesystem::create_directories(mask_dir);

    png::write_rgb8(frame_dir / (std::string(name) + ".png"), scene.frame.color);
    csv::write_numeric_grid(frame_dir / (std::string(name) + ".csv"), scene.frame.depth);
    png::write_gray8(mask_dir / (std::string(name) + ".png"), scene.gt_mask);

    nlohmann::json truth = {{"length_px", scene.truth.length_px},
                            {"width_px", scene.truth.width_px},
                            {"max_height_m", scene.truth.max_height_m},
                            {"avg_height_m", scene.truth.avg_height_m},
                            {"volume", scene.truth.volume}};
    std::ofstream sidecar(frame_dir / (std::string(name) + ".truth.json"));
    if (!sidecar) throw IoError("cannot write truth sidecar");
    sidecar << truth.dump(2) << '\n';
}

DesignMatrix generate_longitudinal(const LongitudinalSpec& spec) {
    if (spec.n_cows <= 0 || spec.n_sessions <= 0)
        throw ConfigError("cow and session counts must be positive");
    if (spec.var_intercept < 0.0 || spec.var_slope < 0.0 || spec.var_resid < 0.0)
        throw ConfigError("variances must be nonnegative");
    const double det =
        spec.var_intercept * spec.var_slope - spec.cov_int_slope * spec.cov_int_slope;
    if (det < -1e-12) throw ConfigError("random-effect covariance is not positive semidefinite");

    Eigen::VectorXd beta = spec.beta;
    if (beta.size() == 0) {
        beta.resize(5);
        beta << -600.0, 0.8, 0.6, 250.0, 0.012; // plausible adult-cattle weight surface
    }
    if (beta.size() != 5) throw ConfigError("beta must have 5 entries");

    // PSD square root of the random-effect covariance
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    if (spec.var_intercept > 0.0) {
        L(0, 0) = std::sqrt(spec.var_intercept);
        L(1, 0) = spec.cov_int_slope / L(0, 0);
        L(1, 1) = std::sqrt(std::max(0.0, spec.var_slope - L(1, 0) * L(1, 0)));
    } else {
        L(1, 1) = std::sqrt(spec.var_slope);
    }

    std::mt19937 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const Eigen::Index n = static_cast<Eigen::Index>(spec.n_cows) * spec.n_sessions;
    DesignMatrix d;
    d.X.resize(n, 5);
    d.y.resize(n);
    d.time.resize(n);
    d.column_names = {"intercept", "width_px", "length_px", "avg_height_m", "volume"};

    Eigen::Index row = 0;
    for (int cow = 0; cow < spec.n_cows; ++cow) {
        char id[16];
        std::snprintf(id, sizeof id, "cow_%02d", cow + 1);

        const double w0 = 300.0 + 15.0 * gauss(rng);
        const double l0 = 700.0 + 25.0 * gauss(rng);
        const double h0 = 0.85 + 0.05 * gauss(rng);
        const double v0 = 55000.0 + 4000.0 * gauss(rng);
        const Eigen::Vector2d b = L * Eigen::Vector2d(gauss(rng), gauss(rng));

        for (int ses = 0; ses < spec.n_sessions; ++ses) {
            const double t = static_cast<double>(ses);
            d.X(row, 0) = 1.0;
            d.X(row, 1) = w0 + 0.25 * t + 2.0 * gauss(rng);
            d.X(row, 2) = l0 + 0.5 * t + 3.0 * gauss(rng);
            d.X(row, 3) = h0 + 0.0012 * t + 0.01 * gauss(rng);
            d.X(row, 4) = v0 + 45.0 * t + 800.0 * gauss(rng);
            const double eps =
                spec.var_resid > 0.0 ? std::sqrt(spec.var_resid) * gauss(rng) : 0.0;
            d.y[row] = d.X.row(row).dot(beta) + b[0] + b[1] * t + eps;
            d.time[row] = t;
            d.cow_ids.emplace_back(id);
            d.video_ids.push_back(std::string(id) + "_s" + std::to_string(ses));
            d.days.push_back(ses / 2);
            d.periods.push_back(ses % 2 == 0 ? Period::AM : Period::PM);
            ++row;
        }
    }
    return d;
}

} // namespace bovi
