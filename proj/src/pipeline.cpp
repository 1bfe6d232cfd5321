#include "bovi/pipeline.hpp"

#include "bovi/csv.hpp"
#include "bovi/errors.hpp"
#include "bovi/png_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <thread>
#include <unordered_map>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::json;

namespace bovi::pipeline {

namespace {

void run_indexed(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

bool parse_frame_index(const std::string& stem, int& index) {
    constexpr const char* kPrefix = "frame_";
    constexpr std::size_t kPrefixLen = 6;
    if (stem.rfind(kPrefix, 0) != 0 || stem.size() == kPrefixLen) return false;
    const char* first = stem.data() + kPrefixLen;
    const char* last = stem.data() + stem.size();
    auto [ptr, ec] = std::from_chars(first, last, index);
    return ec == std::errc() && ptr == last && index >= 0;
}

Side side_from_string(const std::string& s) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    throw ConfigError("unknown head side: " + s);
}

Grouping grouping_from_string(const std::string& s) {
    if (s == "overall") return Grouping::Overall;
    if (s == "per_day") return Grouping::PerDay;
    if (s == "per_period") return Grouping::PerPeriod;
    throw ConfigError("unknown correlation grouping: " + s);
}

BodyShape shape_from_string(const std::string& s) {
    if (s == "plateau") return BodyShape::Plateau;
    if (s == "half_ellipsoid") return BodyShape::HalfEllipsoid;
    throw ConfigError("unknown body shape: " + s);
}

void require_keys(const json& obj, const char* where,
                  std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError(std::string("config ") + where + ": unknown key '" + item.key() +
                              "'");
    }
}

// Keep ids one-field safe and stable through the trimming reader.
std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    const auto b = s.find_first_not_of(' ');
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

RunConfig parse_config(const json& j) {
    require_keys(j, "root",
                 {"dataset", "out", "seed", "jobs", "camera_height_m", "crop", "subsample",
                  "segmentation", "regression", "cv", "correlate", "synth"});
    RunConfig cfg;
    if (j.contains("dataset")) cfg.dataset_root = j.at("dataset").get<std::string>();
    if (j.contains("out")) cfg.output_dir = j.at("out").get<std::string>();
    cfg.experiment.seed = j.value("seed", 0u);
    cfg.jobs = j.value("jobs", 1);
    if (cfg.jobs < 1) throw ConfigError("jobs must be at least 1");
    cfg.camera.height_m = j.value("camera_height_m", cfg.camera.height_m);
    if (cfg.camera.height_m <= 0.0) throw ConfigError("camera_height_m must be positive");

    if (j.contains("crop")) {
        const json& c = j.at("crop");
        require_keys(c, "crop", {"x", "y", "w", "h"});
        PixelRect r{c.value("x", 0), c.value("y", 0), c.at("w").get<int>(), c.at("h").get<int>()};
        if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0)
            throw ConfigError("crop needs x,y >= 0 and w,h > 0");
        cfg.crop = r;
    }
    if (j.contains("subsample")) {
        const json& s = j.at("subsample");
        require_keys(s, "subsample", {"skip", "stride"});
        cfg.subsample_skip = s.value("skip", cfg.subsample_skip);
        cfg.subsample_stride = s.value("stride", cfg.subsample_stride);
        if (cfg.subsample_skip < 0 || cfg.subsample_stride < 1)
            throw ConfigError("subsample needs skip >= 0 and stride >= 1");
    }
    if (j.contains("segmentation")) {
        const json& s = j.at("segmentation");
        require_keys(s, "segmentation",
                     {"methods", "head_side", "remove_neck", "neck_ratio", "threshold",
                      "per_image_threshold", "adaptive_margin", "external_mask_dir",
                      "external_remove_neck"});
        if (s.contains("methods")) {
            cfg.segmentations.clear();
            for (const auto& m : s.at("methods"))
                cfg.segmentations.push_back(seg_method_from_string(m.get<std::string>()));
            if (cfg.segmentations.empty())
                throw ConfigError("segmentation.methods must not be empty");
        }
        const Side head = side_from_string(s.value("head_side", "left"));
        cfg.segment_options.head_side = head;
        cfg.external_options.head_side = head;
        cfg.segment_options.remove_neck = s.value("remove_neck", true);
        const double ratio = s.value("neck_ratio", cfg.segment_options.neck_ratio);
        if (ratio <= 0.0 || ratio >= 1.0) throw ConfigError("neck_ratio must lie in (0,1)");
        cfg.segment_options.neck_ratio = ratio;
        cfg.external_options.neck_ratio = ratio;
        if (s.contains("threshold")) {
            const int t = s.at("threshold").get<int>();
            if (t < 0 || t > kHueMax) throw ConfigError("threshold must lie in [0,179]");
            cfg.fixed_threshold = t;
        }
        cfg.per_image_threshold = s.value("per_image_threshold", false);
        cfg.adaptive_margin = s.value("adaptive_margin", cfg.adaptive_margin);
        if (cfg.adaptive_margin < 0) throw ConfigError("adaptive_margin must be >= 0");
        cfg.external_mask_dir = s.value("external_mask_dir", cfg.external_mask_dir);
        cfg.external_options.remove_neck = s.value("external_remove_neck", false);
    }
    if (j.contains("regression")) {
        const json& r = j.at("regression");
        require_keys(r, "regression", {"methods", "predictors", "tune_folds", "r2"});
        if (r.contains("methods")) {
            cfg.experiment.methods.clear();
            for (const auto& m : r.at("methods"))
                cfg.experiment.methods.push_back(reg_method_from_string(m.get<std::string>()));
            if (cfg.experiment.methods.empty())
                throw ConfigError("regression.methods must not be empty");
        }
        if (r.contains("predictors")) {
            cfg.predictors = r.at("predictors").get<std::vector<std::string>>();
            if (cfg.predictors.empty())
                throw ConfigError("regression.predictors must not be empty");
        }
        cfg.experiment.tune_folds = r.value("tune_folds", cfg.experiment.tune_folds);
        if (cfg.experiment.tune_folds < 2) throw ConfigError("tune_folds must be at least 2");
        const std::string r2 = r.value("r2", "standard");
        if (r2 == "squared_corr")
            cfg.experiment.squared_corr_r2 = true;
        else if (r2 != "standard")
            throw ConfigError("r2 must be 'standard' or 'squared_corr'");
    }
    if (j.contains("cv")) {
        const json& c = j.at("cv");
        require_keys(c, "cv", {"design", "ratios", "k"});
        if (c.contains("design"))
            cfg.experiment.design = cv_design_from_string(c.at("design").get<std::string>());
        if (c.contains("ratios")) {
            cfg.experiment.ratios.clear();
            for (const auto& pair : c.at("ratios")) {
                if (!pair.is_array() || pair.size() != 2)
                    throw ConfigError("each cv ratio must be a [train,test] pair");
                const int p = pair[0].get<int>();
                const int q = pair[1].get<int>();
                if (p <= 0 || q <= 0 || p + q != 100)
                    throw ConfigError("cv ratios must be positive and sum to 100");
                cfg.experiment.ratios.emplace_back(p, q);
            }
            if (cfg.experiment.ratios.empty()) throw ConfigError("cv.ratios must not be empty");
        }
        cfg.experiment.k = c.value("k", cfg.experiment.k);
        if (cfg.experiment.k < 1) throw ConfigError("cv.k must be at least 1");
    }
    if (j.contains("correlate")) {
        const json& c = j.at("correlate");
        require_keys(c, "correlate", {"grouping", "average_days"});
        cfg.correlate_grouping = grouping_from_string(c.value("grouping", "overall"));
        cfg.correlate_average_days = c.value("average_days", false);
    }
    cfg.synth.seed = cfg.experiment.seed;
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        require_keys(s, "synth",
                     {"n_cows", "n_days", "frames_per_video", "width", "height", "shape",
                      "with_neck", "with_rails", "yaw_deg", "noise_sd_m", "dropout_rate",
                      "weight_beta", "weight_noise_sd", "seed"});
        SynthDatasetSpec& sp = cfg.synth;
        sp.n_cows = s.value("n_cows", sp.n_cows);
        sp.n_days = s.value("n_days", sp.n_days);
        sp.frames_per_video = s.value("frames_per_video", sp.frames_per_video);
        sp.width = s.value("width", sp.width);
        sp.height = s.value("height", sp.height);
        if (s.contains("shape")) sp.shape = shape_from_string(s.at("shape").get<std::string>());
        sp.with_neck = s.value("with_neck", sp.with_neck);
        sp.with_rails = s.value("with_rails", sp.with_rails);
        sp.yaw_deg = s.value("yaw_deg", sp.yaw_deg);
        sp.noise_sd_m = s.value("noise_sd_m", sp.noise_sd_m);
        sp.dropout_rate = s.value("dropout_rate", sp.dropout_rate);
        if (s.contains("weight_beta")) {
            const auto beta = s.at("weight_beta").get<std::vector<double>>();
            if (beta.size() != 4)
                throw ConfigError(
                    "weight_beta needs 4 entries: intercept, width, length, avg_height");
            sp.weight_beta = Eigen::Vector4d(beta[0], beta[1], beta[2], beta[3]);
        }
        sp.weight_noise_sd = s.value("weight_noise_sd", sp.weight_noise_sd);
        sp.seed = s.value("seed", sp.seed);
        if (sp.n_cows < 1 || sp.n_days < 1 || sp.frames_per_video < 1)
            throw ConfigError("synth needs n_cows, n_days, frames_per_video >= 1");
        if (sp.width < 64 || sp.height < 64)
            throw ConfigError("synth frames must be at least 64x64");
    }
    return cfg;
}

} // namespace

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::vector<VideoEntry> scan_dataset(const fs::path& root) {
    const fs::path frames_dir = root / "frames";
    if (!fs::is_directory(frames_dir))
        throw IoError("dataset has no frames/ directory: " + frames_dir.string());
    std::vector<VideoEntry> out;
    for (const auto& entry : fs::directory_iterator(frames_dir)) {
        if (!entry.is_directory()) continue;
        VideoEntry video;
        video.video_id = entry.path().filename().string();
        for (const auto& file : fs::directory_iterator(entry.path())) {
            if (!file.is_regular_file() || file.path().extension() != ".png") continue;
            int index = 0;
            if (!parse_frame_index(file.path().stem().string(), index)) continue;
            FrameRef ref;
            ref.index = index;
            ref.png = file.path();
            ref.csv = file.path();
            ref.csv.replace_extension(".csv");
            video.frames.push_back(std::move(ref));
        }
        std::sort(video.frames.begin(), video.frames.end(),
                  [](const FrameRef& a, const FrameRef& b) { return a.index < b.index; });
        if (!video.frames.empty()) out.push_back(std::move(video));
    }
    std::sort(out.begin(), out.end(),
              [](const VideoEntry& a, const VideoEntry& b) { return a.video_id < b.video_id; });
    return out;
}

Manifest load_dataset_manifest(const fs::path& root) {
    std::vector<std::pair<int, Period>> exclusions;
    const fs::path excl = root / "exclusions.csv";
    if (fs::exists(excl)) exclusions = load_exclusions(excl);
    return load_manifest(root / "manifest.csv", exclusions);
}

namespace {

struct WorkItem {
    std::size_t video = 0; // index into the kept video list
    const FrameRef* ref = nullptr;
};

struct ItemOutcome {
    bool ok = false;
    FrameFeatures features;
    std::string error;
};

DepthFrame load_cropped(const RunConfig& cfg, const FrameRef& ref, const std::string& video_id) {
    DepthFrame frame = load_frame_pair(ref.png, ref.csv);
    frame.frame_index = ref.index;
    frame.video_id = video_id;
    if (cfg.crop) frame = crop_frame(frame, *cfg.crop);
    return frame;
}

std::vector<VideoFeatures> extract_impl(const RunConfig& cfg, SegMethod method,
                                        ExtractStats* stats, bool save_masks) {
    std::vector<VideoEntry> entries = scan_dataset(cfg.dataset_root);
    const Manifest manifest = load_dataset_manifest(cfg.dataset_root);
    std::unordered_map<std::string, const Session*> sessions;
    for (std::size_t i = 0; i < manifest.video_ids.size(); ++i)
        sessions.emplace(manifest.video_ids[i], &manifest.sessions[i]);

    ExtractStats scratch;
    ExtractStats& st = stats ? *stats : scratch;

    std::vector<VideoEntry> kept;
    for (auto& e : entries) {
        if (sessions.count(e.video_id))
            kept.push_back(std::move(e));
        else
            st.skipped_videos.push_back(e.video_id);
    }

    std::vector<WorkItem> items;
    for (std::size_t v = 0; v < kept.size(); ++v) {
        const std::vector<int> picks = subsample_frames(
            static_cast<int>(kept[v].frames.size()), cfg.subsample_skip, cfg.subsample_stride);
        for (int i : picks)
            items.push_back({v, &kept[v].frames[static_cast<std::size_t>(i)]});
    }
    st.frames_attempted = static_cast<long>(items.size());
    if (items.empty()) throw EmptyInput("no frames retained from " + cfg.dataset_root.string());

    // single mode: pooled-mean threshold over every retained (cropped) frame
    std::optional<int> pooled_t = cfg.fixed_threshold;
    if (method == SegMethod::Single && !pooled_t && !cfg.per_image_threshold) {
        std::vector<std::pair<double, long>> partial(items.size(), {0.0, 0});
        run_indexed(items.size(), cfg.jobs, [&](std::size_t i) {
            try {
                const DepthFrame frame =
                    load_cropped(cfg, *items[i].ref, kept[items[i].video].video_id);
                const HueGrid hue = rgb_to_hue(frame);
                partial[i] = {hue.cast<double>().sum(), static_cast<long>(hue.size())};
            } catch (const std::exception&) {
                // unreadable frames are counted during the main pass
            }
        });
        double sum = 0.0;
        long count = 0;
        for (const auto& [s, c] : partial) {
            sum += s;
            count += c;
        }
        if (count == 0) throw EmptyInput("threshold calibration found no readable frame");
        pooled_t = static_cast<int>(std::llround(sum / static_cast<double>(count)));
    }
    if (method == SegMethod::Single && pooled_t) st.threshold_used = pooled_t;

    fs::path mask_root;
    if (save_masks) {
        mask_root = cfg.output_dir / "masks" / to_string(method);
        for (const auto& v : kept) fs::create_directories(mask_root / v.video_id);
    }

    std::vector<ItemOutcome> results(items.size());
    run_indexed(items.size(), cfg.jobs, [&](std::size_t i) {
        ItemOutcome& out = results[i];
        const std::string& vid = kept[items[i].video].video_id;
        try {
            const DepthFrame frame = load_cropped(cfg, *items[i].ref, vid);
            SegmentationResult seg;
            if (method == SegMethod::External) {
                const fs::path mpath = cfg.dataset_root / "masks" / cfg.external_mask_dir / vid /
                                       items[i].ref->png.filename();
                seg = load_external_mask(mpath, frame.rows(), frame.cols(), cfg.external_options);
            } else {
                const HueGrid hue = rgb_to_hue(frame);
                if (method == SegMethod::Adaptive) {
                    seg = adaptive_segment(hue, cfg.adaptive_margin, cfg.segment_options);
                } else {
                    const int t = pooled_t
                                      ? *pooled_t
                                      : static_cast<int>(std::llround(hue.cast<double>().mean()));
                    seg = single_segment(hue, t, cfg.segment_options);
                }
            }
            out.features = frame_features(seg.mask, seg.contour, frame.depth, cfg.camera);
            if (save_masks)
                png::write_gray8(mask_root / vid / items[i].ref->png.filename(), seg.mask);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    std::vector<VideoFeatures> table;
    std::size_t pos = 0;
    for (std::size_t v = 0; v < kept.size(); ++v) {
        std::vector<FrameFeatures> good;
        for (; pos < items.size() && items[pos].video == v; ++pos) {
            if (results[pos].ok) {
                good.push_back(results[pos].features);
                ++st.frames_used;
            } else {
                st.failures.push_back(
                    {kept[v].video_id, items[pos].ref->index, results[pos].error});
            }
        }
        if (good.empty()) {
            st.skipped_videos.push_back(kept[v].video_id);
            continue;
        }
        VideoFeatures f = aggregate_video(good);
        f.video_id = kept[v].video_id;
        f.session = *sessions.at(kept[v].video_id);
        table.push_back(std::move(f));
    }
    return table;
}

} // namespace

std::vector<VideoFeatures> extract_features(const RunConfig& cfg, SegMethod method,
                                            ExtractStats* stats) {
    return extract_impl(cfg, method, stats, false);
}

std::vector<VideoFeatures> extract_and_save_masks(const RunConfig& cfg, SegMethod method,
                                                  ExtractStats* stats) {
    return extract_impl(cfg, method, stats, true);
}

namespace {

const std::vector<std::string> kFeatureHeader = {
    "video_id", "cow_id",           "day",          "period", "length_px",
    "width_px", "centroid_height_m", "avg_height_m", "volume", "n_frames_used"};

} // namespace

void write_feature_table(const fs::path& path, const std::vector<VideoFeatures>& features) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "video_id,cow_id,day,period,length_px,width_px,centroid_height_m,avg_height_m,volume,"
           "n_frames_used\n";
    for (const VideoFeatures& f : features) {
        out << sanitize(f.video_id) << ',' << sanitize(f.session.cow_id) << ',' << f.session.day
            << ',' << to_string(f.session.period) << ',' << csv::format_double(f.length_px) << ','
            << csv::format_double(f.width_px) << ',' << csv::format_double(f.centroid_height_m)
            << ',' << csv::format_double(f.avg_height_m) << ',' << csv::format_double(f.volume)
            << ',' << f.n_frames_used << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<VideoFeatures> read_feature_table(const fs::path& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty()) throw MalformedCsv("empty feature table: " + path.string());
    if (rows.front() != kFeatureHeader)
        throw MalformedCsv("unexpected feature table header in " + path.string());
    std::vector<VideoFeatures> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != kFeatureHeader.size())
            throw MalformedCsv("feature table row " + std::to_string(i + 1) + " has " +
                               std::to_string(row.size()) + " fields");
        VideoFeatures f;
        f.video_id = row[0];
        f.session.cow_id = row[1];
        f.session.day = static_cast<int>(csv::parse_long(row[2], "day"));
        f.session.period = period_from_string(row[3]);
        f.length_px = csv::parse_double(row[4], "length_px");
        f.width_px = csv::parse_double(row[5], "width_px");
        f.centroid_height_m = csv::parse_double(row[6], "centroid_height_m");
        f.avg_height_m = csv::parse_double(row[7], "avg_height_m");
        f.volume = csv::parse_double(row[8], "volume");
        f.n_frames_used = csv::parse_long(row[9], "n_frames_used");
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<VideoFeatures> attach_sessions(const std::vector<VideoFeatures>& features,
                                           const Manifest& manifest,
                                           std::vector<std::string>* unmatched) {
    std::unordered_map<std::string, const Session*> by_id;
    for (std::size_t i = 0; i < manifest.video_ids.size(); ++i)
        by_id.emplace(manifest.video_ids[i], &manifest.sessions[i]);
    std::vector<VideoFeatures> out;
    out.reserve(features.size());
    for (VideoFeatures f : features) {
        const auto it = by_id.find(f.video_id);
        if (it == by_id.end()) {
            if (unmatched) unmatched->push_back(f.video_id);
            continue;
        }
        f.session = *it->second;
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<VideoFeatures> weighed_only(const std::vector<VideoFeatures>& features) {
    std::vector<VideoFeatures> out;
    out.reserve(features.size());
    for (const VideoFeatures& f : features)
        if (f.session.body_weight_kg) out.push_back(f);
    return out;
}

void generate_synth_dataset(const SynthDatasetSpec& spec, const fs::path& root) {
    if (spec.n_cows < 1 || spec.n_days < 1 || spec.frames_per_video < 1)
        throw ConfigError("synth dataset needs at least one cow, day, and frame");

    // Body extents leave room for the adaptive-threshold margin test and, when
    // requested, the neck. Semi-axes are integral so a plateau body rasterizes
    // to exactly its nominal footprint.
    const double avail_x = spec.width / 2.0 - 12.0;
    const double avail_y = spec.height / 2.0 - 12.0;
    const double a_hi = avail_x / (spec.with_neck ? 1.40 : 1.05);
    const double a_lo = 0.75 * a_hi;
    const double b_hi = std::min(0.60 * a_lo, avail_y / (spec.with_rails ? 1.45 : 1.05));
    const double b_lo = 0.65 * b_hi;
    if (a_lo < 8.0 || b_lo < 4.0) throw ConfigError("synth frame too small for a body");

    std::mt19937 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Manifest manifest;
    unsigned scene_seed = spec.seed;
    for (int cow = 0; cow < spec.n_cows; ++cow) {
        char cow_id[16];
        std::snprintf(cow_id, sizeof cow_id, "cow_%02d", cow);
        for (int ses = 0; ses < spec.n_days * 2; ++ses) {
            const double a = std::round(a_lo + (a_hi - a_lo) * unit(rng));
            const double b = std::round(b_lo + (b_hi - b_lo) * unit(rng));
            const double c = 0.40 + 0.18 * unit(rng);

            SceneSpec scene;
            scene.width = spec.width;
            scene.height = spec.height;
            scene.shape = spec.shape;
            scene.a_px = spec.shape == BodyShape::HalfEllipsoid ? a + 0.25 : a;
            scene.b_px = spec.shape == BodyShape::HalfEllipsoid ? b + 0.25 : b;
            scene.c_m = c;
            scene.center_x = spec.width / 2.0;
            scene.center_y = spec.height / 2.0;
            scene.yaw_deg = spec.yaw_deg;
            if (spec.with_neck) {
                NeckSpec neck;
                neck.length_px = 0.30 * a;
                neck.radius_px = 0.25 * b;
                neck.height_m = 0.6 * c;
                neck.side = Side::Left;
                scene.neck = neck;
            }
            if (spec.with_rails) {
                const int band = std::max(2, spec.height / 20);
                scene.rails.push_back({true, 0, band - 1, 0.1});
                scene.rails.push_back({true, spec.height - band, spec.height - 1, 0.1});
            }
            scene.noise_sd_m = spec.noise_sd_m;
            scene.dropout_rate = spec.dropout_rate;

            char video_id[32];
            std::snprintf(video_id, sizeof video_id, "%s_s%03d", cow_id, ses);
            SceneTruth truth;
            for (int f = 0; f < spec.frames_per_video; ++f) {
                scene.seed = scene_seed++;
                const Scene rendered = generate_scene(scene);
                save_scene_files(root, video_id, f, rendered);
                truth = rendered.truth;
            }

            double weight = spec.weight_beta[0] + spec.weight_beta[1] * truth.width_px +
                            spec.weight_beta[2] * truth.length_px +
                            spec.weight_beta[3] * truth.avg_height_m;
            if (spec.weight_noise_sd > 0.0) weight += spec.weight_noise_sd * gauss(rng);

            manifest.video_ids.push_back(video_id);
            manifest.sessions.push_back(
                Session{cow_id, ses / 2, ses % 2 == 0 ? Period::AM : Period::PM, weight});
        }
    }
    fs::create_directories(root);
    save_manifest(root / "manifest.csv", manifest);
}

} // namespace bovi::pipeline
