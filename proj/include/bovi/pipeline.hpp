#pragma once

#include "bovi/biometrics.hpp"
#include "bovi/evaluate.hpp"
#include "bovi/ingest.hpp"
#include "bovi/regress.hpp"
#include "bovi/segment.hpp"
#include "bovi/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bovi::pipeline {

/// Expected dataset layout under a root directory:
///   manifest.csv                                 session metadata
///   exclusions.csv                               optional day,period drop list
///   frames/<video_id>/frame_NNNNNN.png + .csv    color raster + depth grid
///   masks/<name>/<video_id>/frame_NNNNNN.png     externally produced masks

/// Synthetic dataset recipe: one rendered scene per session, weights drawn
/// as a linear function of the scene's true measurements.
struct SynthDatasetSpec {
    int n_cows = 12;
    int n_days = 10; // two sessions (AM/PM) per day
    int frames_per_video = 3;
    int width = 320;
    int height = 200;
    BodyShape shape = BodyShape::Plateau;
    bool with_neck = false;
    bool with_rails = false;
    double yaw_deg = 0.0;
    double noise_sd_m = 0.0;
    double dropout_rate = 0.0;
    // weight = beta . [1, width_px, length_px, avg_height_m] of the true
    // body measurements, plus N(0, weight_noise_sd^2) noise
    Eigen::Vector4d weight_beta{250.0, 0.8, 0.5, 150.0};
    double weight_noise_sd = 0.0;
    unsigned seed = 0;
};

/// Render every session of a synthetic herd under `root` in the dataset
/// layout above (frames, truth masks, manifest.csv).
void generate_synth_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& root);

struct RunConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path output_dir = "out";
    std::optional<PixelRect> crop; // absent = full frame
    std::vector<SegMethod> segmentations{SegMethod::Single};
    SegmentOptions segment_options;            // single/adaptive: neck removal on
    SegmentOptions external_options{.remove_neck = false};
    int adaptive_margin = 5;
    std::optional<int> fixed_threshold;        // single mode: skip calibration
    bool per_image_threshold = false;          // single mode: per-frame mean
    std::string external_mask_dir = "truth";   // masks/<name>/ subdirectory
    CameraConfig camera;
    int subsample_skip = 2;
    int subsample_stride = 15;
    std::vector<std::string> predictors = kDefaultPredictors;
    ExperimentConfig experiment;
    Grouping correlate_grouping = Grouping::Overall;
    bool correlate_average_days = false;
    SynthDatasetSpec synth;
    int jobs = 1;
};

/// Parse a JSON run configuration. Unknown keys are rejected so typos fail
/// loudly. Throws ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

struct FrameRef {
    int index = 0; // parsed from the file name
    std::filesystem::path png;
    std::filesystem::path csv;
};

struct VideoEntry {
    std::string video_id;
    std::vector<FrameRef> frames; // sorted by index
};

/// List frames/<video_id>/frame_*.png under the dataset root, sorted.
std::vector<VideoEntry> scan_dataset(const std::filesystem::path& root);

/// manifest.csv with exclusions.csv applied when the latter exists.
Manifest load_dataset_manifest(const std::filesystem::path& root);

struct FrameFailure {
    std::string video_id;
    int frame_index = 0;
    std::string reason;
};

struct ExtractStats {
    long frames_attempted = 0;
    long frames_used = 0;
    std::optional<int> threshold_used; // single mode, pooled calibration
    std::vector<FrameFailure> failures;
    std::vector<std::string> skipped_videos; // no manifest row or no usable frame
};

/// Segment every retained frame with `method` and reduce to per-video median
/// features. Frame-level errors are soft (skipped and counted in `stats`);
/// dataset-level problems throw.
std::vector<VideoFeatures> extract_features(const RunConfig& cfg, SegMethod method,
                                            ExtractStats* stats = nullptr);

/// Like extract_features, but also write each retained mask to
/// <out>/masks/<method>/<video_id>/frame_NNNNNN.png.
std::vector<VideoFeatures> extract_and_save_masks(const RunConfig& cfg, SegMethod method,
                                                  ExtractStats* stats = nullptr);

/// Feature table round-trip:
/// video_id,cow_id,day,period,length_px,width_px,centroid_height_m,avg_height_m,volume,n_frames_used
void write_feature_table(const std::filesystem::path& path,
                         const std::vector<VideoFeatures>& features);
std::vector<VideoFeatures> read_feature_table(const std::filesystem::path& path);

/// Re-join manifest sessions (and hence body weights) onto feature rows by
/// video id. Rows without a manifest entry are dropped into `unmatched`.
std::vector<VideoFeatures> attach_sessions(const std::vector<VideoFeatures>& features,
                                           const Manifest& manifest,
                                           std::vector<std::string>* unmatched = nullptr);

/// Rows that carry a body weight (the only ones a regression can use).
std::vector<VideoFeatures> weighed_only(const std::vector<VideoFeatures>& features);

} // namespace bovi::pipeline
