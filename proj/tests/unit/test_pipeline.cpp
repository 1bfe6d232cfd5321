#include "doctest.h"
#include "helpers.hpp"

#include "bovi/errors.hpp"
#include "bovi/pipeline.hpp"
#include "bovi/png_io.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

using namespace bovi;
namespace pl = bovi::pipeline;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << text;
}

pl::RunConfig parse_text(const fs::path& dir, const std::string& body) {
    const auto p = dir / "cfg.json";
    write_text(p, body);
    return pl::load_run_config(p);
}

void expect_bad(const fs::path& dir, const std::string& body) {
    const auto p = dir / "bad.json";
    write_text(p, body);
    CHECK_THROWS_AS(pl::load_run_config(p), ConfigError);
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

pl::SynthDatasetSpec tiny_herd() {
    pl::SynthDatasetSpec spec;
    spec.n_cows = 3;
    spec.n_days = 2;
    spec.frames_per_video = 2;
    spec.width = 160;
    spec.height = 96;
    spec.seed = 5;
    return spec;
}

pl::RunConfig run_on(const fs::path& root) {
    pl::RunConfig cfg;
    cfg.dataset_root = root;
    cfg.subsample_skip = 0;
    cfg.subsample_stride = 1;
    return cfg;
}

} // namespace

TEST_SUITE("pipeline") {

    TEST_CASE("run configs parse every section") {
        test::TempDir dir("cfg");
        const pl::RunConfig cfg = parse_text(dir.path, R"({
            "dataset": "data/herd",
            "out": "results",
            "seed": 7,
            "jobs": 2,
            "camera_height_m": 3.1,
            "crop": {"x": 10, "y": 20, "w": 300, "h": 200},
            "subsample": {"skip": 1, "stride": 5},
            "segmentation": {
                "methods": ["single", "adaptive", "external"],
                "head_side": "right",
                "remove_neck": false,
                "neck_ratio": 0.4,
                "threshold": 33,
                "per_image_threshold": true,
                "adaptive_margin": 9,
                "external_mask_dir": "handmade",
                "external_remove_neck": true
            },
            "regression": {
                "methods": ["ols", "ridge", "lasso", "lmm"],
                "predictors": ["width_px", "volume"],
                "tune_folds": 4,
                "r2": "squared_corr"
            },
            "cv": {"design": "leave_k_out", "ratios": [[80, 20], [50, 50]], "k": 2},
            "correlate": {"grouping": "per_day", "average_days": true},
            "synth": {"n_cows": 2, "n_days": 3, "width": 128, "height": 80,
                      "shape": "half_ellipsoid", "weight_beta": [100, 1, 2, 3], "seed": 11}
        })");

        CHECK(cfg.dataset_root == fs::path("data/herd"));
        CHECK(cfg.output_dir == fs::path("results"));
        CHECK(cfg.experiment.seed == 7u);
        CHECK(cfg.jobs == 2);
        CHECK(cfg.camera.height_m == 3.1);
        REQUIRE(cfg.crop.has_value());
        CHECK(cfg.crop->x == 10);
        CHECK(cfg.crop->w == 300);
        CHECK(cfg.subsample_skip == 1);
        CHECK(cfg.subsample_stride == 5);
        CHECK(cfg.segmentations ==
              std::vector<SegMethod>{SegMethod::Single, SegMethod::Adaptive, SegMethod::External});
        CHECK(cfg.segment_options.head_side == Side::Right);
        CHECK(cfg.external_options.head_side == Side::Right);
        CHECK_FALSE(cfg.segment_options.remove_neck);
        CHECK(cfg.segment_options.neck_ratio == 0.4);
        CHECK(cfg.fixed_threshold == 33);
        CHECK(cfg.per_image_threshold);
        CHECK(cfg.adaptive_margin == 9);
        CHECK(cfg.external_mask_dir == "handmade");
        CHECK(cfg.external_options.remove_neck);
        CHECK(cfg.experiment.methods ==
              std::vector<RegMethod>{RegMethod::Ols, RegMethod::Ridge, RegMethod::Lasso,
                                     RegMethod::Lmm});
        CHECK(cfg.predictors == std::vector<std::string>{"width_px", "volume"});
        CHECK(cfg.experiment.tune_folds == 4);
        CHECK(cfg.experiment.squared_corr_r2);
        CHECK(cfg.experiment.design == CvDesign::LeaveKOut);
        CHECK(cfg.experiment.ratios ==
              std::vector<std::pair<int, int>>{{80, 20}, {50, 50}});
        CHECK(cfg.experiment.k == 2);
        CHECK(cfg.correlate_grouping == Grouping::PerDay);
        CHECK(cfg.correlate_average_days);
        CHECK(cfg.synth.n_cows == 2);
        CHECK(cfg.synth.n_days == 3);
        CHECK(cfg.synth.shape == BodyShape::HalfEllipsoid);
        CHECK(cfg.synth.weight_beta == Eigen::Vector4d(100, 1, 2, 3));
        CHECK(cfg.synth.seed == 11u);
    }

    TEST_CASE("run config defaults survive an empty object") {
        test::TempDir dir("cfg");
        const pl::RunConfig cfg = parse_text(dir.path, "{}");
        CHECK(cfg.output_dir == fs::path("out"));
        CHECK(cfg.segmentations == std::vector<SegMethod>{SegMethod::Single});
        CHECK(cfg.subsample_skip == 2);
        CHECK(cfg.subsample_stride == 15);
        CHECK_FALSE(cfg.fixed_threshold.has_value());
        CHECK_FALSE(cfg.per_image_threshold);
        CHECK(cfg.adaptive_margin == 5);
        CHECK(cfg.external_mask_dir == "truth");
        CHECK(cfg.segment_options.remove_neck);
        CHECK_FALSE(cfg.external_options.remove_neck);
        CHECK(cfg.segment_options.neck_ratio == 0.3);
        CHECK(cfg.predictors == kDefaultPredictors);
        CHECK(cfg.experiment.design == CvDesign::Forecast);
        CHECK(cfg.jobs == 1);

        // the herd generator inherits the top-level seed unless overridden
        CHECK(parse_text(dir.path, R"({"seed": 9})").synth.seed == 9u);
        CHECK(parse_text(dir.path, R"({"seed": 9, "synth": {"seed": 4}})").synth.seed == 4u);
    }

    TEST_CASE("run configs fail loudly on typos and bad values") {
        test::TempDir dir("cfg");
        CHECK_THROWS_AS(pl::load_run_config(dir.path / "absent.json"), ConfigError);
        expect_bad(dir.path, "{nope");
        expect_bad(dir.path, "[1, 2]");
        expect_bad(dir.path, R"({"datasets": "x"})");
        expect_bad(dir.path, R"({"segmentation": {"method": ["single"]}})");
        expect_bad(dir.path, R"({"jobs": 0})");
        expect_bad(dir.path, R"({"camera_height_m": 0})");
        expect_bad(dir.path, R"({"crop": {"x": 0, "y": 0, "w": 0, "h": 5}})");
        expect_bad(dir.path, R"({"crop": {"x": 0, "y": 0, "h": 5}})");
        expect_bad(dir.path, R"({"subsample": {"stride": 0}})");
        expect_bad(dir.path, R"({"segmentation": {"methods": []}})");
        expect_bad(dir.path, R"({"segmentation": {"methods": ["voodoo"]}})");
        expect_bad(dir.path, R"({"segmentation": {"head_side": "up"}})");
        expect_bad(dir.path, R"({"segmentation": {"neck_ratio": 1.0}})");
        expect_bad(dir.path, R"({"segmentation": {"threshold": 180}})");
        expect_bad(dir.path, R"({"regression": {"methods": ["gbm"]}})");
        expect_bad(dir.path, R"({"regression": {"predictors": []}})");
        expect_bad(dir.path, R"({"regression": {"tune_folds": 1}})");
        expect_bad(dir.path, R"({"regression": {"r2": "banana"}})");
        expect_bad(dir.path, R"({"cv": {"design": "jackknife"}})");
        expect_bad(dir.path, R"({"cv": {"ratios": [[60, 30]]}})");
        expect_bad(dir.path, R"({"cv": {"ratios": [[50, 50, 0]]}})");
        expect_bad(dir.path, R"({"cv": {"ratios": []}})");
        expect_bad(dir.path, R"({"cv": {"k": 0}})");
        expect_bad(dir.path, R"({"correlate": {"grouping": "weekly"}})");
        expect_bad(dir.path, R"({"synth": {"n_cows": 0}})");
        expect_bad(dir.path, R"({"synth": {"width": 32}})");
        expect_bad(dir.path, R"({"synth": {"shape": "cube"}})");
        expect_bad(dir.path, R"({"synth": {"weight_beta": [1, 2, 3]}})");
    }

    TEST_CASE("dataset scan lists frames in order") {
        test::TempDir dir("scan");
        write_text(dir.path / "frames" / "v2" / "frame_000010.png", "x");
        write_text(dir.path / "frames" / "v2" / "frame_2.png", "x");
        write_text(dir.path / "frames" / "v2" / "frame_.png", "x");
        write_text(dir.path / "frames" / "v2" / "frame_01x.png", "x");
        write_text(dir.path / "frames" / "v2" / "notes.txt", "x");
        write_text(dir.path / "frames" / "v1" / "frame_000000.png", "x");
        write_text(dir.path / "frames" / "stray.png", "x");
        fs::create_directories(dir.path / "frames" / "empty_video");

        const auto entries = pl::scan_dataset(dir.path);
        REQUIRE(entries.size() == 2);
        CHECK(entries[0].video_id == "v1");
        CHECK(entries[1].video_id == "v2");
        REQUIRE(entries[1].frames.size() == 2);
        CHECK(entries[1].frames[0].index == 2);
        CHECK(entries[1].frames[1].index == 10);
        CHECK(entries[1].frames[1].png.filename() == "frame_000010.png");
        CHECK(entries[1].frames[1].csv.filename() == "frame_000010.csv");

        CHECK_THROWS_AS(pl::scan_dataset(dir.path / "nowhere"), IoError);
    }

    TEST_CASE("feature tables round-trip") {
        test::TempDir dir("table");
        std::vector<VideoFeatures> rows(2);
        rows[0].video_id = "v1";
        rows[0].session = {"cow_a", 3, Period::AM, 612.5};
        rows[0].length_px = 123.125;
        rows[0].width_px = 47.0;
        rows[0].centroid_height_m = 0.8125;
        rows[0].avg_height_m = 0.75;
        rows[0].volume = 54321.0625;
        rows[0].n_frames_used = 18;
        rows[1].video_id = "v2";
        rows[1].session = {"cow_b", 11, Period::PM, std::nullopt};
        rows[1].length_px = 0.1; // not a binary fraction: exercises the formatter
        rows[1].width_px = 1e-3;
        rows[1].centroid_height_m = 2.0 / 3.0;
        rows[1].avg_height_m = 0.62;
        rows[1].volume = 1.0 / 97.0;
        rows[1].n_frames_used = 1;

        const auto path = dir.path / "features.csv";
        pl::write_feature_table(path, rows);
        const auto back = pl::read_feature_table(path);
        REQUIRE(back.size() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(back[i].video_id == rows[i].video_id);
            CHECK(back[i].session.cow_id == rows[i].session.cow_id);
            CHECK(back[i].session.day == rows[i].session.day);
            CHECK(back[i].session.period == rows[i].session.period);
            CHECK(back[i].length_px == rows[i].length_px);
            CHECK(back[i].width_px == rows[i].width_px);
            CHECK(back[i].centroid_height_m == rows[i].centroid_height_m);
            CHECK(back[i].avg_height_m == rows[i].avg_height_m);
            CHECK(back[i].volume == rows[i].volume);
            CHECK(back[i].n_frames_used == rows[i].n_frames_used);
        }
        // weights live in the manifest, not the feature table
        CHECK_FALSE(back[0].session.body_weight_kg.has_value());

        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "video_id,cow_id,day,period,length_px,width_px,centroid_height_m,"
                        "avg_height_m,volume,n_frames_used");

        // ids are sanitized rather than quoted
        std::vector<VideoFeatures> dirty(1);
        dirty[0].video_id = "v,1\n";
        dirty[0].session = {"c", 0, Period::AM, std::nullopt};
        pl::write_feature_table(path, dirty);
        CHECK(pl::read_feature_table(path)[0].video_id == "v;1");

        write_text(path, "video_id,cow_id\nv,c\n");
        CHECK_THROWS_AS(pl::read_feature_table(path), MalformedCsv);
        write_text(path, header + "\nv,c,0,AM,1,1,1\n");
        CHECK_THROWS_AS(pl::read_feature_table(path), MalformedCsv);
    }

    TEST_CASE("sessions attach by video id") {
        Manifest manifest;
        manifest.video_ids = {"v1", "v2"};
        manifest.sessions = {{"cow_a", 0, Period::AM, 500.0}, {"cow_b", 0, Period::PM, std::nullopt}};

        std::vector<VideoFeatures> rows(3);
        rows[0].video_id = "v2";
        rows[1].video_id = "ghost";
        rows[2].video_id = "v1";

        std::vector<std::string> unmatched;
        const auto joined = pl::attach_sessions(rows, manifest, &unmatched);
        REQUIRE(joined.size() == 2);
        CHECK(joined[0].video_id == "v2");
        CHECK(joined[0].session.cow_id == "cow_b");
        CHECK(joined[1].session.body_weight_kg == 500.0);
        CHECK(unmatched == std::vector<std::string>{"ghost"});

        const auto usable = pl::weighed_only(joined);
        REQUIRE(usable.size() == 1);
        CHECK(usable[0].video_id == "v1");
    }

    TEST_CASE("synthetic herds extract pixel-exact features with every method") {
        test::TempDir dir("herd");
        pl::generate_synth_dataset(tiny_herd(), dir.path);
        REQUIRE(fs::exists(dir.path / "manifest.csv"));
        REQUIRE(fs::exists(dir.path / "frames" / "cow_00_s000" / "frame_000001.csv"));
        REQUIRE(fs::exists(dir.path / "masks" / "truth" / "cow_02_s003" / "frame_000000.png"));

        const pl::RunConfig cfg = run_on(dir.path);
        pl::ExtractStats stats;
        const auto single = pl::extract_features(cfg, SegMethod::Single, &stats);
        REQUIRE(single.size() == 12);
        CHECK(stats.frames_attempted == 24);
        CHECK(stats.frames_used == 24);
        CHECK(stats.failures.empty());
        CHECK(stats.skipped_videos.empty());
        REQUIRE(stats.threshold_used.has_value());
        CHECK(*stats.threshold_used > 5);   // above the floor hue
        CHECK(*stats.threshold_used < 41);  // below every body hue

        for (const VideoFeatures& row : single) {
            const auto truth = read_json(dir.path / "frames" / row.video_id /
                                         "frame_000000.truth.json");
            CHECK(row.length_px == truth.at("length_px").get<double>());
            CHECK(row.width_px == truth.at("width_px").get<double>());
            CHECK(row.avg_height_m ==
                  doctest::Approx(truth.at("avg_height_m").get<double>()).epsilon(1e-12));
            CHECK(row.centroid_height_m ==
                  doctest::Approx(truth.at("max_height_m").get<double>()).epsilon(1e-12));
            CHECK(row.volume == doctest::Approx(truth.at("volume").get<double>()).epsilon(1e-9));
            CHECK(row.n_frames_used == 2);

            REQUIRE(row.session.body_weight_kg.has_value());
            const double want = 250.0 + 0.8 * truth.at("width_px").get<double>() +
                                0.5 * truth.at("length_px").get<double>() +
                                150.0 * truth.at("avg_height_m").get<double>();
            CHECK(*row.session.body_weight_kg == doctest::Approx(want).epsilon(1e-12));
        }

        // the same bodies seen through the other two segmentation paths
        const auto adaptive = pl::extract_features(cfg, SegMethod::Adaptive);
        const auto external = pl::extract_features(cfg, SegMethod::External);
        REQUIRE(adaptive.size() == 12);
        REQUIRE(external.size() == 12);
        for (std::size_t i = 0; i < 12; ++i) {
            CHECK(adaptive[i].video_id == single[i].video_id);
            CHECK(adaptive[i].length_px == single[i].length_px);
            CHECK(adaptive[i].width_px == single[i].width_px);
            CHECK(adaptive[i].volume == single[i].volume);
            CHECK(external[i].avg_height_m == single[i].avg_height_m);
            CHECK(external[i].volume == single[i].volume);
        }
    }

    TEST_CASE("frame failures are soft and exclusions drop sessions") {
        test::TempDir dir("herd");
        pl::generate_synth_dataset(tiny_herd(), dir.path);
        const pl::RunConfig cfg = run_on(dir.path);

        // the default subsample warmup is longer than these two-frame videos
        pl::RunConfig strict = cfg;
        strict.subsample_skip = 2;
        strict.subsample_stride = 15;
        CHECK_THROWS_AS(pl::extract_features(strict, SegMethod::Single), EmptyInput);

        fs::remove(dir.path / "frames" / "cow_00_s000" / "frame_000000.csv");
        fs::remove(dir.path / "frames" / "cow_00_s000" / "frame_000001.csv");
        write_text(dir.path / "frames" / "zzz_extra" / "frame_000000.png", "not a png");

        pl::ExtractStats stats;
        const auto rows = pl::extract_features(cfg, SegMethod::Single, &stats);
        CHECK(rows.size() == 11);
        CHECK(stats.failures.size() == 2);
        CHECK(stats.failures[0].video_id == "cow_00_s000");
        const std::set<std::string> skipped(stats.skipped_videos.begin(),
                                            stats.skipped_videos.end());
        CHECK(skipped.count("cow_00_s000") == 1); // every frame failed
        CHECK(skipped.count("zzz_extra") == 1);   // no manifest row, never read
        for (const VideoFeatures& r : rows) CHECK(r.video_id != "cow_00_s000");

        write_text(dir.path / "exclusions.csv", "day,period\n0,AM\n");
        CHECK(pl::load_dataset_manifest(dir.path).video_ids.size() == 9);
        const auto after = pl::extract_features(cfg, SegMethod::Single);
        CHECK(after.size() == 9); // s000 sessions fall away, s001+ survive
    }

    TEST_CASE("parallel extraction matches serial") {
        test::TempDir dir("herd");
        pl::generate_synth_dataset(tiny_herd(), dir.path);
        pl::RunConfig cfg = run_on(dir.path);
        const auto serial = pl::extract_features(cfg, SegMethod::Adaptive);
        cfg.jobs = 3;
        const auto parallel = pl::extract_features(cfg, SegMethod::Adaptive);
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(serial[i].video_id == parallel[i].video_id);
            CHECK(serial[i].length_px == parallel[i].length_px);
            CHECK(serial[i].width_px == parallel[i].width_px);
            CHECK(serial[i].centroid_height_m == parallel[i].centroid_height_m);
            CHECK(serial[i].avg_height_m == parallel[i].avg_height_m);
            CHECK(serial[i].volume == parallel[i].volume);
        }
    }

    TEST_CASE("saved masks mirror the segmentation") {
        test::TempDir dir("herd");
        pl::SynthDatasetSpec spec = tiny_herd();
        spec.n_cows = 1;
        spec.n_days = 1;
        spec.frames_per_video = 1;
        pl::generate_synth_dataset(spec, dir.path);

        pl::RunConfig cfg = run_on(dir.path);
        cfg.output_dir = dir.path / "out";
        const auto rows = pl::extract_and_save_masks(cfg, SegMethod::Single);
        REQUIRE(rows.size() == 2); // one cow, one day, AM and PM

        const auto saved =
            png::read_gray8(cfg.output_dir / "masks" / "single" / "cow_00_s000" /
                            "frame_000000.png");
        const auto truth =
            png::read_gray8(dir.path / "masks" / "truth" / "cow_00_s000" / "frame_000000.png");
        CHECK((saved == truth).all());
    }

} // TEST_SUITE
