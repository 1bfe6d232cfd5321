// End to end on a noiseless synthetic herd: rendered frames in, per-video
// features out, and every regression method under every validation design
// should recover the exactly linear weights almost perfectly.

#include "acceptance.hpp"
#include "helpers.hpp"

#include "bovi/evaluate.hpp"
#include "bovi/pipeline.hpp"
#include "bovi/regress.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace bovi;

namespace {

void expect_report(acceptance::Criterion& c, const CvReport& report, const char* what) {
    for (const auto& row : report.summary) {
        c.expect(row.folds_failed == 0, std::string(what) + ": a fold failed");
        c.expect(row.r2 >= 0.999, std::string(what) + ": r2 below 0.999 for " + row.method +
                                      " / " + row.scenario);
        c.expect(row.mape_pct <= 0.1, std::string(what) + ": mape above 0.1% for " + row.method +
                                          " / " + row.scenario);
    }
    for (const auto& row : report.folds)
        c.expect(row.error.empty(), std::string(what) + ": fold error: " + row.error);
}

} // namespace

int main() {
    return acceptance::run("noiseless end-to-end run predicts weight almost perfectly", [](auto& c) {
        test::TempDir tmp("crit7");
        pipeline::SynthDatasetSpec spec;
        spec.n_cows = 12;
        spec.n_days = 10;
        spec.frames_per_video = 1;
        spec.width = 192;
        spec.height = 120;
        spec.shape = BodyShape::Plateau;
        spec.seed = 21;
        pipeline::generate_synth_dataset(spec, tmp.path);

        pipeline::RunConfig cfg;
        cfg.dataset_root = tmp.path;
        cfg.subsample_skip = 0;
        cfg.subsample_stride = 1;
        pipeline::ExtractStats stats;
        const auto features = pipeline::extract_features(cfg, SegMethod::Single, &stats);
        c.expect(features.size() == 240, "expected 12 cows x 20 sessions");
        c.expect(stats.failures.empty() && stats.skipped_videos.empty(),
                 "frames were dropped from a clean dataset");
        c.expect(stats.frames_attempted == 240 && stats.frames_used == 240,
                 "frame accounting mismatch");
        c.expect(stats.threshold_used && *stats.threshold_used > 5 && *stats.threshold_used < 41,
                 "pooled threshold not between floor and body hues");

        const auto weighed = pipeline::weighed_only(features);
        c.expect(weighed.size() == 240, "every session should carry a weight");
        // volume scales like the other three predictors multiplied together;
        // leaving it out keeps the design well conditioned
        const DesignMatrix d =
            build_design(weighed, {"width_px", "length_px", "avg_height_m"});

        ExperimentConfig forecast;
        forecast.design = CvDesign::Forecast;
        const CvReport fc = run_experiment(d, forecast);
        c.expect(fc.summary.size() == 20, "expected 4 methods x 5 ratios");
        expect_report(c, fc, "forecast");

        ExperimentConfig lko;
        lko.design = CvDesign::LeaveKOut;
        lko.k = 3;
        lko.methods = {RegMethod::Ols, RegMethod::Ridge, RegMethod::Lasso};
        const CvReport lk = run_experiment(d, lko);
        c.expect(lk.summary.size() == 3, "expected one row per method");
        for (const auto& row : lk.summary)
            c.expect(row.folds_ok == 220, "expected all C(12,3) folds to run");
        expect_report(c, lk, "leave-3-out");

        ExperimentConfig gof;
        gof.design = CvDesign::GoodnessOfFit;
        const CvReport gf = run_experiment(d, gof);
        c.expect(gf.summary.size() == 4, "expected one goodness-of-fit row per method");
        expect_report(c, gf, "goodness-of-fit");

        // report files round-trip
        const auto summary_csv = tmp.path / "summary.csv";
        const auto folds_csv = tmp.path / "folds.csv";
        const auto summary_json = tmp.path / "summary.json";
        write_report_csv(summary_csv, folds_csv, fc);
        write_report_summary(summary_json, fc);
        std::ifstream in(summary_csv);
        std::string header;
        std::getline(in, header);
        c.expect(header == "segmentation,method,scenario,r2,mape_pct,folds_ok,folds_failed",
                 "summary csv header mismatch");
        int lines = 0;
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) ++lines;
        c.expect(lines == 20, "summary csv row count mismatch");
        std::ifstream jin(summary_json);
        const auto j = nlohmann::json::parse(jin);
        c.expect(j.at("design") == "forecast", "json design tag mismatch");
        c.expect(j.at("fold_rows") == 20 && j.at("fold_failures") == 0,
                 "json fold accounting mismatch");
        c.expect(j.at("scenarios").size() == 20, "json scenario count mismatch");
        for (const auto& s : j.at("scenarios"))
            c.expect(s.at("r2").get<double>() >= 0.999, "json r2 below 0.999");
    });
}
