#include "bovi/pipeline.hpp"

#include "bovi/csv.hpp"
#include "bovi/errors.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bovi;
using pipeline::ExtractStats;
using pipeline::RunConfig;

namespace {

struct CliArgs {
    std::string config;
    std::string dataset;
    std::string out;
    long long seed = -1;
    int jobs = 0;
};

void add_common(CLI::App* sub, CliArgs& args) {
    sub->add_option("-c,--config", args.config, "JSON run configuration")->required();
    sub->add_option("--dataset", args.dataset, "override the dataset root");
    sub->add_option("--out", args.out, "override the output directory");
    sub->add_option("--seed", args.seed, "override the configured seed");
    sub->add_option("-j,--jobs", args.jobs, "worker threads for frame processing");
}

void require_dataset(const RunConfig& cfg) {
    if (cfg.dataset_root.empty())
        throw ConfigError("this subcommand needs a 'dataset' path in the config");
    if (!fs::exists(cfg.dataset_root))
        throw ConfigError("dataset root does not exist: " + cfg.dataset_root.string());
}

void report_stats(const std::string& label, const ExtractStats& st, std::size_t n_videos) {
    for (const auto& f : st.failures)
        std::cerr << "warning: " << f.video_id << " frame " << f.frame_index << ": " << f.reason
                  << '\n';
    for (const auto& v : st.skipped_videos) std::cerr << "warning: skipped video " << v << '\n';
    std::cout << label << ": " << n_videos << " videos, " << st.frames_used << '/'
              << st.frames_attempted << " frames";
    if (st.threshold_used) std::cout << ", threshold " << *st.threshold_used;
    std::cout << ", " << st.failures.size() << " frame failures\n";
}

fs::path feature_table_path(const RunConfig& cfg, SegMethod method) {
    return cfg.output_dir / ("features_" + to_string(method) + ".csv");
}

std::vector<VideoFeatures> load_weighed_features(const RunConfig& cfg, SegMethod method) {
    const fs::path table = feature_table_path(cfg, method);
    if (!fs::exists(table))
        throw ConfigError("no feature table at " + table.string() + "; run 'features' first");
    const Manifest manifest = pipeline::load_dataset_manifest(cfg.dataset_root);
    std::vector<std::string> unmatched;
    auto features = pipeline::attach_sessions(pipeline::read_feature_table(table), manifest,
                                              &unmatched);
    for (const auto& v : unmatched)
        std::cerr << "warning: feature row without manifest entry: " << v << '\n';
    return features;
}

int cmd_synth(const RunConfig& cfg) {
    pipeline::generate_synth_dataset(cfg.synth, cfg.output_dir);
    const long videos = static_cast<long>(cfg.synth.n_cows) * cfg.synth.n_days * 2;
    std::cout << "synth: " << videos << " videos x " << cfg.synth.frames_per_video
              << " frames under " << cfg.output_dir.string() << '\n';
    return 0;
}

int cmd_segment(const RunConfig& cfg) {
    require_dataset(cfg);
    fs::create_directories(cfg.output_dir);
    for (SegMethod method : cfg.segmentations) {
        ExtractStats st;
        const auto features = pipeline::extract_and_save_masks(cfg, method, &st);
        report_stats("segment " + to_string(method), st, features.size());
    }
    return 0;
}

int cmd_features(const RunConfig& cfg) {
    require_dataset(cfg);
    fs::create_directories(cfg.output_dir);
    for (SegMethod method : cfg.segmentations) {
        ExtractStats st;
        const auto features = pipeline::extract_features(cfg, method, &st);
        pipeline::write_feature_table(feature_table_path(cfg, method), features);
        report_stats("features " + to_string(method), st, features.size());
    }
    return 0;
}

int cmd_fit(const RunConfig& cfg) {
    require_dataset(cfg);
    fs::create_directories(cfg.output_dir);
    for (SegMethod seg : cfg.segmentations) {
        const auto weighed = pipeline::weighed_only(load_weighed_features(cfg, seg));
        const DesignMatrix d = build_design(weighed, cfg.predictors);
        for (RegMethod method : cfg.experiment.methods) {
            Model model;
            if (method == RegMethod::Ols) {
                model = fit_ols(d);
            } else if (method == RegMethod::Lmm) {
                model = fit_lmm(d);
            } else {
                const auto grid = default_lambda_grid(d);
                const double lambda = tune_lambda(d, method, grid, cfg.experiment.tune_folds,
                                                  cfg.experiment.seed);
                model = method == RegMethod::Ridge ? fit_ridge(d, lambda) : fit_lasso(d, lambda);
            }
            const fs::path path =
                cfg.output_dir / ("model_" + to_string(seg) + "_" + to_string(method) + ".json");
            save_model(path, model);
            std::cout << "fit " << to_string(seg) << ' ' << to_string(method) << ": n=" << d.n();
            if (const auto* fixed = std::get_if<FixedFit>(&model)) {
                if (fixed->lambda) std::cout << " lambda=" << csv::format_double(*fixed->lambda);
            } else {
                const auto& lmm = std::get<LmmFit>(model);
                std::cout << " var_int=" << csv::format_double(lmm.var_intercept)
                          << " var_slope=" << csv::format_double(lmm.var_slope)
                          << " var_resid=" << csv::format_double(lmm.var_resid);
            }
            std::cout << " -> " << path.string() << '\n';
        }
    }
    return 0;
}

int cmd_crossval(const RunConfig& cfg) {
    if (cfg.experiment.design == CvDesign::LeaveKOut)
        for (RegMethod m : cfg.experiment.methods)
            if (m == RegMethod::Lmm)
                throw ConfigError("the mixed model cannot run under leave-k-out "
                                  "(held-out cows have no random effects)");
    require_dataset(cfg);
    fs::create_directories(cfg.output_dir);
    CvReport merged;
    merged.design = cfg.experiment.design;
    for (SegMethod seg : cfg.segmentations) {
        const auto weighed = pipeline::weighed_only(load_weighed_features(cfg, seg));
        const DesignMatrix d = build_design(weighed, cfg.predictors);
        ExperimentConfig exp = cfg.experiment;
        exp.segmentation_method = to_string(seg);
        const CvReport report = run_experiment(d, exp);
        merged.summary.insert(merged.summary.end(), report.summary.begin(),
                              report.summary.end());
        merged.folds.insert(merged.folds.end(), report.folds.begin(), report.folds.end());
    }
    write_report_csv(cfg.output_dir / "summary.csv", cfg.output_dir / "folds.csv", merged);
    write_report_summary(cfg.output_dir / "summary.json", merged);
    int failed = 0;
    for (const auto& row : merged.summary) failed += row.folds_failed;
    std::cout << "crossval: " << merged.summary.size() << " summary rows, " << merged.folds.size()
              << " folds (" << failed << " failed) -> " << cfg.output_dir.string() << '\n';
    return 0;
}

int cmd_correlate(const RunConfig& cfg) {
    require_dataset(cfg);
    fs::create_directories(cfg.output_dir);
    for (SegMethod seg : cfg.segmentations) {
        const auto features = load_weighed_features(cfg, seg);
        const auto rows =
            pearson_table(features, cfg.correlate_grouping, cfg.correlate_average_days);
        const fs::path path = cfg.output_dir / ("pearson_" + to_string(seg) + ".csv");
        write_pearson_csv(path, rows);
        std::cout << "correlate " << to_string(seg) << ": " << rows.size() << " groups -> "
                  << path.string() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"top-view depth video biometrics and body weight modeling"};
    app.require_subcommand(1);
    CliArgs args;

    CLI::App* synth = app.add_subcommand("synth", "render a synthetic dataset");
    CLI::App* segment = app.add_subcommand("segment", "write body masks for every frame");
    CLI::App* features = app.add_subcommand("features", "extract per-video feature tables");
    CLI::App* fit = app.add_subcommand("fit", "fit weight models on a feature table");
    CLI::App* crossval = app.add_subcommand("crossval", "run the configured validation design");
    CLI::App* correlate = app.add_subcommand("correlate", "feature/weight correlation tables");
    for (CLI::App* sub : {synth, segment, features, fit, crossval, correlate})
        add_common(sub, args);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = pipeline::load_run_config(args.config);
        if (!args.dataset.empty()) cfg.dataset_root = args.dataset;
        if (!args.out.empty()) cfg.output_dir = args.out;
        if (args.seed >= 0) {
            cfg.experiment.seed = static_cast<unsigned>(args.seed);
            cfg.synth.seed = static_cast<unsigned>(args.seed);
        }
        if (args.jobs > 0) cfg.jobs = args.jobs;

        if (app.got_subcommand(synth)) return cmd_synth(cfg);
        if (app.got_subcommand(segment)) return cmd_segment(cfg);
        if (app.got_subcommand(features)) return cmd_features(cfg);
        if (app.got_subcommand(fit)) return cmd_fit(cfg);
        if (app.got_subcommand(crossval)) return cmd_crossval(cfg);
        if (app.got_subcommand(correlate)) return cmd_correlate(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
