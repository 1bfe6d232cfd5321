#pragma once

#include "bovi/regress.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace bovi {

/// 1 − SS_res/SS_tot. Can go negative out of sample.
double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// Squared Pearson correlation between y and yhat (alternate R² reading).
double r_squared_corr(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// Mean absolute percentage error: (100/n)·Σ|y−ŷ|/|y|.
double mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class Grouping { Overall, PerDay, PerPeriod };

inline const std::array<std::string, 5> kCorrelationFeatures = {
    "length_px", "width_px", "centroid_height_m", "avg_height_m", "volume"};

/// One row per group: Pearson r between body weight and each feature.
/// Groups with fewer than 3 observations come back as warning rows.
struct PearsonRow {
    std::string group;
    long n = 0;
    bool valid = false;
    std::array<double, 5> r{}; // aligned with kCorrelationFeatures
    std::string note;
};

/// `average_days`: for Overall grouping, average per-day correlations instead
/// of pooling every observation.
std::vector<PearsonRow> pearson_table(const std::vector<VideoFeatures>& features,
                                      Grouping grouping, bool average_days = false);

void write_pearson_csv(const std::filesystem::path& path, const std::vector<PearsonRow>& rows);

struct Split {
    std::vector<int> train;
    std::vector<int> test;
    std::string label;
};

/// Partition by time point: train takes the first round-half-up(p%·T) of the
/// ordered unique session times, so all records of one session land together.
/// Ratios are (train_pct, test_pct) pairs.
std::vector<Split> forecast_splits(const DesignMatrix& d,
                                   const std::vector<std::pair<int, int>>& ratios);

/// One split per k-subset of the sorted distinct cow ids, enumerated
/// lexicographically; the subset's rows form the test side.
std::vector<Split> leave_k_cows_out(const DesignMatrix& d, int k);

enum class CvDesign { Forecast, LeaveKOut, GoodnessOfFit };

std::string to_string(CvDesign d);
CvDesign cv_design_from_string(const std::string& s);

struct ExperimentConfig {
    CvDesign design = CvDesign::Forecast;
    std::vector<std::pair<int, int>> ratios = {{90, 10}, {80, 20}, {70, 30}, {60, 40}, {50, 50}};
    int k = 3;
    std::vector<RegMethod> methods = {RegMethod::Ols, RegMethod::Ridge, RegMethod::Lasso,
                                      RegMethod::Lmm};
    std::string segmentation_method = "single"; // label carried into report rows
    int tune_folds = 5;
    unsigned seed = 0;
    bool squared_corr_r2 = false; // report correlation-based R² instead
};

struct FoldRow {
    std::string segmentation;
    std::string method;
    std::string scenario;
    std::string fold;
    double r2 = 0.0;
    double mape_pct = 0.0;
    std::string error; // empty on success
};

struct SummaryRow {
    std::string segmentation;
    std::string method;
    std::string scenario;
    double r2 = 0.0;       // mean over successful folds
    double mape_pct = 0.0;
    int folds_ok = 0;
    int folds_failed = 0;
};

struct CvReport {
    CvDesign design = CvDesign::Forecast;
    std::vector<SummaryRow> summary;
    std::vector<FoldRow> folds;
};

/// Fit/predict every configured method over the design's folds. Fold-level
/// failures are recorded, not fatal. LMM cannot ride along with leave-k-out
/// (its random effects are per-cow, and the held-out cows are unseen).
CvReport run_experiment(const DesignMatrix& d, const ExperimentConfig& cfg);

void write_report_csv(const std::filesystem::path& summary_path,
                      const std::filesystem::path& folds_path, const CvReport& report);
void write_report_summary(const std::filesystem::path& path, const CvReport& report);

} // namespace bovi
