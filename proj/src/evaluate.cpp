#include "bovi/evaluate.hpp"

#include "bovi/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace bovi {

namespace {

void check_lengths(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    if (y.size() != yhat.size()) throw DimensionMismatch("prediction length mismatch");
    if (y.size() == 0) throw EmptyInput("empty metric input");
}

double feature_of(const VideoFeatures& f, std::size_t idx) {
    switch (idx) {
    case 0: return f.length_px;
    case 1: return f.width_px;
    case 2: return f.centroid_height_m;
    case 3: return f.avg_height_m;
    default: return f.volume;
    }
}

PearsonRow correlate_group(const std::string& label,
                           const std::vector<const VideoFeatures*>& rows) {
    PearsonRow out;
    out.group = label;
    out.n = static_cast<long>(rows.size());
    if (rows.size() < 3) {
        out.note = "skipped: fewer than 3 observations";
        return out;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        w[i] = *rows[static_cast<std::size_t>(i)]->session.body_weight_kg;
    for (std::size_t f = 0; f < kCorrelationFeatures.size(); ++f) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i)
            x[i] = feature_of(*rows[static_cast<std::size_t>(i)], f);
        out.r[f] = pearson(x, w);
    }
    out.valid = true;
    return out;
}

std::string sanitize_cell(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    const auto b = s.find_first_not_of(' ');
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

long long choose(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    check_lengths(y, yhat);
    if (y.size() < 2) throw EmptyInput("need at least 2 observations");
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    if (!(ss_tot > 0.0)) throw ZeroVariance("response has no variance");
    const double ss_res = (y - yhat).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

double r_squared_corr(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    const double r = pearson(y, yhat);
    return r * r;
}

double mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    check_lengths(y, yhat);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) throw ZeroTruth("zero true value in MAPE");
        acc += std::abs(y[i] - yhat[i]) / std::abs(y[i]);
    }
    return 100.0 * acc / static_cast<double>(y.size());
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    check_lengths(a, b);
    if (a.size() < 2) throw EmptyInput("need at least 2 observations");
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double denom = std::sqrt(da.square().sum() * db.square().sum());
    if (!(denom > 0.0)) throw ZeroVariance("constant input to correlation");
    return (da * db).sum() / denom;
}

std::vector<PearsonRow> pearson_table(const std::vector<VideoFeatures>& features,
                                      Grouping grouping, bool average_days) {
    std::vector<const VideoFeatures*> rows;
    for (const auto& f : features)
        if (f.session.body_weight_kg) rows.push_back(&f);
    if (rows.empty()) throw EmptyInput("no weighed observations to correlate");

    auto by_day = [&] {
        std::map<int, std::vector<const VideoFeatures*>> groups;
        for (const auto* f : rows) groups[f->session.day].push_back(f);
        return groups;
    };

    std::vector<PearsonRow> table;
    switch (grouping) {
    case Grouping::Overall: {
        if (!average_days) {
            table.push_back(correlate_group("all", rows));
            break;
        }
        // mean of the per-day correlation coefficients
        std::array<double, 5> acc{};
        int used = 0;
        for (const auto& [day, group] : by_day()) {
            const PearsonRow r = correlate_group("day " + std::to_string(day), group);
            if (!r.valid) continue;
            for (std::size_t f = 0; f < acc.size(); ++f) acc[f] += r.r[f];
            ++used;
        }
        PearsonRow out;
        out.group = "all";
        out.n = static_cast<long>(rows.size());
        if (used == 0) {
            out.note = "skipped: no day has 3 observations";
        } else {
            for (std::size_t f = 0; f < acc.size(); ++f) out.r[f] = acc[f] / used;
            out.valid = true;
            out.note = "mean of per-day correlations";
        }
        table.push_back(out);
        break;
    }
    case Grouping::PerDay:
        for (const auto& [day, group] : by_day())
            table.push_back(correlate_group("day " + std::to_string(day), group));
        break;
    case Grouping::PerPeriod: {
        std::map<std::pair<int, int>, std::vector<const VideoFeatures*>> groups;
        for (const auto* f : rows)
            groups[{f->session.day, f->session.period == Period::PM ? 1 : 0}].push_back(f);
        for (const auto& [key, group] : groups) {
            const std::string label =
                "day " + std::to_string(key.first) + (key.second ? " PM" : " AM");
            table.push_back(correlate_group(label, group));
        }
        break;
    }
    }
    return table;
}

void write_pearson_csv(const std::filesystem::path& path, const std::vector<PearsonRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "group,n";
    for (const auto& f : kCorrelationFeatures) out << ",r_" << f;
    out << ",note\n";
    for (const auto& row : rows) {
        out << sanitize_cell(row.group) << ',' << row.n;
        for (const double r : row.r) out << ',' << (row.valid ? csv::format_double(r) : "");
        out << ',' << sanitize_cell(row.note) << '\n';
    }
}

std::vector<Split> forecast_splits(const DesignMatrix& d,
                                   const std::vector<std::pair<int, int>>& ratios) {
    if (d.n() == 0) throw EmptyInput("empty design matrix");
    std::set<double> time_points(d.time.begin(), d.time.end());
    std::vector<double> ordered(time_points.begin(), time_points.end());
    const int T = static_cast<int>(ordered.size());

    std::vector<Split> splits;
    for (const auto& [p, q] : ratios) {
        if (p <= 0 || q <= 0 || p + q != 100)
            throw ConfigError("ratio must be p:(100-p) with 0 < p < 100");
        const int train_points =
            static_cast<int>(std::floor(static_cast<double>(T) * p / 100.0 + 0.5));
        if (train_points <= 0 || train_points >= T)
            throw DegenerateSplit("ratio " + std::to_string(p) + ":" + std::to_string(q) +
                                  " leaves an empty side over " + std::to_string(T) +
                                  " time points");
        const double cutoff = ordered[static_cast<std::size_t>(train_points - 1)];
        Split s;
        s.label = std::to_string(p) + ":" + std::to_string(q);
        for (int i = 0; i < static_cast<int>(d.n()); ++i) {
            if (d.time[i] <= cutoff)
                s.train.push_back(i);
            else
                s.test.push_back(i);
        }
        splits.push_back(std::move(s));
    }
    return splits;
}

std::vector<Split> leave_k_cows_out(const DesignMatrix& d, int k) {
    if (d.cow_ids.size() != static_cast<std::size_t>(d.n()))
        throw DimensionMismatch("design matrix has no cow labels");
    const std::set<std::string> cow_set(d.cow_ids.begin(), d.cow_ids.end());
    const std::vector<std::string> cows(cow_set.begin(), cow_set.end());
    const int m = static_cast<int>(cows.size());
    if (k < 1 || k >= m) throw InvalidK("k must satisfy 1 <= k < number of cows");

    const long long total = choose(m, k);
    std::vector<Split> splits;
    std::vector<int> comb(static_cast<std::size_t>(k));
    std::iota(comb.begin(), comb.end(), 0);

    long long fold = 0;
    while (true) {
        ++fold;
        std::set<std::string> test_cows;
        for (const int c : comb) test_cows.insert(cows[static_cast<std::size_t>(c)]);

        Split s;
        s.label = "fold " + std::to_string(fold) + "/" + std::to_string(total);
        for (int i = 0; i < static_cast<int>(d.n()); ++i) {
            if (test_cows.count(d.cow_ids[static_cast<std::size_t>(i)]))
                s.test.push_back(i);
            else
                s.train.push_back(i);
        }
        splits.push_back(std::move(s));

        // next lexicographic k-combination of {0..m-1}
        int j = k - 1;
        while (j >= 0 && comb[static_cast<std::size_t>(j)] == m - k + j) --j;
        if (j < 0) break;
        ++comb[static_cast<std::size_t>(j)];
        for (int l = j + 1; l < k; ++l)
            comb[static_cast<std::size_t>(l)] = comb[static_cast<std::size_t>(l - 1)] + 1;
    }
    return splits;
}

std::string to_string(CvDesign d) {
    switch (d) {
    case CvDesign::Forecast: return "forecast";
    case CvDesign::LeaveKOut: return "leave_k_out";
    case CvDesign::GoodnessOfFit: return "goodness_of_fit";
    }
    return "forecast";
}

CvDesign cv_design_from_string(const std::string& s) {
    if (s == "forecast") return CvDesign::Forecast;
    if (s == "leave_k_out") return CvDesign::LeaveKOut;
    if (s == "goodness_of_fit") return CvDesign::GoodnessOfFit;
    throw ConfigError("unknown cross-validation design: " + s);
}

CvReport run_experiment(const DesignMatrix& d, const ExperimentConfig& cfg) {
    const bool wants_lmm =
        std::find(cfg.methods.begin(), cfg.methods.end(), RegMethod::Lmm) != cfg.methods.end();
    if (cfg.design == CvDesign::LeaveKOut && wants_lmm)
        throw IncompatibleDesign("mixed model cannot predict held-out cows");

    struct Scenario {
        std::string name;
        std::vector<Split> splits;
    };
    std::vector<Scenario> scenarios;
    switch (cfg.design) {
    case CvDesign::Forecast:
        for (const auto& ratio : cfg.ratios) {
            auto s = forecast_splits(d, {ratio});
            scenarios.push_back({s.front().label, std::move(s)});
        }
        break;
    case CvDesign::LeaveKOut:
        scenarios.push_back(
            {"leave-" + std::to_string(cfg.k) + "-out", leave_k_cows_out(d, cfg.k)});
        break;
    case CvDesign::GoodnessOfFit: {
        Split all;
        all.label = "full";
        all.train.resize(static_cast<std::size_t>(d.n()));
        std::iota(all.train.begin(), all.train.end(), 0);
        all.test = all.train;
        scenarios.push_back({"goodness_of_fit", {std::move(all)}});
        break;
    }
    }

    CvReport report;
    report.design = cfg.design;
    for (const RegMethod method : cfg.methods) {
        for (const Scenario& sc : scenarios) {
            SummaryRow sum;
            sum.segmentation = cfg.segmentation_method;
            sum.method = to_string(method);
            sum.scenario = sc.name;
            double r2_acc = 0.0;
            double mape_acc = 0.0;

            for (std::size_t fi = 0; fi < sc.splits.size(); ++fi) {
                const Split& split = sc.splits[fi];
                FoldRow row;
                row.segmentation = cfg.segmentation_method;
                row.method = to_string(method);
                row.scenario = sc.name;
                row.fold = split.label;
                try {
                    const DesignMatrix dtr = subset(d, split.train);
                    const DesignMatrix dte = subset(d, split.test);
                    Model fit;
                    switch (method) {
                    case RegMethod::Ols: fit = fit_ols(dtr); break;
                    case RegMethod::Ridge:
                    case RegMethod::Lasso: {
                        const double lambda =
                            tune_lambda(dtr, method, default_lambda_grid(dtr), cfg.tune_folds,
                                        cfg.seed + static_cast<unsigned>(fi));
                        fit = method == RegMethod::Ridge ? fit_ridge(dtr, lambda)
                                                         : fit_lasso(dtr, lambda);
                        break;
                    }
                    case RegMethod::Lmm: fit = fit_lmm(dtr); break;
                    }
                    const Eigen::VectorXd yhat = predict(fit, dte);
                    row.r2 = cfg.squared_corr_r2 ? r_squared_corr(dte.y, yhat)
                                                 : r_squared(dte.y, yhat);
                    row.mape_pct = mape(dte.y, yhat);
                    r2_acc += row.r2;
                    mape_acc += row.mape_pct;
                    ++sum.folds_ok;
                } catch (const Error& e) {
                    row.error = e.what();
                    row.r2 = std::numeric_limits<double>::quiet_NaN();
                    row.mape_pct = std::numeric_limits<double>::quiet_NaN();
                    ++sum.folds_failed;
                }
                report.folds.push_back(std::move(row));
            }

            if (sum.folds_ok > 0) {
                sum.r2 = r2_acc / sum.folds_ok;
                sum.mape_pct = mape_acc / sum.folds_ok;
            } else {
                sum.r2 = std::numeric_limits<double>::quiet_NaN();
                sum.mape_pct = std::numeric_limits<double>::quiet_NaN();
            }
            report.summary.push_back(std::move(sum));
        }
    }
    return report;
}

void write_report_csv(const std::filesystem::path& summary_path,
                      const std::filesystem::path& folds_path, const CvReport& report) {
    {
        std::ofstream out(summary_path);
        if (!out) throw IoError("cannot write " + summary_path.string());
        out << "segmentation,method,scenario,r2,mape_pct,folds_ok,folds_failed\n";
        for (const auto& s : report.summary)
            out << sanitize_cell(s.segmentation) << ',' << sanitize_cell(s.method) << ','
                << sanitize_cell(s.scenario) << ',' << csv::format_double(s.r2) << ','
                << csv::format_double(s.mape_pct) << ',' << s.folds_ok << ',' << s.folds_failed
                << '\n';
    }
    {
        std::ofstream out(folds_path);
        if (!out) throw IoError("cannot write " + folds_path.string());
        out << "segmentation,method,scenario,fold,r2,mape_pct,error\n";
        for (const auto& f : report.folds)
            out << sanitize_cell(f.segmentation) << ',' << sanitize_cell(f.method) << ','
                << sanitize_cell(f.scenario) << ',' << sanitize_cell(f.fold) << ','
                << csv::format_double(f.r2) << ',' << csv::format_double(f.mape_pct) << ','
                << sanitize_cell(f.error) << '\n';
    }
}

void write_report_summary(const std::filesystem::path& path, const CvReport& report) {
    nlohmann::json j;
    j["design"] = to_string(report.design);
    j["scenarios"] = nlohmann::json::array();
    for (const auto& s : report.summary) {
        j["scenarios"].push_back({{"segmentation", s.segmentation},
                                  {"method", s.method},
                                  {"scenario", s.scenario},
                                  {"r2", s.r2},
                                  {"mape_pct", s.mape_pct},
                                  {"folds_ok", s.folds_ok},
                                  {"folds_failed", s.folds_failed}});
    }
    int failed = 0;
    for (const auto& f : report.folds)
        if (!f.error.empty()) ++failed;
    j["fold_rows"] = report.folds.size();
    j["fold_failures"] = failed;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace bovi
