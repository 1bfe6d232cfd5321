#include "bovi/regress.hpp"

#include "bovi/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace bovi {

namespace {

using nlohmann::json;

double feature_value(const VideoFeatures& f, const std::string& name) {
    if (name == "length_px") return f.length_px;
    if (name == "width_px") return f.width_px;
    if (name == "centroid_height_m") return f.centroid_height_m;
    if (name == "avg_height_m") return f.avg_height_m;
    if (name == "volume") return f.volume;
    throw ConfigError("unknown predictor: " + name);
}

// Centered response and standardized predictor columns (population SD).
struct Centered {
    Eigen::MatrixXd Z;  // n × (p−1)
    Eigen::VectorXd yc;
    double y_mean = 0.0;
    Standardization std;
};

Centered center_and_scale(const DesignMatrix& d) {
    const Eigen::Index n = d.n();
    const Eigen::Index p = d.p();
    if (n < 2) throw EmptyInput("too few rows to standardize");

    Centered c;
    c.std.mean = Eigen::VectorXd::Zero(p);
    c.std.sd = Eigen::VectorXd::Ones(p);
    c.y_mean = d.y.mean();
    c.yc = d.y.array() - c.y_mean;
    c.Z.resize(n, p - 1);
    for (Eigen::Index j = 1; j < p; ++j) {
        const double mean = d.X.col(j).mean();
        const double var = (d.X.col(j).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) throw ZeroVarianceColumn("constant predictor: " + d.column_names[j]);
        c.std.mean[j] = mean;
        c.std.sd[j] = sd;
        c.Z.col(j - 1) = (d.X.col(j).array() - mean) / sd;
    }
    return c;
}

Eigen::VectorXd back_transform(const Centered& c, const Eigen::VectorXd& slopes) {
    const Eigen::Index p = c.std.mean.size();
    Eigen::VectorXd beta(p);
    double intercept = c.y_mean;
    for (Eigen::Index j = 1; j < p; ++j) {
        beta[j] = slopes[j - 1] / c.std.sd[j];
        intercept -= beta[j] * c.std.mean[j];
    }
    beta[0] = intercept;
    return beta;
}

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

} // namespace

std::string to_string(RegMethod m) {
    switch (m) {
    case RegMethod::Ols: return "ols";
    case RegMethod::Ridge: return "ridge";
    case RegMethod::Lasso: return "lasso";
    case RegMethod::Lmm: return "lmm";
    }
    return "ols";
}

RegMethod reg_method_from_string(const std::string& s) {
    if (s == "ols") return RegMethod::Ols;
    if (s == "ridge") return RegMethod::Ridge;
    if (s == "lasso") return RegMethod::Lasso;
    if (s == "lmm") return RegMethod::Lmm;
    throw ConfigError("unknown regression method: " + s);
}

double session_time(int day, Period period) {
    return static_cast<double>(day * 2 + (period == Period::PM ? 1 : 0));
}

DesignMatrix build_design(const std::vector<VideoFeatures>& features,
                          const std::vector<std::string>& predictors) {
    if (features.empty()) throw EmptyInput("no feature rows");
    const Eigen::Index n = static_cast<Eigen::Index>(features.size());
    const Eigen::Index p = static_cast<Eigen::Index>(predictors.size()) + 1;

    DesignMatrix d;
    d.X.resize(n, p);
    d.y.resize(n);
    d.time.resize(n);
    d.column_names.push_back("intercept");
    for (const auto& name : predictors) d.column_names.push_back(name);

    for (Eigen::Index i = 0; i < n; ++i) {
        const VideoFeatures& f = features[static_cast<std::size_t>(i)];
        if (!f.session.body_weight_kg)
            throw MalformedManifest("video " + f.video_id + " has no body weight");
        d.X(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < p; ++j)
            d.X(i, j) = feature_value(f, predictors[static_cast<std::size_t>(j - 1)]);
        d.y[i] = *f.session.body_weight_kg;
        d.time[i] = session_time(f.session.day, f.session.period);
        d.cow_ids.push_back(f.session.cow_id);
        d.video_ids.push_back(f.video_id);
        d.days.push_back(f.session.day);
        d.periods.push_back(f.session.period);
    }
    return d;
}

DesignMatrix subset(const DesignMatrix& d, const std::vector<int>& rows) {
    DesignMatrix s;
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    s.X.resize(m, d.p());
    s.y.resize(m);
    s.time.resize(m);
    s.column_names = d.column_names;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
        if (r < 0 || r >= d.n()) throw OutOfBounds("row index outside design matrix");
        s.X.row(i) = d.X.row(r);
        s.y[i] = d.y[r];
        s.time[i] = d.time[r];
        const auto ri = static_cast<std::size_t>(r);
        if (!d.cow_ids.empty()) s.cow_ids.push_back(d.cow_ids[ri]);
        if (!d.video_ids.empty()) s.video_ids.push_back(d.video_ids[ri]);
        if (!d.days.empty()) s.days.push_back(d.days[ri]);
        if (!d.periods.empty()) s.periods.push_back(d.periods[ri]);
    }
    return s;
}

FixedFit fit_ols(const DesignMatrix& d) {
    if (d.n() < d.p()) throw RankDeficient("fewer rows than columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    if (qr.rank() < d.p()) throw RankDeficient("design matrix is rank deficient");
    FixedFit fit;
    fit.method = RegMethod::Ols;
    fit.beta = qr.solve(d.y);
    fit.column_names = d.column_names;
    return fit;
}

FixedFit fit_ridge(const DesignMatrix& d, double lambda) {
    if (lambda < 0.0) throw ConfigError("ridge lambda must be nonnegative");
    const Centered c = center_and_scale(d);
    const Eigen::Index n = d.n();
    const Eigen::Index q = c.Z.cols();

    const Eigen::MatrixXd gram =
        c.Z.transpose() * c.Z / static_cast<double>(n) +
        lambda * Eigen::MatrixXd::Identity(q, q);
    const Eigen::VectorXd rhs = c.Z.transpose() * c.yc / static_cast<double>(n);
    const Eigen::VectorXd slopes = gram.ldlt().solve(rhs);

    FixedFit fit;
    fit.method = RegMethod::Ridge;
    fit.beta = back_transform(c, slopes);
    fit.lambda = lambda;
    fit.standardization = c.std;
    fit.column_names = d.column_names;
    return fit;
}

FixedFit fit_lasso(const DesignMatrix& d, double lambda, double tol, int max_cycles) {
    if (lambda < 0.0) throw ConfigError("lasso lambda must be nonnegative");
    const Centered c = center_and_scale(d);
    const Eigen::Index n = d.n();
    const Eigen::Index q = c.Z.cols();

    // unit diagonal by construction (population-SD standardization)
    const Eigen::MatrixXd gram = c.Z.transpose() * c.Z / static_cast<double>(n);
    const Eigen::VectorXd cov = c.Z.transpose() * c.yc / static_cast<double>(n);

    Eigen::VectorXd slopes = Eigen::VectorXd::Zero(q);
    bool converged = false;
    for (int cycle = 0; cycle < max_cycles && !converged; ++cycle) {
        double max_step = 0.0;
        for (Eigen::Index j = 0; j < q; ++j) {
            const double rho = cov[j] - gram.row(j).dot(slopes) + gram(j, j) * slopes[j];
            const double next =
                std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / gram(j, j);
            max_step = std::max(max_step, std::abs(next - slopes[j]));
            slopes[j] = next;
        }
        converged = max_step < tol;
    }
    if (!converged) throw NonConvergence("coordinate descent did not converge");

    FixedFit fit;
    fit.method = RegMethod::Lasso;
    fit.beta = back_transform(c, slopes);
    fit.lambda = lambda;
    fit.standardization = c.std;
    fit.column_names = d.column_names;
    return fit;
}

double lambda_max(const DesignMatrix& d) {
    const Centered c = center_and_scale(d);
    return (c.Z.transpose() * c.yc / static_cast<double>(d.n())).cwiseAbs().maxCoeff();
}

std::vector<double> default_lambda_grid(const DesignMatrix& d, int count) {
    const double top = lambda_max(d);
    if (!(top > 0.0)) return {0.0};
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    const double lo = std::log(1e-4 * top);
    const double hi = std::log(top);
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
        grid.push_back(std::exp(lo + f * (hi - lo)));
    }
    return grid;
}

double tune_lambda(const DesignMatrix& d, RegMethod method, const std::vector<double>& grid,
                   int k, unsigned seed) {
    if (grid.empty()) throw EmptyInput("empty lambda grid");
    if (k < 2) throw InvalidK("need at least 2 folds");
    if (d.n() < k) throw InvalidK("more folds than rows");
    if (method != RegMethod::Ridge && method != RegMethod::Lasso)
        throw ConfigError("lambda tuning applies to ridge and lasso only");

    const int n = static_cast<int>(d.n());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    // contiguous folds over the shuffled order; first n%k folds get the extra row
    std::vector<std::pair<int, int>> bounds;
    int start = 0;
    for (int f = 0; f < k; ++f) {
        const int size = n / k + (f < n % k ? 1 : 0);
        bounds.emplace_back(start, start + size);
        start += size;
    }

    std::vector<double> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());

    double best_lambda = sorted_grid.front();
    double best_risk = std::numeric_limits<double>::infinity();
    for (const double lambda : sorted_grid) {
        double risk = 0.0;
        for (const auto& [lo, hi] : bounds) {
            std::vector<int> train, test;
            for (int i = 0; i < n; ++i) {
                const int idx = order[static_cast<std::size_t>(i)];
                if (i >= lo && i < hi)
                    test.push_back(idx);
                else
                    train.push_back(idx);
            }
            const DesignMatrix dtr = subset(d, train);
            const DesignMatrix dte = subset(d, test);
            const FixedFit fit = method == RegMethod::Ridge ? fit_ridge(dtr, lambda)
                                                            : fit_lasso(dtr, lambda);
            risk += rmse(dte.y, predict(fit, dte));
        }
        risk /= static_cast<double>(k);
        if (risk <= best_risk) { // ties toward the larger lambda
            best_risk = risk;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

Eigen::VectorXd predict(const FixedFit& fit, const DesignMatrix& d) {
    if (fit.beta.size() != d.p()) throw DimensionMismatch("coefficient count != design columns");
    return d.X * fit.beta;
}

Eigen::VectorXd predict(const LmmFit& fit, const DesignMatrix& d) {
    if (fit.beta.size() != d.p()) throw DimensionMismatch("coefficient count != design columns");
    if (d.cow_ids.size() != static_cast<std::size_t>(d.n()))
        throw DimensionMismatch("design matrix has no cow labels");
    Eigen::VectorXd out = d.X * fit.beta;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const auto it = fit.blups.find(d.cow_ids[static_cast<std::size_t>(i)]);
        if (it == fit.blups.end())
            throw UnknownCow("no random effects for cow " + d.cow_ids[static_cast<std::size_t>(i)]);
        out[i] += it->second[0] + it->second[1] * d.time[i];
    }
    return out;
}

Eigen::VectorXd predict(const Model& fit, const DesignMatrix& d) {
    return std::visit([&](const auto& f) { return predict(f, d); }, fit);
}

void save_model(const std::filesystem::path& path, const Model& model) {
    json j;
    if (const auto* f = std::get_if<FixedFit>(&model)) {
        j["method"] = to_string(f->method);
        j["column_names"] = f->column_names;
        j["beta"] = vector_to_json(f->beta);
        if (f->lambda)
            j["lambda"] = *f->lambda;
        else
            j["lambda"] = nullptr;
        if (f->standardization.mean.size() > 0) {
            j["standardization"] = {{"mean", vector_to_json(f->standardization.mean)},
                                    {"sd", vector_to_json(f->standardization.sd)}};
        }
    } else {
        const auto& m = std::get<LmmFit>(model);
        j["method"] = "lmm";
        j["column_names"] = m.column_names;
        j["beta"] = vector_to_json(m.beta);
        j["var_intercept"] = m.var_intercept;
        j["var_slope"] = m.var_slope;
        j["cov_int_slope"] = m.cov_int_slope;
        j["var_resid"] = m.var_resid;
        j["loglik"] = m.loglik;
        j["boundary_intercept"] = m.boundary_intercept;
        j["boundary_slope"] = m.boundary_slope;
        json blups = json::object();
        for (const auto& [cow, b] : m.blups) blups[cow] = {b[0], b[1]};
        j["blups"] = blups;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError("bad model file " + path.string() + ": " + e.what());
    }

    const std::string method = j.at("method").get<std::string>();
    if (method == "lmm") {
        LmmFit m;
        m.column_names = j.at("column_names").get<std::vector<std::string>>();
        m.beta = vector_from_json(j.at("beta"));
        m.var_intercept = j.at("var_intercept").get<double>();
        m.var_slope = j.at("var_slope").get<double>();
        m.cov_int_slope = j.at("cov_int_slope").get<double>();
        m.var_resid = j.at("var_resid").get<double>();
        m.loglik = j.at("loglik").get<double>();
        m.boundary_intercept = j.at("boundary_intercept").get<bool>();
        m.boundary_slope = j.at("boundary_slope").get<bool>();
        for (const auto& [cow, b] : j.at("blups").items())
            m.blups[cow] = Eigen::Vector2d(b[0].get<double>(), b[1].get<double>());
        return m;
    }

    FixedFit f;
    f.method = reg_method_from_string(method);
    f.column_names = j.at("column_names").get<std::vector<std::string>>();
    f.beta = vector_from_json(j.at("beta"));
    if (!j.at("lambda").is_null()) f.lambda = j.at("lambda").get<double>();
    if (j.contains("standardization")) {
        f.standardization.mean = vector_from_json(j.at("standardization").at("mean"));
        f.standardization.sd = vector_from_json(j.at("standardization").at("sd"));
    }
    return f;
}

} // namespace bovi
