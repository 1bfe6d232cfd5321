// The mixed model re-estimates the variance components and fixed effects of
// its own generative process: simulated herds with random per-cow intercepts
// and growth slopes, plus a degenerate herd that must collapse onto plain
// least squares.

#include "acceptance.hpp"

#include "bovi/regress.hpp"
#include "bovi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

using namespace bovi;

namespace {

// standard errors of the fixed effects under the true covariance:
// sqrt(diag(inv(sum_i X_i' V_i^-1 X_i))) with V_i = s2 I + Z_i G Z_i'
Eigen::VectorXd se_oracle(const DesignMatrix& d, const Eigen::Matrix2d& G, double s2) {
    std::map<std::string, std::vector<int>> groups;
    for (Eigen::Index i = 0; i < d.n(); ++i)
        groups[d.cow_ids[static_cast<std::size_t>(i)]].push_back(static_cast<int>(i));

    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d.p(), d.p());
    for (const auto& [cow, rows] : groups) {
        const int m = static_cast<int>(rows.size());
        Eigen::MatrixXd X(m, d.p());
        Eigen::MatrixXd Z(m, 2);
        for (int r = 0; r < m; ++r) {
            X.row(r) = d.X.row(rows[static_cast<std::size_t>(r)]);
            Z(r, 0) = 1.0;
            Z(r, 1) = d.time[rows[static_cast<std::size_t>(r)]];
        }
        const Eigen::MatrixXd V =
            s2 * Eigen::MatrixXd::Identity(m, m) + Z * G * Z.transpose();
        info += X.transpose() * V.ldlt().solve(X);
    }
    return info.inverse().diagonal().cwiseSqrt();
}

} // namespace

int main() {
    return acceptance::run("mixed model recovers simulated variance components", [](auto& c) {
        const double true_int = 400.0, true_slope = 4.0, true_resid = 25.0;
        Eigen::VectorXd true_beta(5);
        true_beta << -600.0, 0.8, 0.6, 250.0, 0.012;
        Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
        G(0, 0) = true_int;
        G(1, 1) = true_slope;

        std::vector<double> err_int, err_slope, err_resid, cov_abs;
        int beta_hits = 0;
        for (int rep = 0; rep < 10; ++rep) {
            LongitudinalSpec spec;
            spec.n_cows = 50;
            spec.n_sessions = 40;
            spec.var_intercept = true_int;
            spec.var_slope = true_slope;
            spec.var_resid = true_resid;
            spec.seed = 700 + static_cast<unsigned>(rep);
            const DesignMatrix d = generate_longitudinal(spec);

            const LmmFit fit = fit_lmm(d);
            err_int.push_back(std::abs(fit.var_intercept - true_int) / true_int);
            err_slope.push_back(std::abs(fit.var_slope - true_slope) / true_slope);
            err_resid.push_back(std::abs(fit.var_resid - true_resid) / true_resid);
            cov_abs.push_back(std::abs(fit.cov_int_slope));
            c.expect(!fit.boundary_intercept && !fit.boundary_slope,
                     "variance component collapsed on a healthy herd");

            const Eigen::VectorXd se = se_oracle(d, G, true_resid);
            for (int j = 0; j < 5; ++j)
                if (std::abs(fit.beta[j] - true_beta[j]) <= 3.0 * se[j]) ++beta_hits;
        }

        c.expect(median(err_int) <= 0.20, "intercept variance off by more than 20%");
        c.expect(median(err_slope) <= 0.20, "slope variance off by more than 20%");
        c.expect(median(err_resid) <= 0.20, "residual variance off by more than 20%");
        c.expect(median(cov_abs) <= 12.0, "spurious intercept-slope covariance");
        c.expect(beta_hits >= 45, "fixed effects stray beyond three standard errors");

        // ten bit-identical cows: zero between-cow spread pins both variance
        // components at the boundary and the fit degenerates to least squares
        DesignMatrix flat;
        const int per = 30, cows = 10;
        flat.X.resize(per * cows, 3);
        flat.y.resize(per * cows);
        flat.time.resize(per * cows);
        flat.column_names = {"intercept", "z", "t"};
        for (int g = 0; g < cows; ++g)
            for (int k = 0; k < per; ++k) {
                const int i = g * per + k;
                flat.X(i, 0) = 1.0;
                flat.X(i, 1) = std::sin(0.3 * k);
                flat.X(i, 2) = k;
                flat.y[i] = 10.0 + 2.0 * flat.X(i, 1) - 0.3 * k + std::sin(1.7 * k);
                flat.time[i] = k;
                flat.cow_ids.push_back("cow_" + std::to_string(g));
                flat.video_ids.push_back("v" + std::to_string(i));
                flat.days.push_back(k / 2);
                flat.periods.push_back(k % 2 ? Period::PM : Period::AM);
            }
        const LmmFit degenerate = fit_lmm(flat);
        c.expect(degenerate.boundary_intercept && degenerate.boundary_slope,
                 "identical cows did not pin the variance components");
        const FixedFit ols = fit_ols(flat);
        for (int j = 0; j < 3; ++j)
            c.expect(std::abs(degenerate.beta[j] - ols.beta[j]) <=
                         1e-3 * (1.0 + std::abs(ols.beta[j])),
                     "degenerate mixed fit strays from least squares");
    });
}
