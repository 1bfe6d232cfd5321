#include "doctest.h"
#include "helpers.hpp"

#include "bovi/errors.hpp"
#include "bovi/regress.hpp"

#include <cmath>
#include <random>

using namespace bovi;

namespace {

struct MixedSpec {
    int cows = 6;
    int per_cow = 20;
    double b0 = 500.0;
    double b1 = 2.0;
    double sd_int = 5.0;
    double sd_slope = 0.5;
    double sd_noise = 1.0;
    unsigned seed = 0;
};

DesignMatrix gen_mixed(const MixedSpec& s) {
    std::mt19937 rng(s.seed);
    std::normal_distribution<double> gauss;
    DesignMatrix d;
    const int n = s.cows * s.per_cow;
    d.X.resize(n, 2);
    d.y.resize(n);
    d.time.resize(n);
    d.column_names = {"intercept", "x"};
    int r = 0;
    for (int c = 0; c < s.cows; ++c) {
        const double a = s.sd_int * gauss(rng);
        const double b = s.sd_slope * gauss(rng);
        for (int k = 0; k < s.per_cow; ++k, ++r) {
            const double x = gauss(rng);
            d.X(r, 0) = 1.0;
            d.X(r, 1) = x;
            d.time[r] = static_cast<double>(k);
            d.y[r] = s.b0 + s.b1 * x + a + b * k + s.sd_noise * gauss(rng);
            d.cow_ids.push_back("cow" + std::to_string(c));
            d.video_ids.push_back("v" + std::to_string(r));
            d.days.push_back(k / 2);
            d.periods.push_back(k % 2 ? Period::PM : Period::AM);
        }
    }
    return d;
}

Eigen::Matrix2d g_of(const LmmFit& fit) {
    Eigen::Matrix2d G;
    G << fit.var_intercept, fit.cov_int_slope, fit.cov_int_slope, fit.var_slope;
    return G;
}

} // namespace

TEST_SUITE("lmm") {

    TEST_CASE("input validation") {
        MixedSpec spec;
        DesignMatrix d = gen_mixed(spec);

        DesignMatrix unlabeled = d;
        unlabeled.cow_ids.clear();
        CHECK_THROWS_AS(fit_lmm(unlabeled), DimensionMismatch);

        DesignMatrix lonely = d;
        for (auto& cow : lonely.cow_ids) cow = "solo";
        CHECK_THROWS_AS(fit_lmm(lonely), TooFewGroups);

        DesignMatrix tiny = subset(d, {0, 1});
        CHECK_THROWS_AS(fit_lmm(tiny), RankDeficient);

        Eigen::Matrix2d G = Eigen::Matrix2d::Identity();
        CHECK_THROWS_AS(reml_loglik(d, G, 0.0), ConfigError);
        CHECK_THROWS_AS(reml_loglik(d, G, -1.0), ConfigError);
    }

    TEST_CASE("exact fixed-effect data is reproduced with null random effects") {
        std::mt19937 rng(21);
        std::normal_distribution<double> gauss;
        DesignMatrix d;
        const int n = 40;
        d.X.resize(n, 3);
        d.y.resize(n);
        d.time.resize(n);
        d.column_names = {"intercept", "x1", "x2"};
        Eigen::Vector3d beta(450.0, 3.5, -1.25);
        for (int i = 0; i < n; ++i) {
            d.X(i, 0) = 1.0;
            d.X(i, 1) = gauss(rng);
            d.X(i, 2) = gauss(rng);
            d.y[i] = d.X.row(i).dot(beta);
            d.time[i] = static_cast<double>(i % 10);
            d.cow_ids.push_back("cow" + std::to_string(i / 10));
        }

        const LmmFit fit = fit_lmm(d);
        CHECK((fit.beta - beta).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(fit.var_resid < 1e-8);
        CHECK((predict(fit, d) - d.y).cwiseAbs().maxCoeff() < 1e-6);
        for (const auto& [cow, b] : fit.blups) CHECK(b.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(fit.blups.size() == 4);
    }

    TEST_CASE("duplicated groups pin both variance components to the boundary") {
        DesignMatrix d;
        const int per = 12;
        d.X.resize(2 * per, 2);
        d.y.resize(2 * per);
        d.time.resize(2 * per);
        d.column_names = {"intercept", "x"};
        for (int c = 0; c < 2; ++c)
            for (int k = 0; k < per; ++k) {
                const int r = c * per + k;
                d.X(r, 0) = 1.0;
                d.X(r, 1) = static_cast<double>(k);
                d.time[r] = static_cast<double>(k);
                // same deterministic wiggle for both cows: zero between-group spread
                d.y[r] = 2.0 + 3.0 * k + std::sin(1.7 * k);
                d.cow_ids.push_back(c == 0 ? "a" : "b");
            }

        const LmmFit fit = fit_lmm(d);
        CHECK(fit.boundary_intercept);
        CHECK(fit.boundary_slope);
        CHECK(fit.var_intercept < 1e-3 * fit.var_resid);
        CHECK(fit.var_slope < 1e-3 * fit.var_resid);

        const FixedFit ols = fit_ols(d);
        CHECK((fit.beta - ols.beta).cwiseAbs().maxCoeff() < 1e-3);
        CHECK((predict(fit, d) - predict(ols, d)).cwiseAbs().maxCoeff() < 1e-2);
    }

    TEST_CASE("variance recovery on one simulated herd") {
        MixedSpec spec;
        spec.cows = 10;
        spec.per_cow = 30;
        spec.sd_int = 5.0;   // var 25
        spec.sd_slope = 0.5; // var 0.25
        spec.sd_noise = 1.0;
        spec.seed = 1234;
        const DesignMatrix d = gen_mixed(spec);
        const LmmFit fit = fit_lmm(d);

        CHECK(std::abs(fit.beta[0] - spec.b0) < 5.0);
        CHECK(std::abs(fit.beta[1] - spec.b1) < 0.1);
        CHECK(fit.var_intercept > 5.0);
        CHECK(fit.var_intercept < 120.0);
        CHECK(fit.var_slope > 0.05);
        CHECK(fit.var_slope < 1.2);
        CHECK(fit.var_resid > 0.7);
        CHECK(fit.var_resid < 1.4);
        CHECK_FALSE(fit.boundary_intercept);
        CHECK_FALSE(fit.boundary_slope);
        CHECK(fit.blups.size() == 10);

        // cow-specific corrections must beat the fixed part alone in-sample
        const Eigen::VectorXd with_blups = predict(fit, d);
        const Eigen::VectorXd fixed_only = d.X * fit.beta;
        CHECK((d.y - with_blups).norm() < (d.y - fixed_only).norm());
    }

    TEST_CASE("reported components reproduce the restricted log-likelihood") {
        MixedSpec spec;
        spec.seed = 77;
        const DesignMatrix d = gen_mixed(spec);
        const LmmFit fit = fit_lmm(d);
        REQUIRE(fit.var_resid > 0.0);
        const double ll = reml_loglik(d, g_of(fit), fit.var_resid);
        CHECK(ll == doctest::Approx(fit.loglik).epsilon(1e-8));
    }

    TEST_CASE("the fit is a local REML optimum") {
        MixedSpec spec;
        spec.cows = 8;
        spec.per_cow = 16;
        spec.seed = 99;
        const DesignMatrix d = gen_mixed(spec);
        const LmmFit fit = fit_lmm(d);
        const Eigen::Matrix2d G = g_of(fit);
        const double best = reml_loglik(d, G, fit.var_resid);

        for (double gs : {0.8, 1.25})
            for (double rs : {0.9, 1.0, 1.15}) {
                if (gs == 1.0 && rs == 1.0) continue;
                const double other = reml_loglik(d, gs * G, rs * fit.var_resid);
                CHECK(best >= other - 1e-5);
            }
    }

    TEST_CASE("reported components are invariant to affine time relabeling") {
        MixedSpec spec;
        spec.seed = 31;
        const DesignMatrix d = gen_mixed(spec);
        const LmmFit base = fit_lmm(d);

        const double a = 40.0, b = 7.0;
        DesignMatrix shifted = d;
        shifted.time = (a + b * d.time.array()).matrix();
        const LmmFit moved = fit_lmm(shifted);

        // the internal [0,1] rescaling makes the fit identical; only the
        // reported units change: G' = C G C' with C = [[1, -a/b], [0, 1/b]]
        Eigen::Matrix2d C;
        C << 1.0, -a / b, 0.0, 1.0 / b;
        const Eigen::Matrix2d want = C * g_of(base) * C.transpose();
        CHECK(moved.var_intercept == doctest::Approx(want(0, 0)).epsilon(1e-9));
        CHECK(moved.var_slope == doctest::Approx(want(1, 1)).epsilon(1e-9));
        CHECK(moved.cov_int_slope == doctest::Approx(want(0, 1)).epsilon(1e-9));
        CHECK(moved.loglik == doctest::Approx(base.loglik).epsilon(1e-12));
        CHECK(moved.var_resid == doctest::Approx(base.var_resid).epsilon(1e-12));
        CHECK((predict(moved, shifted) - predict(base, d)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((moved.beta - base.beta).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("prediction requires known cows") {
        MixedSpec spec;
        spec.seed = 5;
        const DesignMatrix d = gen_mixed(spec);
        const LmmFit fit = fit_lmm(d);

        DesignMatrix strangers = subset(d, {0, 1, 2});
        strangers.cow_ids = {"cow0", "newcomer", "cow1"};
        CHECK_THROWS_AS(predict(fit, strangers), UnknownCow);

        DesignMatrix unlabeled = subset(d, {0, 1});
        unlabeled.cow_ids.clear();
        CHECK_THROWS_AS(predict(fit, unlabeled), DimensionMismatch);
    }

    TEST_CASE("lmm models survive a save/load round trip") {
        test::TempDir dir("lmm");
        MixedSpec spec;
        spec.seed = 8;
        const DesignMatrix d = gen_mixed(spec);
        const LmmFit fit = fit_lmm(d);

        save_model(dir.path / "m.json", fit);
        const Model loaded = load_model(dir.path / "m.json");
        const auto* m = std::get_if<LmmFit>(&loaded);
        REQUIRE(m != nullptr);
        CHECK(m->beta == fit.beta);
        CHECK(m->var_intercept == fit.var_intercept);
        CHECK(m->var_slope == fit.var_slope);
        CHECK(m->cov_int_slope == fit.cov_int_slope);
        CHECK(m->var_resid == fit.var_resid);
        CHECK(m->loglik == fit.loglik);
        CHECK(m->boundary_intercept == fit.boundary_intercept);
        CHECK(m->boundary_slope == fit.boundary_slope);
        CHECK(m->column_names == fit.column_names);
        REQUIRE(m->blups.size() == fit.blups.size());
        for (const auto& [cow, b] : fit.blups) {
            REQUIRE(m->blups.count(cow) == 1);
            CHECK(m->blups.at(cow) == b);
        }
        CHECK((predict(loaded, d) - predict(fit, d)).cwiseAbs().maxCoeff() == 0.0);
    }

} // TEST_SUITE
