#pragma once

#include "bovi/biometrics.hpp"
#include "bovi/errors.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bovi {

enum class RegMethod { Ols, Ridge, Lasso, Lmm };

std::string to_string(RegMethod m);
RegMethod reg_method_from_string(const std::string& s);

/// Joined observations ready for fitting. X always carries the intercept in
/// column 0; `time` is the real-valued session index used by the mixed model.
struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> cow_ids;
    Eigen::VectorXd time;
    std::vector<std::string> column_names;

    // row tags carried along for split generation and reporting
    std::vector<std::string> video_ids;
    std::vector<int> days;
    std::vector<Period> periods;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

inline const std::vector<std::string> kDefaultPredictors = {
    "width_px", "length_px", "avg_height_m", "volume"};

/// Session ordinal used as the time covariate: two sessions per day.
double session_time(int day, Period period);

/// Assemble X/y from per-video features joined with their sessions.
/// Every row must carry a body weight.
DesignMatrix build_design(const std::vector<VideoFeatures>& features,
                          const std::vector<std::string>& predictors = kDefaultPredictors);

/// Rows of `d` selected by index, in the given order.
DesignMatrix subset(const DesignMatrix& d, const std::vector<int>& rows);

/// Per-column centering/scaling constants applied to the predictors during a
/// penalized fit (population standard deviation). Index 0 is the intercept
/// slot and stays (0, 1).
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

struct FixedFit {
    RegMethod method = RegMethod::Ols;
    Eigen::VectorXd beta; // original scale, aligned with DesignMatrix columns
    std::optional<double> lambda;
    Standardization standardization;
    std::vector<std::string> column_names;
};

struct LmmFit {
    Eigen::VectorXd beta;
    double var_intercept = 0.0;
    double var_slope = 0.0;
    double cov_int_slope = 0.0;
    double var_resid = 0.0;
    std::map<std::string, Eigen::Vector2d> blups; // cow -> (intercept, slope)
    double loglik = 0.0;
    bool boundary_intercept = false; // intercept variance pinned at zero
    bool boundary_slope = false;
    std::vector<std::string> column_names;
};

using Model = std::variant<FixedFit, LmmFit>;

/// Least squares via a rank-revealing QR decomposition.
FixedFit fit_ols(const DesignMatrix& d);

/// L2-penalized fit on standardized predictors with unpenalized intercept.
/// The objective is (1/2n)·RSS + (λ/2)·|β|², so an orthonormal standardized
/// design shrinks every slope by exactly 1/(1+λ).
FixedFit fit_ridge(const DesignMatrix& d, double lambda);

/// L1-penalized fit by cyclic coordinate descent on standardized predictors.
/// Objective (1/2n)·RSS + λ·|β|₁; converged when no coefficient moves more
/// than `tol` across a full cycle.
FixedFit fit_lasso(const DesignMatrix& d, double lambda, double tol = 1e-7,
                   int max_cycles = 10000);

/// Smallest λ that zeroes every LASSO slope: the largest absolute
/// covariance between a standardized predictor and the centered response.
double lambda_max(const DesignMatrix& d);

/// 50 log-spaced values from 1e-4·λ_max up to λ_max.
std::vector<double> default_lambda_grid(const DesignMatrix& d, int count = 50);

/// k-fold cross-validated λ choice: seeded shuffle, contiguous folds, mean
/// held-out RMSE, ties toward the larger (more regularized) λ.
double tune_lambda(const DesignMatrix& d, RegMethod method, const std::vector<double>& grid,
                   int k, unsigned seed);

/// Random intercept and slope per cow, variance components by REML. The time
/// axis is rescaled to [0,1] internally for conditioning; reported components
/// and BLUPs are in the units of `d.time`.
LmmFit fit_lmm(const DesignMatrix& d);

/// Restricted log-likelihood of the data at the given variance components
/// (original time units), with β profiled out by generalized least squares.
double reml_loglik(const DesignMatrix& d, const Eigen::Matrix2d& G, double var_resid);

Eigen::VectorXd predict(const FixedFit& fit, const DesignMatrix& d);
Eigen::VectorXd predict(const LmmFit& fit, const DesignMatrix& d);
Eigen::VectorXd predict(const Model& fit, const DesignMatrix& d);

/// Lossless structured dump of a fitted model.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

} // namespace bovi
