#include "bovi/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace bovi {

namespace {

// Per-cow sufficient statistics for the random intercept+slope model with
// Z_i = [1, t]. Everything downstream works on 2x2 / 2xp blocks, so the
// criterion never materializes an n_i x n_i covariance.
struct GroupStats {
    Eigen::Matrix2d W;                       // Z'Z
    Eigen::Matrix<double, 2, Eigen::Dynamic> U; // Z'X
    Eigen::Vector2d v;                       // Z'y
};

struct Pooled {
    std::vector<GroupStats> groups;
    std::vector<std::string> cow_order;
    Eigen::MatrixXd XtX;
    Eigen::VectorXd Xty;
    double yty = 0.0;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
};

Pooled pool_stats(const DesignMatrix& d, const Eigen::VectorXd& t) {
    Pooled s;
    s.n = d.n();
    s.p = d.p();
    s.XtX = d.X.transpose() * d.X;
    s.Xty = d.X.transpose() * d.y;
    s.yty = d.y.squaredNorm();

    std::map<std::string, std::size_t> index;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const std::string& cow = d.cow_ids[static_cast<std::size_t>(i)];
        auto it = index.find(cow);
        if (it == index.end()) {
            it = index.emplace(cow, s.groups.size()).first;
            s.cow_order.push_back(cow);
            GroupStats g;
            g.W.setZero();
            g.U.setZero(2, d.p());
            g.v.setZero();
            s.groups.push_back(g);
        }
        GroupStats& g = s.groups[it->second];
        Eigen::Vector2d z(1.0, t[i]);
        g.W += z * z.transpose();
        g.U += z * d.X.row(i);
        g.v += z * d.y[i];
    }
    return s;
}

struct CriterionParts {
    double logdet_vstar = 0.0; // sum of log|I + Delta W_i|
    double logdet_a = 0.0;     // log|X' V*^-1 X|
    double q = 0.0;            // GLS residual quadratic form
    Eigen::VectorXd beta;
    bool ok = false;
};

CriterionParts evaluate_parts(const Pooled& s, const Eigen::Matrix2d& delta) {
    CriterionParts out;
    Eigen::MatrixXd A = s.XtX;
    Eigen::VectorXd c = s.Xty;
    double quad = s.yty;

    for (const GroupStats& g : s.groups) {
        const Eigen::Matrix2d M = Eigen::Matrix2d::Identity() + delta * g.W;
        const double det = M.determinant();
        if (!(det > 0.0) || !std::isfinite(det)) return out;
        Eigen::Matrix2d K = M.inverse() * delta;
        K = 0.5 * (K + K.transpose()).eval();
        out.logdet_vstar += std::log(det);
        A.noalias() -= g.U.transpose() * K * g.U;
        c.noalias() -= g.U.transpose() * K * g.v;
        quad -= g.v.dot(K * g.v);
    }

    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return out;
    out.logdet_a = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    out.beta = llt.solve(c);
    out.q = quad - c.dot(out.beta);
    out.ok = std::isfinite(out.q) && out.beta.allFinite();
    return out;
}

Eigen::Matrix2d delta_from_theta(const Eigen::Vector3d& th) {
    Eigen::Matrix2d L;
    L << th[0], 0.0, th[1], th[2];
    return L * L.transpose();
}

// Profiled REML criterion: -2 log-lik up to an additive constant. The
// quadratic form is floored relative to the response scale; an exactly
// collinear response would otherwise push log(q) into cancellation noise
// and the search could never settle.
double criterion(const Pooled& s, const Eigen::Vector3d& th) {
    const CriterionParts parts = evaluate_parts(s, delta_from_theta(th));
    if (!parts.ok) return std::numeric_limits<double>::infinity();
    const double df = static_cast<double>(s.n - s.p);
    const double q = std::max(parts.q, 1e-10 * (s.yty + 1.0));
    return parts.logdet_vstar + parts.logdet_a + df * std::log(q);
}

// Deterministic Nelder-Mead over R^3; stops when the simplex f-spread falls
// under `tol` relative to the best value (the criterion carries an n-scaled
// log term, so an absolute test would chase rounding noise).
Eigen::Vector3d nelder_mead(const Pooled& s, Eigen::Vector3d x0, double tol, int max_iter,
                            bool& converged) {
    constexpr int kDim = 3;
    std::vector<Eigen::Vector3d> x(kDim + 1, x0);
    std::vector<double> f(kDim + 1);
    for (int j = 0; j < kDim; ++j) x[static_cast<std::size_t>(j + 1)][j] += 0.5;
    for (int j = 0; j <= kDim; ++j) f[static_cast<std::size_t>(j)] = criterion(s, x[static_cast<std::size_t>(j)]);

    auto order = [&] {
        std::vector<std::size_t> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        std::vector<Eigen::Vector3d> x2(kDim + 1);
        std::vector<double> f2(kDim + 1);
        for (int j = 0; j <= kDim; ++j) {
            x2[static_cast<std::size_t>(j)] = x[idx[static_cast<std::size_t>(j)]];
            f2[static_cast<std::size_t>(j)] = f[idx[static_cast<std::size_t>(j)]];
        }
        x.swap(x2);
        f.swap(f2);
    };

    converged = false;
    for (int it = 0; it < max_iter; ++it) {
        order();
        if (std::isfinite(f[0]) && f[kDim] - f[0] < tol * (1.0 + std::abs(f[0]))) {
            converged = true;
            break;
        }
        const Eigen::Vector3d centroid = (x[0] + x[1] + x[2]) / 3.0;
        const Eigen::Vector3d xr = centroid + (centroid - x[kDim]);
        const double fr = criterion(s, xr);
        if (fr < f[0]) {
            const Eigen::Vector3d xe = centroid + 2.0 * (centroid - x[kDim]);
            const double fe = criterion(s, xe);
            if (fe < fr) {
                x[kDim] = xe;
                f[kDim] = fe;
            } else {
                x[kDim] = xr;
                f[kDim] = fr;
            }
        } else if (fr < f[kDim - 1]) {
            x[kDim] = xr;
            f[kDim] = fr;
        } else {
            const bool outside = fr < f[kDim];
            const Eigen::Vector3d xc = outside
                                           ? Eigen::Vector3d(centroid + 0.5 * (xr - centroid))
                                           : Eigen::Vector3d(centroid - 0.5 * (centroid - x[kDim]));
            const double fc = criterion(s, xc);
            if (fc < (outside ? fr : f[kDim])) {
                x[kDim] = xc;
                f[kDim] = fc;
            } else {
                for (int j = 1; j <= kDim; ++j) {
                    x[static_cast<std::size_t>(j)] = x[0] + 0.5 * (x[static_cast<std::size_t>(j)] - x[0]);
                    f[static_cast<std::size_t>(j)] = criterion(s, x[static_cast<std::size_t>(j)]);
                }
            }
        }
    }
    order();
    return x[0];
}

} // namespace

LmmFit fit_lmm(const DesignMatrix& d) {
    const Eigen::Index n = d.n();
    const Eigen::Index p = d.p();
    if (d.cow_ids.size() != static_cast<std::size_t>(n))
        throw DimensionMismatch("design matrix has no cow labels");
    if (n <= p) throw RankDeficient("too few observations for REML");

    std::size_t distinct = 0;
    {
        std::map<std::string, int> seen;
        for (const auto& cow : d.cow_ids) seen[cow] = 1;
        distinct = seen.size();
    }
    if (distinct < 2) throw TooFewGroups("mixed model needs at least 2 cows");

    // condition the slope axis: time mapped onto [0,1]
    const double t_min = d.time.minCoeff();
    const double t_range = d.time.maxCoeff() - t_min;
    const double scale = t_range > 0.0 ? t_range : 1.0;
    const Eigen::VectorXd t_scaled = (d.time.array() - t_min) / scale;

    const Pooled s = pool_stats(d, t_scaled);

    bool converged = false;
    const Eigen::Vector3d theta = nelder_mead(s, Eigen::Vector3d(1.0, 0.0, 1.0), 1e-8, 5000, converged);
    if (!converged) throw NonConvergence("REML search did not converge");

    const Eigen::Matrix2d delta = delta_from_theta(theta);
    const CriterionParts parts = evaluate_parts(s, delta);
    if (!parts.ok) throw NonConvergence("REML criterion undefined at optimum");

    const double df = static_cast<double>(n - p);
    const double var_resid = std::max(parts.q, 0.0) / df;
    const Eigen::Matrix2d g_scaled = var_resid * delta;

    // back-transform random effects from scaled to original time units
    Eigen::Matrix2d bt;
    bt << 1.0, -t_min / scale, 0.0, 1.0 / scale;
    const Eigen::Matrix2d g_raw = bt * g_scaled * bt.transpose();

    LmmFit fit;
    fit.beta = parts.beta;
    fit.column_names = d.column_names;
    fit.var_intercept = g_raw(0, 0);
    fit.var_slope = g_raw(1, 1);
    fit.cov_int_slope = g_raw(0, 1);
    fit.var_resid = var_resid;

    const double log2pi = std::log(2.0 * std::acos(-1.0));
    const double safe_var = std::max(var_resid, 1e-300);
    fit.loglik = -0.5 * (df * log2pi + df * std::log(safe_var) + parts.logdet_vstar +
                         parts.logdet_a + df);

    // variance components at (or numerically indistinguishable from) zero
    fit.boundary_intercept = delta(0, 0) < 1e-4;
    fit.boundary_slope = delta(1, 1) < 1e-4;

    // BLUPs: b_i = Delta (I - W K) (Z'y - Z'X beta), then remap to raw time
    for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
        const GroupStats& g = s.groups[gi];
        const Eigen::Matrix2d M = Eigen::Matrix2d::Identity() + delta * g.W;
        const Eigen::Matrix2d K = M.inverse() * delta;
        const Eigen::Vector2d resid = g.v - g.U * parts.beta;
        const Eigen::Vector2d b_scaled = delta * (resid - g.W * (K * resid));
        fit.blups[s.cow_order[gi]] = bt * b_scaled;
    }
    return fit;
}

double reml_loglik(const DesignMatrix& d, const Eigen::Matrix2d& G, double var_resid) {
    if (!(var_resid > 0.0)) throw ConfigError("residual variance must be positive");
    const Eigen::Index n = d.n();
    const Eigen::Index p = d.p();
    if (n <= p) throw RankDeficient("too few observations for REML");

    const Pooled s = pool_stats(d, d.time);
    const Eigen::Matrix2d delta = G / var_resid;
    const CriterionParts parts = evaluate_parts(s, delta);
    if (!parts.ok) throw DegenerateInput("covariance parameters produce a singular model");

    const double df = static_cast<double>(n - p);
    const double log2pi = std::log(2.0 * std::acos(-1.0));
    return -0.5 * (df * log2pi + df * std::log(var_resid) + parts.logdet_vstar +
                   parts.logdet_a + parts.q / var_resid);
}

} // namespace bovi
