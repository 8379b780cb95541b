#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stereokin {

struct LMOptions {
    std::size_t max_iterations = 200;
    double gradient_tol = 1e-10;  // on the max-norm of J^T r
    double cost_tol = 1e-14;      // relative cost decrease per accepted step
    double step_tol = 1e-14;      // relative parameter step
    double fd_rel_step = 1e-6;    // forward-difference step, relative to max(|x|, 1)
    double lambda_init = 1e-3;
    std::vector<double> lower;    // optional box bounds, empty = unbounded
    std::vector<double> upper;
};

struct FitResult {
    Eigen::VectorXd parameters;
    Eigen::MatrixXd covariance;       // inv(J^T J) * reduced_chi2 (pseudo-inverse if singular)
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t dof = 0;
    std::size_t iterations = 0;
    std::size_t residual_evals = 0;
    double gradient_norm = std::numeric_limits<double>::infinity();
    double condition_number = 0.0;    // of J^T J at the solution
    bool converged = false;
    bool rank_deficient = false;
    std::vector<double> cost_history; // cost after each accepted step
    std::string message;

    double stderr_of(int i) const { return std::sqrt(std::max(covariance(i, i), 0.0)); }
};

namespace detail {

template <class F>
Eigen::MatrixXd forward_jacobian(F&& residual, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0, double rel_step,
                                 std::size_t& evals) {
    const Eigen::Index m = r0.size(), p = x.size();
    Eigen::MatrixXd jac(m, p);
    Eigen::VectorXd xs = x;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double h = rel_step * std::max(std::abs(x[j]), 1.0);
        xs[j] = x[j] + h;
        const Eigen::VectorXd rj = residual(xs);
        ++evals;
        if (rj.size() != m) throw std::invalid_argument("levenberg_marquardt: residual size changed");
        jac.col(j) = (rj - r0) / h;
        xs[j] = x[j];
    }
    return jac;
}

inline void clamp_to_bounds(Eigen::VectorXd& x, const LMOptions& opt) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!opt.lower.empty()) x[j] = std::max(x[j], opt.lower[static_cast<std::size_t>(j)]);
        if (!opt.upper.empty()) x[j] = std::min(x[j], opt.upper[static_cast<std::size_t>(j)]);
    }
}

}  // namespace detail

/// Levenberg-Marquardt minimizer of |r(x)|^2 for a residual functor
/// r: VectorXd -> VectorXd (weights folded into the residuals by the caller).
/// Forward-difference Jacobian; damped normal equations with diagonal
/// Marquardt scaling; monotone acceptance. The covariance of the estimates is
/// inv(J^T J) scaled by the reduced chi-square; a singular normal matrix is
/// reported through rank_deficient and the condition number rather than a
/// throw, so unidentifiable directions surface as exploding variances.
template <class F>
FitResult levenberg_marquardt(F&& residual, const Eigen::VectorXd& x0, const LMOptions& opt = {}) {
    if (!opt.lower.empty() && opt.lower.size() != static_cast<std::size_t>(x0.size()))
        throw std::invalid_argument("levenberg_marquardt: lower bound size mismatch");
    if (!opt.upper.empty() && opt.upper.size() != static_cast<std::size_t>(x0.size()))
        throw std::invalid_argument("levenberg_marquardt: upper bound size mismatch");

    FitResult res;
    Eigen::VectorXd x = x0;
    detail::clamp_to_bounds(x, opt);

    Eigen::VectorXd r = residual(x);
    res.residual_evals = 1;
    const Eigen::Index m = r.size(), p = x.size();
    if (m < p)
        throw std::invalid_argument("levenberg_marquardt: fewer residuals than parameters");

    double cost = r.squaredNorm();
    res.cost_history.push_back(cost);

    double lambda = opt.lambda_init;
    Eigen::MatrixXd jac = detail::forward_jacobian(residual, x, r, opt.fd_rel_step,
                                                   res.residual_evals);
    bool jac_fresh = true;

    while (res.iterations < opt.max_iterations) {
        ++res.iterations;
        if (!jac_fresh) {
            jac = detail::forward_jacobian(residual, x, r, opt.fd_rel_step, res.residual_evals);
            jac_fresh = true;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        res.gradient_norm = grad.lpNorm<Eigen::Infinity>();
        if (res.gradient_norm < opt.gradient_tol) {
            res.converged = true;
            res.message = "gradient below tolerance";
            break;
        }

        // Marquardt diagonal scaling; floor protects identically-zero columns.
        Eigen::VectorXd diag = jtj.diagonal();
        const double dmax = diag.maxCoeff();
        const double dfloor = dmax > 0.0 ? dmax * 1e-14 : 1.0;
        for (Eigen::Index j = 0; j < p; ++j) diag[j] = std::max(diag[j], dfloor);

        bool accepted = false;
        for (int tries = 0; tries < 30 && !accepted; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            Eigen::VectorXd step = a.ldlt().solve(-grad);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd xn = x + step;
            detail::clamp_to_bounds(xn, opt);
            const Eigen::VectorXd rn = residual(xn);
            ++res.residual_evals;
            const double cn = rn.squaredNorm();
            if (cn < cost) {
                const double rel_drop = (cost - cn) / std::max(cost, 1e-300);
                const double rel_step = (xn - x).norm() / std::max(x.norm(), 1.0);
                x = xn;
                r = rn;
                cost = cn;
                res.cost_history.push_back(cost);
                lambda = std::max(lambda * 0.3, 1e-12);
                jac_fresh = false;
                accepted = true;
                if (rel_drop < opt.cost_tol) {
                    res.converged = true;
                    res.message = "cost decrease below tolerance";
                }
                if (rel_step < opt.step_tol) {
                    res.converged = true;
                    res.message = "step below tolerance";
                }
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) {
            res.converged = true;  // no downhill direction left at machine scale
            res.message = "no acceptable step (local minimum at resolution limit)";
            break;
        }
        if (res.converged) break;
    }
    if (!res.converged && res.message.empty())
        res.message = "max iterations reached";

    // final Jacobian for the covariance
    jac = detail::forward_jacobian(residual, x, r, opt.fd_rel_step, res.residual_evals);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    res.gradient_norm = (jac.transpose() * r).lpNorm<Eigen::Infinity>();

    res.parameters = x;
    res.chi2 = cost;
    res.dof = static_cast<std::size_t>(m > p ? m - p : 1);
    res.reduced_chi2 = res.chi2 / static_cast<double>(res.dof);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    const double smin = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
    res.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    const double cutoff = smax * 1e-14;
    Eigen::VectorXd inv_sv(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cutoff) {
            inv_sv[i] = 1.0 / sv[i];
        } else {
            inv_sv[i] = 0.0;
            res.rank_deficient = true;
        }
    }
    res.covariance = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose() *
                     res.reduced_chi2;
    return res;
}

}  // namespace stereokin
