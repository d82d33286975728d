#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace deeepc {

/**
 * @brief Dense convex QP
 *
 *   min 1/2 x'Hx + f'x + constant
 *   s.t. Aeq x = beq,  lb_in <= Ain x <= ub_in,  var_lb <= x <= var_ub.
 *
 * Infinite bounds are ignored. Empty var_lb / var_ub mean "unbounded".
 */
struct QpProblem {
    Eigen::MatrixXd h;
    Eigen::VectorXd f;
    double constant = 0.0;
    Eigen::MatrixXd aeq;
    Eigen::VectorXd beq;
    Eigen::MatrixXd ain;
    Eigen::VectorXd lb_in;
    Eigen::VectorXd ub_in;
    Eigen::VectorXd var_lb;
    Eigen::VectorXd var_ub;

    Eigen::Index dim() const noexcept { return f.size(); }
    double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(h * x) + f.dot(x) + constant; }
    /// Throws DimensionMismatch / InvalidConfig on inconsistent data.
    void validate() const;
};

enum class QpStatus { Optimal, MaxIter, Infeasible };

std::string_view to_string(QpStatus s);

/**
 * Residuals of the KKT conditions at the returned iterate. Stationarity and
 * primal feasibility are infinity norms relative to the size of the terms
 * involved; complementarity is mean(s_i z_i) relative to max(1, |objective|).
 */
struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double complementarity = 0.0;

    double max() const noexcept;
};

struct QpSolution {
    Eigen::VectorXd x;
    QpStatus status = QpStatus::MaxIter;
    KktResiduals kkt;
    double objective = 0.0;
    int iterations = 0;
    double wall_ms = 0.0;
    /// Set for equality-system infeasibility: Aeq' w = 0 and w' beq > 0.
    Eigen::VectorXd certificate;
};

struct QpOptions {
    double tol = 1e-8;
    int max_iter = 100;
};

/**
 * Mehrotra predictor-corrector interior-point method. Throws NotPSD when the
 * Hessian is not symmetric positive semidefinite; infeasibility and iteration
 * exhaustion are reported through QpSolution::status.
 */
QpSolution solve(const QpProblem& p, const QpOptions& opts = {});

/// Attempted Cholesky of H + 1e-10 * max(1, max|H_ii|) I after a symmetry check.
bool is_psd(const Eigen::MatrixXd& h);

} // namespace deeepc
