#pragma once

#include <Eigen/Dense>

namespace deeepc::linalg {

/// Number of singular values above rel_tol * sigma_max (0 for a zero matrix).
Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// Moore-Penrose pseudo-inverse with singular values below rel_tol * sigma_max dropped.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// Relative residual ||A g - b|| / ||b|| of the least-squares solution g.
double lstsq_relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Vertical concatenation that tolerates empty blocks.
Eigen::MatrixXd vstack(std::initializer_list<const Eigen::MatrixXd*> blocks);

/// Time window (rows = samples) flattened to [x_1; x_2; ...].
Eigen::VectorXd stack_rows(const Eigen::MatrixXd& rows);

} // namespace deeepc::linalg
