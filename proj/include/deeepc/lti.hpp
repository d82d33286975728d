#pragma once

#include "deeepc/trajectory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace deeepc {

/// Discrete-time x+ = A x + B u, y = C x + D u.
class LtiSystem {
public:
    LtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c, Eigen::MatrixXd d, bool controllable = false);

    const Eigen::MatrixXd& a() const noexcept { return a_; }
    const Eigen::MatrixXd& b() const noexcept { return b_; }
    const Eigen::MatrixXd& c() const noexcept { return c_; }
    const Eigen::MatrixXd& d() const noexcept { return d_; }

    Eigen::Index n_x() const noexcept { return a_.rows(); }
    Eigen::Index n_u() const noexcept { return b_.cols(); }
    Eigen::Index n_y() const noexcept { return c_.rows(); }

    Eigen::MatrixXd controllability_matrix() const;
    bool is_controllable() const;

    /// [C; CA; ...; CA^{L-1}]
    Eigen::MatrixXd observability_matrix(Eigen::Index depth) const;
    /// Block lower-triangular Toeplitz map from stacked inputs to stacked outputs (zero initial state).
    Eigen::MatrixXd toeplitz(Eigen::Index depth) const;

private:
    Eigen::MatrixXd a_, b_, c_, d_;
};

struct SimulationResult {
    /// x_0 .. x_T (T+1 rows).
    Eigen::MatrixXd x;
    /// y_0 .. y_{T-1}, y_k = C x_k + D u_k.
    Eigen::MatrixXd y;
};

SimulationResult simulate(const LtiSystem& sys, const Eigen::VectorXd& x0, const Eigen::MatrixXd& u);

/// Gaussian entries, A rescaled to spectral radius 0.9. Redraws until controllable.
LtiSystem random_lti(Eigen::Index n_x, Eigen::Index n_u, Eigen::Index n_y, std::mt19937_64& rng);

struct LemmaReport {
    double max_residual = 0.0;
    double mean_residual = 0.0;
    Eigen::Index min_pe_rank = 0;
    Eigen::Index required_rank = 0;
    Eigen::Index trials = 0;
    /// True when the data input was not persistently exciting of order L + n_x.
    bool refused = false;
};

/**
 * Checks that fresh L-step trajectories of `sys` lie in the column space of
 * [H_L(u_d); H_L(y_d)] built from T data samples, reporting relative
 * least-squares residuals. The data input is redrawn until it is
 * persistently exciting of order L + n_x.
 */
LemmaReport verify_fundamental_lemma(const LtiSystem& sys, Eigen::Index t, Eigen::Index depth, Eigen::Index trials,
                                     std::uint64_t seed);

/// Same check against a caller-supplied data input; refuses when it is not exciting enough.
LemmaReport verify_fundamental_lemma(const LtiSystem& sys, const Eigen::MatrixXd& u_data, Eigen::Index depth,
                                     Eigen::Index trials, std::uint64_t seed);

/**
 * Relative residual of the best initial state explaining (u_L, y_L):
 * min_x0 ||O_L x0 + T_L u_L - y_L|| / ||y_L||.
 */
double initial_state_residual(const LtiSystem& sys, const Eigen::VectorXd& u_stacked, const Eigen::VectorXd& y_stacked);

} // namespace deeepc
