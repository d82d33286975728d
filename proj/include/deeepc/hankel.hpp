#pragma once

#include "deeepc/trajectory.hpp"

#include <Eigen/Dense>

#include <optional>

namespace deeepc {

/**
 * @brief Block-Hankel matrix of depth L built from a sampled signal.
 *
 * Column j (0-based) stacks samples j .. j+L-1. The entries are copies of the
 * source samples, so block(i, j) == block(i-1, j+1) holds exactly.
 */
struct HankelMatrix {
    Eigen::MatrixXd data;
    Eigen::Index depth = 0;
    Eigen::Index signal_dim = 0;

    Eigen::Index columns() const noexcept { return data.cols(); }
    /// signal_dim x 1 block at block-row i, column j.
    Eigen::VectorXd block(Eigen::Index i, Eigen::Index j) const { return data.block(i * signal_dim, j, signal_dim, 1); }
};

HankelMatrix build_hankel(const Eigen::MatrixXd& samples, Eigen::Index depth);
HankelMatrix build_hankel(const Trajectory& t, Eigen::Index depth);

/**
 * Adjoint of build_hankel: scatters a gradient with respect to the Hankel
 * entries back onto the `length` x signal_dim samples it was built from.
 */
Eigen::MatrixXd hankel_adjoint(const Eigen::MatrixXd& grad, Eigen::Index depth, Eigen::Index signal_dim,
                               Eigen::Index length);

struct ExcitationReport {
    bool exciting = false;
    Eigen::Index rank = 0;
};

inline constexpr double kRankTolerance = 1e-10;

ExcitationReport is_persistently_exciting(const Eigen::MatrixXd& samples, Eigen::Index order);
ExcitationReport is_persistently_exciting(const Trajectory& t, Eigen::Index order);

/// Past/future partitions in the order used by the predictive-control equality system.
struct HankelPartition {
    Eigen::MatrixXd up, vp, zp, uf, vf, zf;

    Eigen::Index columns() const noexcept { return up.cols(); }
    Eigen::MatrixXd stacked() const;
};

struct HankelReduction {
    /// Column-orthonormal Q_r with stacked_full ~= stacked_reduced * basis^T.
    Eigen::MatrixXd basis;
    Eigen::VectorXd singular_values;
    Eigen::Index rank = 0;
    HankelPartition blocks;
};

struct HankelBlocks {
    HankelPartition full;
    std::optional<HankelReduction> reduced;
    Eigen::Index t_ini = 0;
    Eigen::Index n_p = 0;
    Eigen::Index n_u = 0;
    Eigen::Index n_v = 0;
    Eigen::Index n_z = 0;

    /// Blocks the controller optimizes over: reduced when available.
    const HankelPartition& active() const noexcept { return reduced ? reduced->blocks : full; }
    /// Dimension of the operator g the controller solves for.
    Eigen::Index operator_dim() const noexcept { return active().columns(); }
};

/**
 * Hankel matrices of depth T_ini + N_p for u, v and z, split into the first
 * T_ini block-rows (past) and the last N_p block-rows (future). `v` may have
 * zero columns (raw-signal DeePC has no mapped input).
 */
HankelBlocks partition(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, const Eigen::MatrixXd& z, Eigen::Index t_ini,
                       Eigen::Index n_p);

inline constexpr double kDefaultReductionTolerance = 1e-8;

/**
 * SVD column-space reduction of the stacked matrix M = W S Q^T: the reduced
 * stacked matrix is W_r S_r with r = #{s_i > tol * s_1}. tol = 0 keeps the
 * numerical rank.
 */
HankelBlocks reduce_svd(const HankelBlocks& b, double tol = kDefaultReductionTolerance);

} // namespace deeepc
