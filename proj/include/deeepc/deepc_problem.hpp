#pragma once

#include "deeepc/cost_model.hpp"
#include "deeepc/hankel.hpp"
#include "deeepc/qp.hpp"

#include <Eigen/Dense>

namespace deeepc {

/// Initialization windows, rows = the last T_ini samples in time order.
struct IniWindows {
    Eigen::MatrixXd u;
    Eigen::MatrixXd v;
    Eigen::MatrixXd z;
};

struct DeepcWeights {
    double lambda = 1.0;
    /// Input-move weight (n_u x n_u). Empty means zero.
    Eigen::MatrixXd r;
    double beta_z = 5e10;
    double beta_g = 1e-8;
    /// Drop the slack and enforce Z_p g = z_ini exactly.
    bool no_slack = false;
};

/// lo <= A y^c <= hi applied to every predicted step; an empty A means no output constraint.
struct OutputPolytope {
    Eigen::MatrixXd a;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static OutputPolytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
};

struct DeepcBounds {
    Eigen::VectorXd u_lb;
    Eigen::VectorXd u_ub;
    OutputPolytope yc;
};

/// Reference-tracking objective: ||z_hat - z_ref||_T^2 + ||u_hat - u_ref||_R^2 over the horizon.
struct TrackingRefs {
    /// N_p x n_z and N_p x n_u, rows = horizon steps.
    Eigen::MatrixXd z_ref;
    Eigen::MatrixXd u_ref;
    Eigen::MatrixXd t;
    Eigen::MatrixXd r;
};

/// Where the pieces of the decision vector [g; sigma] live.
struct DeepcLayout {
    Eigen::Index n_g = 0;
    Eigen::Index n_slack = 0;
    Eigen::Index slack_offset() const noexcept { return n_g; }
    Eigen::Index dim() const noexcept { return n_g + n_slack; }
};

struct DeepcQp {
    QpProblem problem;
    DeepcLayout layout;
};

/**
 * Economic predictive-control QP over the active (possibly reduced) Hankel
 * blocks. Objective: lambda * surrogate cost of z_hat = Z_f g, v_hat = V_f g
 * summed over the horizon, plus input moves weighted by R (the first move is
 * taken against the last u_ini row), beta_z ||sigma||^2 and beta_g ||g||^2.
 * Equalities U_p g = u_ini, V_p g = v_ini, Z_p g - sigma = z_ini; the input
 * box applies to U_f g and the output polytope to G z_hat at every step.
 */
DeepcQp assemble_deeepc(const HankelBlocks& blocks, const EconCostModel& model, const IniWindows& ini,
                        const DeepcWeights& weights, const DeepcBounds& bounds);

/**
 * Tracking QP on the same block structure. `output_map` takes a predicted
 * z (or raw y) step to the constrained outputs. lambda and R in `weights`
 * are unused; the tracking weights come from `refs`.
 */
DeepcQp assemble_tracking(const HankelBlocks& blocks, const TrackingRefs& refs, const Eigen::MatrixXd& output_map,
                          const IniWindows& ini, const DeepcWeights& weights, const DeepcBounds& bounds);

struct InputPlan {
    /// N_p x n_u; row 0 is the input to apply.
    Eigen::MatrixXd sequence;
    Eigen::VectorXd first() const { return sequence.row(0).transpose(); }
};

/// u_hat = U_f g. Accepts g alone or the full decision vector [g; sigma].
InputPlan extract_input(const HankelBlocks& blocks, const Eigen::VectorXd& g_star);

/// Predicted mapped outputs Z_f g, N_p x n_z.
Eigen::MatrixXd predicted_outputs(const HankelBlocks& blocks, const Eigen::VectorXd& g_star);

} // namespace deeepc
