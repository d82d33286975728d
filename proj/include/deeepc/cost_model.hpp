#pragma once

#include <Eigen/Dense>

#include <iosfwd>

namespace deeepc {

/**
 * @brief Quadratic economic-cost surrogate on mapped outputs z and mapped inputs v.
 *
 *   c_hat = z' Q_z z + P_z z + b_z + v' Q_v v + P_v v + b_v,
 *   Q_z = diag(exp(q_z)), Q_v = diag(exp(q_v)),
 *
 * together with the reconstruction y^c_hat = G z of the constrained outputs.
 * The quadratic weights are kept as diagonals; they are never densified.
 */
struct EconCostModel {
    Eigen::VectorXd q_z;
    Eigen::VectorXd p_z;
    double b_z = 0.0;
    Eigen::VectorXd q_v;
    Eigen::VectorXd p_v;
    double b_v = 0.0;
    Eigen::MatrixXd g; // n_c x n_z

    /// q = 0, P = 0, b = 0, G = 0.
    static EconCostModel zeros(Eigen::Index n_z, Eigen::Index n_v, Eigen::Index n_c);

    Eigen::Index n_z() const noexcept { return q_z.size(); }
    Eigen::Index n_v() const noexcept { return q_v.size(); }
    Eigen::Index n_c() const noexcept { return g.rows(); }

    Eigen::VectorXd qz_diag() const { return q_z.array().exp(); }
    Eigen::VectorXd qv_diag() const { return q_v.array().exp(); }

    /// Layout: q_z, P_z, b_z, q_v, P_v, b_v, G (column-major).
    Eigen::Index parameter_count() const;
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);

    void validate() const;

    void write(std::ostream& out) const;
    static EconCostModel read(std::istream& in);
};

struct CostEval {
    double value = 0.0;
    Eigen::VectorXd grad_z;
    Eigen::VectorXd grad_v;
};

CostEval eval_cost(const EconCostModel& m, const Eigen::VectorXd& z, const Eigen::VectorXd& v);

/// Row-wise c_hat for batches (rows = samples).
Eigen::VectorXd eval_cost_batch(const EconCostModel& m, const Eigen::MatrixXd& z, const Eigen::MatrixXd& v);

struct CostBackward {
    Eigen::VectorXd params; // same layout as EconCostModel::parameters()
    Eigen::MatrixXd z;
    Eigen::MatrixXd v;
};

/// Gradients of sum_i w_i c_hat_i with respect to the cost parameters, z and v.
CostBackward cost_backward(const EconCostModel& m, const Eigen::MatrixXd& z, const Eigen::MatrixXd& v,
                           const Eigen::VectorXd& weights);

Eigen::VectorXd reconstruct_output(const EconCostModel& m, const Eigen::VectorXd& z);
Eigen::MatrixXd reconstruct_output_batch(const EconCostModel& m, const Eigen::MatrixXd& z);

/**
 * Horizon-stacked surrogate for variables w = [z_1; ...; z_Np; v_1; ...; v_Np]:
 *   value(w) = w' diag(quad) w + linear' w + constant,
 * i.e. lambda times the per-step surrogate summed over the horizon.
 */
struct HorizonCost {
    Eigen::VectorXd quad_z;
    Eigen::VectorXd quad_v;
    Eigen::VectorXd linear_z;
    Eigen::VectorXd linear_v;
    double constant = 0.0;

    double evaluate(const Eigen::VectorXd& z_stacked, const Eigen::VectorXd& v_stacked) const;
};

HorizonCost quad_form_matrices(const EconCostModel& m, Eigen::Index n_p, double lambda);

} // namespace deeepc
