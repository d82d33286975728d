#pragma once

#include "deeepc/model.hpp"
#include "deeepc/trajectory.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace deeepc {

struct TrainConfig {
    /// Weights of the economic, reconstruction, lifted-output and lifted-input terms.
    std::array<double, 4> alphas{1.0, 1.0, 1.0, 1.0};
    /// Rescale each alpha by the inverse of its term at the initial parameters.
    bool auto_balance = true;
    Eigen::Index batch_size = 128;
    Eigen::Index epochs = 100;
    double lr_nets = 1e-4;
    double lr_cost = 1e-3;
    std::uint64_t seed = 42;
    Eigen::Index t_ini = 2;
    Eigen::Index n_p = 2;
    Eigen::Index n_z = 8;
    Eigen::Index n_v = 4;
    std::vector<Eigen::Index> hidden{128, 256};
    /// Trailing fraction of the training rows held out for reporting.
    double holdout_fraction = 0.1;
    /// Keep both liftings fixed (the raw-signal surrogate).
    bool freeze_nets = false;

    void validate() const;
};

struct EpochLosses {
    double total = 0.0;
    double economic = 0.0;
    double reconstruction = 0.0;
    double lifted_output = 0.0;
    double lifted_input = 0.0;
};

struct TrainReport {
    /// Entry 0 is the initial model, entry k the model after epoch k.
    std::vector<EpochLosses> epochs;
    std::array<double, 4> alphas{};
    double holdout_mse = 0.0;
    double holdout_r2 = 0.0;
    /// Holdout MSE divided by the holdout cost variance.
    double holdout_normalized_mse = 0.0;
    bool willems_rank_deficient = false;
    /// The final epoch was worse than the initial model and the best epoch was kept instead.
    bool reverted_to_best = false;
    std::vector<std::string> warnings;
};

/**
 * Matrices derived once from a dataset: normalized network inputs for the
 * fitting and holdout rows and the factored least-squares map that predicts
 * the training windows from the Hankel split.
 */
struct TrainingData {
    Eigen::MatrixXd y_fit, u_fit; // normalized
    Eigen::VectorXd c_fit;
    Eigen::MatrixXd yc_fit;
    Eigen::MatrixXd y_hold, u_hold;
    Eigen::VectorXd c_hold;
    Eigen::MatrixXd yc_hold;
    Eigen::MatrixXd y_hankel, u_hankel; // normalized
    Eigen::Index depth = 0;
    /// pinv(H_L(u_hankel raw)) H_L(u_fit raw) = basis * coeffs.
    Eigen::MatrixXd willems_basis;
    Eigen::MatrixXd willems_coeffs;
    bool rank_deficient = false;
};

TrainingData prepare_training_data(const Dataset& d, const Normalizer& y_norm, const Normalizer& u_norm,
                                   Eigen::Index depth, double holdout_fraction);

/// Mean over rows of (c - c_hat)^2.
double loss_economic(const ModelBundle& m, const Eigen::MatrixXd& y_norm, const Eigen::MatrixXd& u_norm,
                     const Eigen::VectorXd& c);

/// Mean over rows of ||y^c - G z||^2.
double loss_reconstruction(const ModelBundle& m, const Eigen::MatrixXd& y_norm, const Eigen::MatrixXd& yc);

struct WillemsLosses {
    double z = 0.0;
    double v = 0.0;
};

/**
 * Mean over training windows of ||w_L - H_L(w_hankel) pinv(H_L(u_hankel)) u_L||^2
 * for the lifted outputs (w = z) and lifted inputs (w = v).
 */
WillemsLosses loss_willems(const ModelBundle& m, const TrainingData& data);

/// Same quantity for explicitly given lifted trajectories (rows = samples).
double willems_residual(const Eigen::MatrixXd& w_hankel, const Eigen::MatrixXd& w_windows, const TrainingData& data);

struct CompositeEval {
    EpochLosses losses;
    /// Gradient of the weighted total with respect to ModelBundle::parameters().
    Eigen::VectorXd grad;
};

CompositeEval evaluate_composite(const ModelBundle& m, const TrainingData& data, const std::array<double, 4>& alphas,
                                 bool with_grad);

/// Fresh networks (seeded), q = 0, P = 0, b_z = mean(c), b_v = 0, G by least squares on the initial z.
ModelBundle initial_model(const Dataset& d, const TrainConfig& cfg);

struct TrainResult {
    ModelBundle model;
    TrainReport report;
};

using EpochCallback = std::function<void(Eigen::Index epoch, const EpochLosses&)>;

TrainResult train(const Dataset& d, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Continues from a given model (used for the raw-signal surrogate and for tests).
TrainResult train_from(ModelBundle model, const Dataset& d, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/**
 * Quadratic surrogate on raw outputs and inputs: identity liftings, a
 * least-squares warm start projected onto positive quadratic weights, then
 * gradient refinement of the cost parameters only.
 */
TrainResult fit_raw_surrogate(const Dataset& d, const TrainConfig& cfg);

/// Writes the per-epoch losses as CSV.
void write_train_report_csv(const std::filesystem::path& path, const TrainReport& r);

} // namespace deeepc
