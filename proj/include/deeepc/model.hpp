#pragma once

#include "deeepc/cost_model.hpp"
#include "deeepc/mlp.hpp"
#include "deeepc/trajectory.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>

namespace deeepc {

/**
 * @brief Everything the controller needs from training: both liftings, their
 * input normalizers and the cost surrogate.
 *
 * Networks see normalized signals; the cost model sees their outputs.
 */
struct ModelBundle {
    LiftingNetwork output_net; // y -> z
    LiftingNetwork input_net;  // u -> v
    Normalizer y_norm;
    Normalizer u_norm;
    EconCostModel cost;
    /// Canonical JSON of the configuration that produced the bundle.
    std::string config_json = "{}";

    Eigen::Index n_y() const noexcept { return output_net.in_dim(); }
    Eigen::Index n_u() const noexcept { return input_net.in_dim(); }
    Eigen::Index n_z() const noexcept { return output_net.out_dim(); }
    Eigen::Index n_v() const noexcept { return input_net.out_dim(); }

    /// Rows = samples, raw units in, lifted coordinates out.
    Eigen::MatrixXd lift_outputs(const Eigen::MatrixXd& y) const;
    Eigen::MatrixXd lift_inputs(const Eigen::MatrixXd& u) const;

    /// Flat [output_net; input_net; cost] parameter vector.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);
    Eigen::Index parameter_count() const;

    /// Identity liftings with identity normalizers: the raw-signal surrogate.
    static ModelBundle raw(Eigen::Index n_y, Eigen::Index n_u, Eigen::Index n_c);

    void save(const std::filesystem::path& path) const;
    static ModelBundle load(const std::filesystem::path& path);

    /// Hex FNV-1a digest of config_json.
    std::string config_hash() const;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

} // namespace deeepc
