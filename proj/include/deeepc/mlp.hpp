#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace deeepc {

struct DenseLayer {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
};

/// Intermediate values of a batched forward pass, consumed by backward().
struct ForwardCache {
    /// Input to each layer (rows = batch).
    std::vector<Eigen::MatrixXd> inputs;
    /// Pre-activation of each layer.
    std::vector<Eigen::MatrixXd> pre;
    Eigen::MatrixXd output;
};

struct BackwardResult {
    /// Same layout as LiftingNetwork::parameters().
    Eigen::VectorXd params;
    Eigen::MatrixXd input;
};

/**
 * @brief Feed-forward network used for the output and input liftings.
 *
 * ReLU on hidden layers, identity on the output layer. Rows of a batch are
 * evaluated independently; no operation reduces across rows except the
 * parameter-gradient sums in backward(), which run in a fixed order.
 */
class LiftingNetwork {
public:
    LiftingNetwork() = default;
    explicit LiftingNetwork(std::vector<DenseLayer> layers, std::uint64_t seed = 0);

    /// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
    static LiftingNetwork make(Eigen::Index in_dim, const std::vector<Eigen::Index>& hidden, Eigen::Index out_dim,
                               std::uint64_t seed);
    /// Single linear layer with W = I, b = 0.
    static LiftingNetwork identity(Eigen::Index dim);

    Eigen::Index in_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
    Eigen::Index out_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().weight.rows(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<Eigen::Index> hidden_widths() const;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    ForwardCache forward_cached(const Eigen::MatrixXd& x) const;

    /// Gradients of <upstream, forward(x)> with respect to parameters and x.
    BackwardResult backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream) const;
    BackwardResult backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& upstream) const;

    Eigen::Index parameter_count() const;
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);
    /// Splits a flat vector (parameters or gradients) into per-layer shapes.
    std::vector<DenseLayer> unpack(const Eigen::VectorXd& flat) const;

    void write(std::ostream& out) const;
    static LiftingNetwork read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static LiftingNetwork load(const std::filesystem::path& path);

    bool operator==(const LiftingNetwork& other) const;

private:
    void validate() const;

    std::vector<DenseLayer> layers_;
    std::uint64_t seed_ = 0;
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(Eigen::Index n);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr);

} // namespace deeepc
