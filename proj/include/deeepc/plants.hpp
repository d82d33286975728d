#pragma once

#include "deeepc/error.hpp"
#include "deeepc/hankel.hpp"
#include "deeepc/trajectory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace deeepc {

enum class PlantModel {
    Cstr,     ///< dimensionless nonisothermal CSTR, heat input
    TwoTank,  ///< cascaded tanks with square-root outflow, pump input
    Lti,      ///< exact discrete linear system with quadratic cost
    Static,   ///< x+ = x, zero cost; used in tests
};

struct DisturbanceSpec {
    /// Gaussian std as a fraction of |x_ref|, per state.
    double std_frac = 1e-3;
    /// Samples are clipped to +-bound_frac * |x_ref|.
    double bound_frac = 0.1;
};

struct PidSpec {
    Eigen::Index output = 0;
    double setpoint = 0.0;
    double kp = 0.0;
    double ki = 0.0;
    Eigen::VectorXd u0;
};

struct OpenLoopSchedule {
    Eigen::Index hold = 5;
    /// Level range; empty means the input box.
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    double noise_std = 0.0;
};

/**
 * @brief Static description of a benchmark plant.
 *
 * Outputs are y = C x measured after each step; the stage cost is
 * l_y(y) + l_u(u) with no coupling between the two.
 */
struct PlantSpec {
    std::string name;
    PlantModel model = PlantModel::Static;
    Eigen::Index n_x = 0;
    Eigen::VectorXd u_lb;
    Eigen::VectorXd u_ub;
    Eigen::MatrixXd c;
    double dt = 1.0;
    Eigen::VectorXd x0;
    /// Scale for disturbances; defaults to x0.
    Eigen::VectorXd x_ref;
    DisturbanceSpec disturbance;
    std::uint64_t noise_seed = 1;
    std::map<std::string, double> params;
    /// Linear model data (Lti only).
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    /// Quadratic cost data (Lti only): sum w_y (y - y_ref)^2 + sum w_u u^2.
    Eigen::VectorXd y_ref;
    Eigen::VectorXd w_y;
    Eigen::VectorXd w_u;

    /// Constrained outputs y^c = y[yc_index], kept within [yc_lb, yc_ub].
    std::vector<Eigen::Index> yc_index;
    Eigen::VectorXd yc_lb;
    Eigen::VectorXd yc_ub;

    PidSpec pid;
    /// Steady pair used by the tracking controller.
    Eigen::VectorXd track_y;
    Eigen::VectorXd track_u;
    OpenLoopSchedule schedule;

    Eigen::Index n_u() const noexcept { return u_lb.size(); }
    Eigen::Index n_y() const noexcept { return c.rows(); }

    double output_cost(const Eigen::VectorXd& y) const;
    double input_cost(const Eigen::VectorXd& u) const;
    double stage_cost(const Eigen::VectorXd& y, const Eigen::VectorXd& u) const { return output_cost(y) + input_cost(u); }

    /// Continuous-time right-hand side (ODE models) or the next state (discrete models).
    Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    bool discrete() const noexcept { return model == PlantModel::Lti || model == PlantModel::Static; }

    /// Nonzero columns of C are at most n_y and linearly independent; shapes agree.
    void validate() const;

    double param(const std::string& key) const;
};

PlantSpec plant_spec_from_json(const std::string& json_text);
std::string plant_spec_to_json(const PlantSpec& s);
PlantSpec load_plant_spec(const std::filesystem::path& path);

/// econ-cstr, two-tank, lti-3.
std::vector<PlantSpec> builtin_benchmarks();
PlantSpec builtin_benchmark(const std::string& name);

struct StepResult {
    Eigen::VectorXd y;
    double cost = 0.0;
    /// The input actually applied after clipping.
    Eigen::VectorXd u;
    bool clipped = false;
};

/// Mutable simulation state of one plant instance.
class PlantHandle {
public:
    explicit PlantHandle(PlantSpec spec);

    const PlantSpec& spec() const noexcept { return spec_; }
    const Eigen::VectorXd& state() const noexcept { return x_; }
    Eigen::Index steps() const noexcept { return k_; }
    Eigen::Index clip_warnings() const noexcept { return clip_warnings_; }
    /// Last injected disturbance sample.
    const Eigen::VectorXd& last_disturbance() const noexcept { return last_w_; }

    void reset();
    void reset(std::uint64_t noise_seed);
    void set_state(const Eigen::VectorXd& x);

    /// Clips u to the box, advances one sampling period, adds the bounded disturbance.
    StepResult step(const Eigen::VectorXd& u);

    Eigen::VectorXd output() const { return spec_.c * x_; }

private:
    PlantSpec spec_;
    Eigen::VectorXd x_;
    Eigen::VectorXd last_w_;
    std::mt19937_64 rng_;
    Eigen::Index k_ = 0;
    Eigen::Index clip_warnings_ = 0;
};

/// Noise-free state after one sampling period.
Eigen::VectorXd advance(const PlantSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

struct OpenLoopResult {
    Dataset dataset;
    ExcitationReport excitation;
    Eigen::Index excitation_order = 0;
};

/// Raised when the state diverges mid-run; carries the rows collected so far.
class PartialRunError : public Error {
public:
    PartialRunError(const std::string& what, Eigen::MatrixXd u, Eigen::MatrixXd y, Eigen::MatrixXd c)
        : Error(ErrorCode::StateDiverged, what), u(std::move(u)), y(std::move(y)), c(std::move(c))
    {
    }
    Eigen::MatrixXd u, y, c;
};

/**
 * Piecewise-constant random levels held for `hold` steps plus Gaussian input
 * noise, clipped to the box. Excitation is checked at order `excitation_order`.
 */
OpenLoopResult generate_openloop(PlantHandle& h, const OpenLoopSchedule& sched, Eigen::Index steps, std::uint64_t seed,
                                 Eigen::Index hankel_rows, Eigen::Index excitation_order);

DatasetSchema schema_for(const PlantSpec& s, Eigen::Index hankel_rows);

} // namespace deeepc
