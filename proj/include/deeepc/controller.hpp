#pragma once

#include "deeepc/deepc_problem.hpp"
#include "deeepc/hankel.hpp"
#include "deeepc/model.hpp"
#include "deeepc/plants.hpp"
#include "deeepc/qp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace deeepc {

enum class ControllerKind {
    Deeepc,   ///< lifted economic controller
    Tracking, ///< set-point tracking on raw u/y
    Convex,   ///< economic controller with a quadratic surrogate on raw u/y
};

std::string to_string(ControllerKind k);
/// Accepts "deeepc", "tracking", "convex"; InvalidConfig lists the valid names otherwise.
ControllerKind controller_kind_from_name(const std::string& name);

struct ControllerParams {
    Eigen::Index t_ini = 2;
    Eigen::Index n_p = 2;
    double lambda = 1.0;
    /// Scalar input-move weight (R = r I).
    double r = 0.0;
    double beta_z = 5e10;
    double beta_g = 1e-8;
    bool no_slack = false;
    /// Relative singular-value cutoff for the Hankel reduction; 0 keeps the numerical rank, < 0 disables it.
    double svd_tol = kDefaultReductionTolerance;
    /// Tracking weights (T = track_t I on outputs, R = track_r I on inputs).
    double track_t = 1.0;
    double track_r = 0.01;
    QpOptions qp;

    void validate() const;
};

/**
 * @brief Everything needed to compute one control move: the Hankel blocks,
 * the liftings and surrogate, weights and bounds.
 */
struct ControllerSetup {
    ControllerKind kind = ControllerKind::Deeepc;
    ControllerParams params;
    HankelBlocks blocks;
    /// Liftings and cost surrogate. Identity liftings for the raw baselines.
    ModelBundle model;
    DeepcBounds bounds;
    /// Tracking only.
    TrackingRefs refs;
    /// Maps one predicted output step to y^c (tracking only).
    Eigen::MatrixXd output_map;
    /// Columns of y forming y^c.
    std::vector<Eigen::Index> yc_index;

    bool has_input_lifting() const noexcept { return kind != ControllerKind::Tracking; }
    Eigen::VectorXd lift_output(const Eigen::VectorXd& y) const;
    Eigen::VectorXd lift_input(const Eigen::VectorXd& u) const;
    /// Reconstructed constrained outputs from a lifted output.
    Eigen::VectorXd surrogate_yc(const Eigen::VectorXd& z) const;
};

/// Hankel blocks from the leading Hankel rows of the dataset, lifted through `model` (no v channel when `with_v` is false).
HankelBlocks build_controller_blocks(const Dataset& d, const ModelBundle& model, bool with_v,
                                     const ControllerParams& p);

ControllerSetup make_deeepc_setup(const Dataset& d, const ModelBundle& model, const PlantSpec& plant,
                                  const ControllerParams& p);
/// `surrogate` must have identity liftings (see fit_raw_surrogate).
ControllerSetup make_convex_setup(const Dataset& d, const ModelBundle& surrogate, const PlantSpec& plant,
                                  const ControllerParams& p);
/// Tracks the plant's steady pair (track_y, track_u).
ControllerSetup make_tracking_setup(const Dataset& d, const PlantSpec& plant, const ControllerParams& p);

/// Rolling initialization windows, rows in time order, plus the event log.
struct ControllerState {
    Eigen::Index t_ini = 0;
    Eigen::MatrixXd u, y, z, v;
    Eigen::Index k = 0;
    Eigen::VectorXd last_u;
    Eigen::Index filled = 0;
    std::vector<std::string> events;

    bool warmed_up() const noexcept { return filled >= t_ini; }
    IniWindows ini() const { return {u, v, z}; }
    /// Drops the oldest row of each window and appends the new sample.
    void push(const Eigen::VectorXd& uk, const Eigen::VectorXd& yk, const Eigen::VectorXd& zk,
              const Eigen::VectorXd& vk);
};

enum class WarmupPolicy { Pid, Fixed, Random };

struct WarmupSpec {
    WarmupPolicy policy = WarmupPolicy::Pid;
    /// Fixed policy input; empty means the plant's pid.u0.
    Eigen::VectorXd u_fixed;
    std::uint64_t seed = 0;
    /// Interaction steps; 0 means exactly t_ini.
    Eigen::Index steps = 0;
};

struct WarmupResult {
    ControllerState state;
    /// One entry per warmup step.
    Eigen::MatrixXd u, y;
    Eigen::VectorXd c;
};

WarmupResult warmup(PlantHandle& plant, const ControllerSetup& setup, const WarmupSpec& spec);

struct ClosedLoopRecord {
    Eigen::Index k = 0;
    Eigen::VectorXd u;
    Eigen::VectorXd y;
    double cost = 0.0;
    double surrogate_cost = 0.0;
    QpStatus status = QpStatus::Optimal;
    bool fallback = false;
    double solve_ms = 0.0;
    Eigen::Index iterations = 0;
    /// Distance of the true y^c outside its bounds, per constrained output.
    Eigen::VectorXd violation_true;
    /// Same for the surrogate reconstruction G z.
    Eigen::VectorXd violation_surrogate;
};

struct Decision {
    Eigen::VectorXd u;
    QpSolution solution;
    DeepcLayout layout;
    bool fallback = false;
    double elapsed_ms = 0.0;
};

/// Assembles and solves the QP for the current windows without touching the plant.
Decision decide(const ControllerSetup& setup, const ControllerState& state);

/// Applies u, measures, lifts and rolls the windows.
ClosedLoopRecord apply_decision(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant,
                                const Decision& d);

ClosedLoopRecord step_controller(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant);
ClosedLoopRecord step_deeepc(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant);
ClosedLoopRecord step_tracking_deepc(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant);
ClosedLoopRecord step_convex_deepc(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant);

struct ClosedLoopSummary {
    Eigen::Index steps = 0;
    double avg_cost = 0.0;
    /// Fraction of steps with any true y^c outside bounds.
    double violation_rate = 0.0;
    double surrogate_violation_rate = 0.0;
    Eigen::Index fallbacks = 0;
    double mean_solve_ms = 0.0;
    double p99_solve_ms = 0.0;
    double max_solve_ms = 0.0;
};

ClosedLoopSummary summarize(const std::vector<ClosedLoopRecord>& records);

struct ClosedLoopRun {
    std::vector<ClosedLoopRecord> records;
    ClosedLoopSummary summary;
    std::vector<std::string> events;
};

/**
 * Resets the plant with `seed` as its disturbance seed, warms up and runs
 * `steps` controller steps.
 */
ClosedLoopRun run_closed_loop(const ControllerSetup& setup, const PlantSpec& plant, const WarmupSpec& warm,
                              Eigen::Index steps, std::uint64_t seed);

/// Deterministic per-step trace (no timing columns).
void write_trace_csv(const std::filesystem::path& path, const std::vector<ClosedLoopRecord>& records);
/// Solve time and iteration count per step.
void write_timing_csv(const std::filesystem::path& path, const std::vector<ClosedLoopRecord>& records);
/// {avg_cost, violation_rate, surrogate_violation_rate, fallbacks, steps} and, when requested, the timing fields.
std::string summary_json(const ClosedLoopSummary& s, bool with_timing);

} // namespace deeepc
