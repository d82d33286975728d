#pragma once

#include "deeepc/controller.hpp"
#include "deeepc/plants.hpp"
#include "deeepc/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace deeepc {

struct CollectConfig {
    Eigen::Index steps = 4500;
    Eigen::Index hankel_rows = 1000;
    std::uint64_t seed = 1;
};

struct CompareConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    Eigen::Index steps = 500;
    Eigen::Index warmup_steps = 0;
};

/// One file describing a full collect -> train -> compare experiment.
struct ExperimentConfig {
    PlantSpec plant;
    CollectConfig collect;
    TrainConfig train;
    ControllerParams controller;
    CompareConfig compare;

    /// Canonical JSON (sorted keys, fixed number formatting).
    std::string to_json() const;
    void validate() const;
};

/// Missing sections fall back to defaults; the plant is either inline or `"plant": "<builtin name>"`.
ExperimentConfig experiment_from_json(const std::string& text);
ExperimentConfig load_experiment(const std::filesystem::path& path);
/// Defaults around a builtin benchmark.
ExperimentConfig default_experiment(const std::string& plant_name);

/// Open-loop data collection with the plant's schedule.
OpenLoopResult collect_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

/// Controller setup for `kind`; `model` is the lifted bundle (DeeEPC) or the raw surrogate (convex); unused for tracking.
ControllerSetup make_setup(ControllerKind kind, const Dataset& d, const ModelBundle& model,
                           const ExperimentConfig& cfg);

} // namespace deeepc
