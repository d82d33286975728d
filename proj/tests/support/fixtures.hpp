#pragma once

// Synthetic datasets shared by the trainer, controller and acceptance suites.

#include "deeepc/cost_model.hpp"
#include "deeepc/lti.hpp"
#include "deeepc/plants.hpp"
#include "deeepc/trajectory.hpp"

#include <cstdint>

namespace fixture {

/// Plant with a cost that is exactly quadratic in y and in u, each with positive diagonal weights.
struct QuadraticPlant {
    deeepc::LtiSystem sys;
    Eigen::VectorXd qy, py, qu, pu;
    double b = 0.0;
    /// y^c = y[yc_col]
    Eigen::Index yc_col = 0;

    double cost(const Eigen::VectorXd& y, const Eigen::VectorXd& u) const;
};

QuadraticPlant quadratic_plant(Eigen::Index n_x, Eigen::Index n_u, std::uint64_t seed);

/// Open loop under i.i.d. uniform inputs in [-1, 1]; row k holds u_k, y after the step and c_k.
deeepc::Dataset quadratic_dataset(const QuadraticPlant& p, Eigen::Index rows, Eigen::Index hankel_rows,
                                  std::uint64_t seed);

/// The LTI benchmark's own quadratic cost written as a surrogate over identity liftings.
deeepc::EconCostModel lti_cost(const deeepc::PlantSpec& s);

} // namespace fixture
