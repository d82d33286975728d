#include <doctest.h>

#include "fixtures.hpp"

#include "deeepc/controller.hpp"
#include "deeepc/experiment.hpp"
#include "deeepc/trainer.hpp"

#include <cmath>

using namespace deeepc;

// Kept apart from the controller suite: this property depends on how close training gets the
// liftings to an affine map, and a miss here should not hide regressions elsewhere.
TEST_CASE("on a plant with quadratic cost the lifted and convex controllers perform alike")
{
    ExperimentConfig cfg = default_experiment("lti-3");
    cfg.collect.steps = 1500;
    cfg.collect.hankel_rows = 500;
    const Dataset d = collect_dataset(cfg, 1).dataset;

    TrainConfig tc = cfg.train;
    tc.hidden = {16};
    tc.n_z = 4;
    tc.n_v = 2;
    tc.epochs = 100;
    tc.lr_nets = 1e-3;
    tc.lr_cost = 1e-2;
    const TrainResult lifted = train(d, tc);
    const TrainResult raw = fit_raw_surrogate(d, tc);
    REQUIRE(raw.report.holdout_r2 > 0.99);

    const ControllerSetup a = make_deeepc_setup(d, lifted.model, cfg.plant, cfg.controller);
    const ControllerSetup b = make_convex_setup(d, raw.model, cfg.plant, cfg.controller);
    const auto ra = run_closed_loop(a, cfg.plant, WarmupSpec{}, 100, 3);
    const auto rb = run_closed_loop(b, cfg.plant, WarmupSpec{}, 100, 3);
    INFO("lifted " << ra.summary.avg_cost << " convex " << rb.summary.avg_cost << " holdout r2 "
                   << lifted.report.holdout_r2);
    CHECK(ra.summary.fallbacks == 0);
    CHECK(rb.summary.fallbacks == 0);
    CHECK(std::abs(ra.summary.avg_cost - rb.summary.avg_cost) <= 0.02 * std::abs(rb.summary.avg_cost));
}
