#include <doctest.h>

#include "expect_error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "deeepc/hankel.hpp"
#include "deeepc/trainer.hpp"

#include <random>

using namespace deeepc;

namespace {

TrainConfig small_config()
{
    TrainConfig cfg;
    cfg.hidden = {8};
    cfg.n_z = 3;
    cfg.n_v = 2;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.seed = 5;
    return cfg;
}

Dataset small_dataset(Eigen::Index rows = 200, Eigen::Index hankel = 60)
{
    return fixture::quadratic_dataset(fixture::quadratic_plant(3, 2, 1), rows, hankel, 2);
}

struct Prepared {
    ModelBundle model;
    TrainingData data;
};

Prepared prepare(const Dataset& d, const TrainConfig& cfg)
{
    ModelBundle m = initial_model(d, cfg);
    TrainingData data = prepare_training_data(d, m.y_norm, m.u_norm, cfg.t_ini + cfg.n_p, cfg.holdout_fraction);
    return {std::move(m), std::move(data)};
}

bool same_reports(const TrainReport& a, const TrainReport& b)
{
    if (a.epochs.size() != b.epochs.size() || a.alphas != b.alphas) return false;
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        const auto& x = a.epochs[i];
        const auto& y = b.epochs[i];
        if (x.total != y.total || x.economic != y.economic || x.reconstruction != y.reconstruction ||
            x.lifted_output != y.lifted_output || x.lifted_input != y.lifted_input)
            return false;
    }
    return a.holdout_mse == b.holdout_mse;
}

} // namespace

TEST_CASE("loss_economic: perfect fit, mean predictor and residual scaling")
{
    const Dataset d = small_dataset();
    TrainConfig cfg = small_config();
    Prepared p = prepare(d, cfg);
    const Eigen::VectorXd chat =
        eval_cost_batch(p.model.cost, p.model.output_net.forward(p.data.y_fit), p.model.input_net.forward(p.data.u_fit));
    CHECK(loss_economic(p.model, p.data.y_fit, p.data.u_fit, chat) == doctest::Approx(0.0).epsilon(1e-20));

    // Mean predictor: zero weights everywhere except the constant.
    ModelBundle mean_model = p.model;
    mean_model.cost.q_z.setConstant(-200.0);
    mean_model.cost.q_v.setConstant(-200.0);
    mean_model.cost.p_z.setZero();
    mean_model.cost.p_v.setZero();
    mean_model.cost.b_v = 0.0;
    const Eigen::VectorXd& c = p.data.c_fit;
    mean_model.cost.b_z = c.mean();
    const double variance = (c.array() - c.mean()).square().mean();
    CHECK(loss_economic(mean_model, p.data.y_fit, p.data.u_fit, c) == doctest::Approx(variance).epsilon(1e-10));

    const double base = loss_economic(p.model, p.data.y_fit, p.data.u_fit, c);
    const Eigen::VectorXd doubled = chat + 2.0 * (c - chat);
    CHECK(loss_economic(p.model, p.data.y_fit, p.data.u_fit, doubled) == doctest::Approx(4.0 * base).epsilon(1e-10));
}

TEST_CASE("loss_reconstruction: exact map, zero map and least-squares optimality")
{
    const Dataset d = small_dataset();
    Prepared p = prepare(d, small_config());
    const Eigen::MatrixXd z = p.model.output_net.forward(p.data.y_fit);

    ModelBundle exact = p.model;
    CHECK(loss_reconstruction(exact, p.data.y_fit, reconstruct_output_batch(exact.cost, z)) ==
          doctest::Approx(0.0).epsilon(1e-20));

    ModelBundle zero = p.model;
    zero.cost.g.setZero();
    const double mean_sq = p.data.yc_fit.rowwise().squaredNorm().mean();
    CHECK(loss_reconstruction(zero, p.data.y_fit, p.data.yc_fit) == doctest::Approx(mean_sq).epsilon(1e-12));

    ModelBundle ls = p.model;
    ls.cost.g = z.completeOrthogonalDecomposition().solve(p.data.yc_fit).transpose();
    const double best = loss_reconstruction(ls, p.data.y_fit, p.data.yc_fit);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        ModelBundle other = ls;
        other.cost.g += 1e-3 * oracle::gaussian(ls.cost.g.rows(), ls.cost.g.cols(), rng);
        CHECK(loss_reconstruction(other, p.data.y_fit, p.data.yc_fit) >= best);
    }
}

TEST_CASE("loss_willems: outputs of a memoryless LTI map of u are consistent")
{
    const Dataset d = small_dataset(400, 200);
    const TrainConfig cfg = small_config();
    Prepared p = prepare(d, cfg);
    std::mt19937_64 rng(7);
    // The loss predicts a window from its inputs alone, so only feedthrough is exactly consistent.
    const LtiSystem sys(Eigen::MatrixXd::Zero(2, 2), oracle::gaussian(2, 2, rng), Eigen::MatrixXd::Zero(3, 2),
                        oracle::gaussian(3, 2, rng));
    const Eigen::Index h = d.split().hankel_rows;
    const Eigen::Index n_fit = p.data.y_fit.rows();
    const auto sim = simulate(sys, Eigen::VectorXd::Zero(2), d.u().values().topRows(h + n_fit));
    const double residual = willems_residual(sim.y.topRows(h), sim.y.middleRows(h, n_fit), p.data);
    CHECK(residual <= 1e-10);
    CHECK(willems_residual(Eigen::MatrixXd::Zero(h, 3), Eigen::MatrixXd::Zero(n_fit, 3), p.data) == 0.0);
    // A signal unrelated to u is not consistent.
    const double noise = willems_residual(oracle::gaussian(h, 3, rng), oracle::gaussian(n_fit, 3, rng), p.data);
    CHECK(noise > 1e-2);
}

TEST_CASE("loss_willems: a window copied from the Hankel split is reproduced exactly")
{
    const Dataset d = small_dataset(400, 200);
    Prepared p = prepare(d, small_config());
    const Eigen::Index depth = p.data.depth;
    const Eigen::MatrixXd hu = build_hankel(d.u().values().topRows(200), depth).data;
    // pinv(H_u) H_u e_j reproduces column j of H_w whenever the columns of H_u are independent of w's nullspace;
    // with full row rank H_u it equals the projection of e_j onto the row space of H_u.
    REQUIRE_FALSE(p.data.rank_deficient);
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd w = oracle::gaussian(200, 2, rng);
    const Eigen::MatrixXd hw = build_hankel(w, depth).data;
    const Eigen::MatrixXd pinv = hu.completeOrthogonalDecomposition().pseudoInverse();
    for (Eigen::Index j : {0, 50, 150}) {
        const Eigen::VectorXd pred = hw * (pinv * hu.col(j));
        const Eigen::VectorXd proj = hu.transpose() * (pinv.transpose() * Eigen::VectorXd::Unit(hu.cols(), j));
        CHECK((pred - hw * proj).norm() <= 1e-10 * std::max(1.0, pred.norm()));
    }
}

TEST_CASE("composite gradient matches central differences")
{
    const Dataset d = small_dataset(160, 60);
    TrainConfig cfg = small_config();
    Prepared p = prepare(d, cfg);
    std::mt19937_64 rng(11);
    Eigen::VectorXd theta = p.model.parameters();
    theta += 0.05 * oracle::gaussian(theta.size(), 1, rng);
    p.model.set_parameters(theta);
    const std::array<double, 4> alphas{1.0, 0.7, 0.5, 0.3};
    const CompositeEval ev = evaluate_composite(p.model, p.data, alphas, true);
    const Eigen::VectorXd fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& x) {
            ModelBundle m = p.model;
            m.set_parameters(x);
            return evaluate_composite(m, p.data, alphas, false).losses.total;
        },
        theta, 1e-5);
    Eigen::Index ok = 0;
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        if (std::abs(fd(i) - ev.grad(i)) <= 1e-5 * std::max({std::abs(fd(i)), std::abs(ev.grad(i)), 1e-4})) ++ok;
    CHECK(static_cast<double>(ok) >= 0.99 * static_cast<double>(theta.size()));
}

TEST_CASE("train: all-zero weights leave the parameters unchanged")
{
    const Dataset d = small_dataset();
    TrainConfig cfg = small_config();
    cfg.alphas = {0.0, 0.0, 0.0, 0.0};
    const ModelBundle init = initial_model(d, cfg);
    const TrainResult r = train(d, cfg);
    CHECK(r.model.parameters() == init.parameters());
}

TEST_CASE("train: same seed gives identical reports and parameters")
{
    const Dataset d = small_dataset();
    const TrainConfig cfg = small_config();
    const TrainResult a = train(d, cfg);
    const TrainResult b = train(d, cfg);
    CHECK(same_reports(a.report, b.report));
    CHECK(a.model.parameters() == b.model.parameters());
}

TEST_CASE("train: losses stay finite and non-negative, final total does not exceed the initial one")
{
    const Dataset d = small_dataset();
    TrainConfig cfg = small_config();
    cfg.epochs = 5;
    const TrainResult r = train(d, cfg);
    for (const auto& e : r.report.epochs) {
        CHECK(std::isfinite(e.total));
        CHECK(e.economic >= 0.0);
        CHECK(e.reconstruction >= 0.0);
        CHECK(e.lifted_output >= 0.0);
        CHECK(e.lifted_input >= 0.0);
    }
    const Prepared p = prepare(d, cfg);
    const double final_total = evaluate_composite(r.model, p.data, r.report.alphas, false).losses.total;
    CHECK(final_total <= r.report.epochs.front().total);
}

TEST_CASE("train: auto-balanced terms start within a factor ten of each other")
{
    const Dataset d = small_dataset();
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    const TrainResult r = train(d, cfg);
    const auto& e0 = r.report.epochs.front();
    const auto& a = r.report.alphas;
    const double terms[4] = {a[0] * e0.economic, a[1] * e0.reconstruction, a[2] * e0.lifted_output,
                             a[3] * e0.lifted_input};
    const double hi = *std::max_element(terms, terms + 4);
    const double lo = *std::min_element(terms, terms + 4);
    CHECK(hi <= 10.0 * lo);
}

TEST_CASE("train: realizable target with fixed identity liftings")
{
    const auto plant = fixture::quadratic_plant(3, 2, 4);
    const Dataset d = fixture::quadratic_dataset(plant, 2000, 500, 6);
    TrainConfig cfg;
    cfg.n_z = 3;
    cfg.n_v = 2;
    cfg.epochs = 100;
    cfg.batch_size = 32;
    cfg.lr_cost = 2e-2;
    cfg.freeze_nets = true;
    ModelBundle start = ModelBundle::raw(3, 2, 1);
    start.cost.b_z = d.c().values().col(0).tail(1500).mean();
    const TrainResult r = train_from(start, d, cfg);
    const auto& last = r.report.epochs.back();
    CHECK(last.economic <= 1e-4);
    CHECK(last.reconstruction <= 1e-4);
}

TEST_CASE("train: collapsed liftings are detected")
{
    const Dataset d = small_dataset();
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    ModelBundle m = initial_model(d, cfg);
    // Zero output layer: F maps every y to the same point.
    Eigen::VectorXd theta = m.output_net.parameters();
    theta.setZero();
    m.output_net.set_parameters(theta);
    cfg.alphas = {0.0, 0.0, 1.0, 0.0};
    cfg.auto_balance = false;
    CHECK_ERROR_CODE(train_from(m, d, cfg), ErrorCode::CollapseDetected);
}

TEST_CASE("train config validation")
{
    TrainConfig cfg;
    cfg.alphas[2] = -1.0;
    CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidConfig);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidConfig);
    cfg = TrainConfig{};
    cfg.lr_nets = 0.0;
    CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidConfig);
}

TEST_CASE("raw surrogate fit reports holdout quality")
{
    const auto plant = fixture::quadratic_plant(3, 2, 8);
    const Dataset d = fixture::quadratic_dataset(plant, 1500, 400, 9);
    TrainConfig cfg;
    cfg.epochs = 5;
    const TrainResult r = fit_raw_surrogate(d, cfg);
    CHECK(r.model.n_z() == 3);
    CHECK(r.model.n_v() == 2);
    CHECK(r.report.holdout_r2 > 0.999);
}
