#include <doctest.h>

#include "expect_error.hpp"
#include "oracles.hpp"

#include "deeepc/hankel.hpp"
#include "deeepc/linalg.hpp"
#include "deeepc/lti.hpp"
#include "deeepc/plants.hpp"

#include <random>

using namespace deeepc;

TEST_CASE("simulate: one-step recursion")
{
    const LtiSystem sys(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                        Eigen::MatrixXd::Zero(2, 2));
    Eigen::MatrixXd u(1, 2);
    u << 1, 0;
    const auto r = simulate(sys, Eigen::VectorXd::Zero(2), u);
    CHECK(r.y.row(0).norm() == 0.0);
    CHECK(r.x.row(1) == u.row(0));
}

TEST_CASE("simulate: identity dynamics hold the state")
{
    Eigen::VectorXd v(3);
    v << 1, -2, 0.5;
    const LtiSystem sys(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Identity(3, 3),
                        Eigen::MatrixXd::Zero(3, 1));
    const auto r = simulate(sys, v, Eigen::MatrixXd::Ones(6, 1));
    for (Eigen::Index k = 0; k < r.x.rows(); ++k) CHECK(r.x.row(k).transpose() == v);
}

TEST_CASE("simulate: matches a step-by-step recomputation")
{
    std::mt19937_64 rng(31);
    const LtiSystem base = random_lti(3, 2, 2, rng);
    const LtiSystem sys(base.a(), base.b(), base.c(), oracle::gaussian(2, 2, rng));
    const Eigen::MatrixXd u = oracle::gaussian(200, 2, rng);
    const Eigen::VectorXd x0 = oracle::gaussian(3, 1, rng);
    const auto r = simulate(sys, x0, u);
    Eigen::VectorXd x = x0;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < 200; ++k) {
        const Eigen::VectorXd uk = u.row(k).transpose();
        const Eigen::VectorXd y = sys.c() * x + sys.d() * uk;
        worst = std::max(worst, (y - r.y.row(k).transpose()).norm() / std::max(1.0, y.norm()));
        x = sys.a() * x + sys.b() * uk;
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("lti: dimension and controllability validation")
{
    CHECK_ERROR_CODE(LtiSystem(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2),
                               Eigen::MatrixXd::Zero(1, 1)),
                     ErrorCode::DimensionMismatch);
    CHECK_ERROR_CODE(LtiSystem(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1),
                               Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1), true),
                     ErrorCode::NotControllable);
    const LtiSystem sys(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Identity(2, 2),
                        Eigen::MatrixXd::Zero(2, 1));
    CHECK_ERROR_CODE(simulate(sys, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(2, 1)), ErrorCode::DimensionMismatch);
    CHECK_ERROR_CODE(verify_fundamental_lemma(sys, 40, 4, 2, 1), ErrorCode::NotControllable);
}

TEST_CASE("random_lti: spectral radius and controllability")
{
    std::mt19937_64 rng(37);
    for (int i = 0; i < 10; ++i) {
        const LtiSystem sys = random_lti(4, 1, 2, rng);
        CHECK(sys.is_controllable());
        const double rho = sys.a().eigenvalues().cwiseAbs().maxCoeff();
        CHECK(rho == doctest::Approx(0.9).epsilon(1e-10));
    }
}

TEST_CASE("fundamental lemma: twenty random third-order systems")
{
    std::mt19937_64 rng(41);
    for (int i = 0; i < 20; ++i) {
        const LtiSystem sys = random_lti(3, 1, 1, rng);
        const LemmaReport r = verify_fundamental_lemma(sys, 80, 6, 20, 1000 + i);
        CHECK_FALSE(r.refused);
        CHECK(r.min_pe_rank == r.required_rank);
        CHECK(r.max_residual <= 1e-8);
    }
}

TEST_CASE("fundamental lemma: a data window is its own Hankel column")
{
    std::mt19937_64 rng(43);
    const LtiSystem sys = random_lti(3, 1, 1, rng);
    const Eigen::MatrixXd u = oracle::gaussian(80, 1, rng);
    const auto sim = simulate(sys, Eigen::VectorXd::Zero(3), u);
    const auto hu = build_hankel(u, 6);
    const auto hy = build_hankel(sim.y, 6);
    const Eigen::MatrixXd stacked = linalg::vstack({&hu.data, &hy.data});
    for (Eigen::Index j : {0, 17, 74}) CHECK(linalg::lstsq_relative_residual(stacked, stacked.col(j)) <= 1e-12);
}

TEST_CASE("fundamental lemma: constant input is refused")
{
    std::mt19937_64 rng(47);
    const LtiSystem sys = random_lti(3, 1, 1, rng);
    const LemmaReport r = verify_fundamental_lemma(sys, Eigen::MatrixXd::Ones(80, 1), 6, 5, 1);
    CHECK(r.refused);
    CHECK(r.min_pe_rank < r.required_rank);
}

TEST_CASE("fundamental lemma: any operator yields a system trajectory")
{
    std::mt19937_64 rng(53);
    const LtiSystem sys = random_lti(3, 2, 2, rng);
    const Eigen::MatrixXd u = oracle::gaussian(120, 2, rng);
    const auto sim = simulate(sys, oracle::gaussian(3, 1, rng), u);
    const Eigen::Index depth = 5;
    const auto hu = build_hankel(u, depth);
    const auto hy = build_hankel(sim.y, depth);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd g = oracle::gaussian(hu.columns(), 1, rng);
        CHECK(initial_state_residual(sys, hu.data * g, hy.data * g) < 1e-8);
    }
    // A perturbed output is not explained by any initial state.
    const Eigen::VectorXd g = oracle::gaussian(hu.columns(), 1, rng);
    Eigen::VectorXd y = hy.data * g;
    y(y.size() - 1) += 0.5 * y.norm();
    CHECK(initial_state_residual(sys, hu.data * g, y) > 1e-3);
}

TEST_CASE("fundamental lemma: the shipped LTI benchmark")
{
    const PlantSpec spec = builtin_benchmark("lti-3");
    const LtiSystem sys(spec.a, spec.b, spec.c, Eigen::MatrixXd::Zero(spec.c.rows(), spec.b.cols()));
    REQUIRE(sys.is_controllable());
    const LemmaReport r = verify_fundamental_lemma(sys, 120, 6, 20, 5);
    CHECK_FALSE(r.refused);
    CHECK(r.max_residual <= 1e-8);
}

TEST_CASE("observability and Toeplitz maps reproduce simulate")
{
    std::mt19937_64 rng(59);
    const LtiSystem base = random_lti(3, 2, 2, rng);
    const LtiSystem sys(base.a(), base.b(), base.c(), oracle::gaussian(2, 2, rng));
    const Eigen::MatrixXd u = oracle::gaussian(6, 2, rng);
    const Eigen::VectorXd x0 = oracle::gaussian(3, 1, rng);
    const auto sim = simulate(sys, x0, u);
    const Eigen::VectorXd y = sys.observability_matrix(6) * x0 + sys.toeplitz(6) * linalg::stack_rows(u);
    CHECK((y - linalg::stack_rows(sim.y)).norm() < 1e-12 * std::max(1.0, y.norm()));
}
