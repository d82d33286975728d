#include <doctest.h>

#include "oracles.hpp"

#include "deeepc/deepc_problem.hpp"
#include "deeepc/error.hpp"
#include "deeepc/hankel.hpp"
#include "deeepc/qp.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace deeepc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem box_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& f, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub)
{
    QpProblem p;
    p.h = h;
    p.f = f;
    p.var_lb = lb;
    p.var_ub = ub;
    return p;
}

// Random feasible QP: x0 satisfies every constraint, some inequalities are tight at x0.
QpProblem random_feasible_qp(std::mt19937_64& rng, Eigen::Index n, Eigen::Index me, Eigen::Index mi, bool singular_h)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    QpProblem p;
    if (singular_h) {
        const Eigen::MatrixXd q = oracle::gaussian(n, n / 2 + 1, rng);
        p.h = q * q.transpose();
    } else {
        p.h = oracle::random_spd(n, 0.1, rng);
    }
    p.f = oracle::gaussian(n, 1, rng);
    const Eigen::VectorXd x0 = oracle::gaussian(n, 1, rng);
    p.aeq = oracle::gaussian(me, n, rng);
    p.beq = p.aeq * x0;
    p.ain = oracle::gaussian(mi, n, rng);
    const Eigen::VectorXd ax = p.ain * x0;
    p.lb_in.resize(mi);
    p.ub_in.resize(mi);
    for (Eigen::Index i = 0; i < mi; ++i) {
        p.lb_in(i) = ax(i) - unif(rng);
        p.ub_in(i) = unif(rng) < 0.3 ? kInf : ax(i) + unif(rng);
    }
    p.var_lb = (x0.array() - 1.0 - Eigen::ArrayXd::Constant(n, 2.0) * unif(rng)).matrix();
    p.var_ub = (x0.array() + 1.0 + Eigen::ArrayXd::Constant(n, 2.0) * unif(rng)).matrix();
    return p;
}

} // namespace

TEST_CASE("qp: active lower bound")
{
    auto p = box_qp(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1.0),
                    Eigen::VectorXd::Constant(1, kInf));
    const auto s = solve(p);
    CHECK(s.status == QpStatus::Optimal);
    CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("qp: projection onto the zero-sum hyperplane")
{
    Eigen::VectorXd a(4);
    a << 1.0, -2.0, 5.0, 0.5;
    QpProblem p;
    p.h = 2.0 * Eigen::MatrixXd::Identity(4, 4);
    p.f = -2.0 * a;
    p.aeq = Eigen::MatrixXd::Ones(1, 4);
    p.beq = Eigen::VectorXd::Zero(1);
    const auto s = solve(p);
    REQUIRE(s.status == QpStatus::Optimal);
    const Eigen::VectorXd expect = a.array() - a.mean();
    CHECK((s.x - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("qp: box QPs agree with the projected-gradient oracle")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(2, 12);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = dim(rng);
        const Eigen::MatrixXd h = oracle::random_spd(n, 0.5, rng);
        const Eigen::VectorXd f = 3.0 * oracle::gaussian(n, 1, rng);
        const Eigen::VectorXd lb = -Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd ub = Eigen::VectorXd::Ones(n);
        const auto p = box_qp(h, f, lb, ub);
        const auto s = solve(p);
        REQUIRE(s.status == QpStatus::Optimal);
        const Eigen::VectorXd ref = oracle::projected_gradient_box(h, f, lb, ub);
        CHECK(oracle::rel_err(s.objective, p.objective(ref), 1e-12) < 1e-6);
    }
}

TEST_CASE("qp: random feasible problems with equalities and polytopes certify")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = random_feasible_qp(rng, 20, 4, 15, trial % 2 == 1);
        const auto s = solve(p);
        INFO("trial " << trial << " kkt " << s.kkt.max());
        CHECK(s.status == QpStatus::Optimal);
        CHECK(s.kkt.max() <= 1e-6);
    }
}

TEST_CASE("qp: dependent equality rows are tolerated")
{
    QpProblem p;
    p.h = Eigen::MatrixXd::Identity(3, 3);
    p.f = Eigen::VectorXd::Zero(3);
    p.aeq.resize(2, 3);
    p.aeq << 1, 1, 0, 2, 2, 0;
    p.beq.resize(2);
    p.beq << 1, 2;
    const auto s = solve(p);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK(s.x(0) == doctest::Approx(0.5));
    CHECK(s.x(1) == doctest::Approx(0.5));
}

TEST_CASE("qp: inconsistent equalities are infeasible with a certificate")
{
    QpProblem p;
    p.h = Eigen::MatrixXd::Identity(2, 2);
    p.f = Eigen::VectorXd::Zero(2);
    p.aeq.resize(2, 2);
    p.aeq << 1, 1, 1, 1;
    p.beq.resize(2);
    p.beq << 0, 1;
    const auto s = solve(p);
    REQUIRE(s.status == QpStatus::Infeasible);
    CHECK((p.aeq.transpose() * s.certificate).norm() < 1e-10);
    CHECK(s.certificate.dot(p.beq) > 0.0);
}

TEST_CASE("qp: conflicting inequalities are infeasible")
{
    QpProblem p;
    p.h = Eigen::MatrixXd::Identity(1, 1);
    p.f = Eigen::VectorXd::Zero(1);
    p.ain.resize(2, 1);
    p.ain << 1, -1;
    p.lb_in = Eigen::VectorXd::Constant(2, 1.0);
    p.ub_in = Eigen::VectorXd::Constant(2, kInf);
    CHECK(solve(p).status == QpStatus::Infeasible);

    auto q = box_qp(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0),
                    Eigen::VectorXd::Constant(1, 1.0));
    CHECK(solve(q).status == QpStatus::Infeasible);
}

TEST_CASE("qp: indefinite Hessian is rejected")
{
    Eigen::MatrixXd h(2, 2);
    h << 1, 0, 0, -1;
    auto p = box_qp(h, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, -1), Eigen::VectorXd::Constant(2, 1));
    CHECK_THROWS_AS(solve(p), Error);
    CHECK(!is_psd(h));
    CHECK(is_psd(Eigen::MatrixXd::Zero(3, 3)));
}

TEST_CASE("qp: degenerate box fixes the variable")
{
    auto p = box_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Constant(2, 5.0), Eigen::VectorXd::Constant(2, 0.3),
                    Eigen::VectorXd::Constant(2, 0.3));
    const auto s = solve(p);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK((s.x.array() - 0.3).abs().maxCoeff() < 1e-12);
}

TEST_CASE("qp: solver is deterministic")
{
    std::mt19937_64 rng(3);
    const auto p = random_feasible_qp(rng, 15, 3, 10, false);
    const auto a = solve(p);
    const auto b = solve(p);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
}

// ---- problem assembly -------------------------------------------------------

namespace {

struct Fixture {
    HankelBlocks blocks;
    EconCostModel model;
    IniWindows ini;
};

Fixture make_fixture(std::mt19937_64& rng, Eigen::Index nu, Eigen::Index nv, Eigen::Index nz, Eigen::Index t_ini,
                     Eigen::Index np, Eigen::Index t)
{
    Fixture fx;
    const Eigen::MatrixXd u = oracle::gaussian(t, nu, rng);
    const Eigen::MatrixXd v = oracle::gaussian(t, nv, rng);
    const Eigen::MatrixXd z = oracle::gaussian(t, nz, rng);
    fx.blocks = partition(u, v, z, t_ini, np);
    fx.model = EconCostModel::zeros(nz, nv, 1);
    fx.model.g(0, 0) = 1.0;
    fx.model.p_z = oracle::gaussian(nz, 1, rng);
    fx.ini.u = u.topRows(t_ini);
    fx.ini.v = v.topRows(t_ini);
    fx.ini.z = z.topRows(t_ini);
    return fx;
}

} // namespace

TEST_CASE("deeepc assembly: decision layout for the reference problem shape")
{
    std::mt19937_64 rng(1);
    auto fx = make_fixture(rng, 2, 4, 60, 2, 2, 300);
    DeepcBounds bounds{Eigen::VectorXd::Constant(2, -1), Eigen::VectorXd::Constant(2, 1),
                       OutputPolytope::box(Eigen::VectorXd::Constant(1, -5), Eigen::VectorXd::Constant(1, 5))};
    const auto q = assemble_deeepc(fx.blocks, fx.model, fx.ini, DeepcWeights{}, bounds);
    const Eigen::Index ng = fx.blocks.operator_dim();
    CHECK(q.layout.dim() == ng + 2 * 60);
    CHECK(q.problem.aeq.rows() == 2 * 2 + 2 * 4 + 2 * 60);
    CHECK(q.problem.ain.rows() == 2 * 2 + 2 * 1);
    CHECK(is_psd(q.problem.h));
}

TEST_CASE("deeepc assembly: slack columns touch only the z-past rows")
{
    std::mt19937_64 rng(2);
    auto fx = make_fixture(rng, 1, 2, 3, 2, 3, 60);
    const auto q = assemble_deeepc(fx.blocks, fx.model, fx.ini, DeepcWeights{}, DeepcBounds{});
    const Eigen::Index ng = q.layout.n_g;
    const Eigen::MatrixXd slack_cols = q.problem.aeq.rightCols(q.layout.n_slack);
    const Eigen::Index mu = 2, mv = 4;
    CHECK(slack_cols.topRows(mu + mv).cwiseAbs().maxCoeff() == 0.0);
    CHECK(slack_cols.bottomRows(6).isApprox(-Eigen::MatrixXd::Identity(6, 6)));
    CHECK(q.problem.aeq.rows() == mu + mv + 6);
    CHECK(q.problem.ain.size() == 0);
    CHECK(ng == fx.blocks.full.columns());
}

TEST_CASE("deeepc assembly: missing initialization is rejected")
{
    std::mt19937_64 rng(3);
    auto fx = make_fixture(rng, 1, 1, 2, 2, 2, 40);
    fx.ini.z = Eigen::MatrixXd(1, 2);
    CHECK_THROWS_AS(assemble_deeepc(fx.blocks, fx.model, fx.ini, DeepcWeights{}, DeepcBounds{}), Error);
}

TEST_CASE("deeepc assembly: stacked objective matches a direct evaluation")
{
    std::mt19937_64 rng(4);
    auto fx = make_fixture(rng, 2, 1, 3, 2, 3, 50);
    fx.model.q_z = oracle::gaussian(3, 1, rng);
    fx.model.q_v = oracle::gaussian(1, 1, rng);
    fx.model.p_v = oracle::gaussian(1, 1, rng);
    fx.model.b_z = 0.7;
    DeepcWeights w;
    w.lambda = 1.7;
    w.r = oracle::random_spd(2, 0.1, rng);
    w.beta_z = 3.0;
    w.beta_g = 0.2;
    const auto q = assemble_deeepc(fx.blocks, fx.model, fx.ini, w, DeepcBounds{});
    const Eigen::VectorXd x = oracle::gaussian(q.layout.dim(), 1, rng);
    const Eigen::VectorXd g = x.head(q.layout.n_g);
    const Eigen::VectorXd sigma = x.tail(q.layout.n_slack);

    double expect = w.beta_z * sigma.squaredNorm() + w.beta_g * g.squaredNorm();
    const auto zhat = predicted_outputs(fx.blocks, g);
    const Eigen::VectorXd vhat = fx.blocks.full.vf * g;
    const auto uhat = extract_input(fx.blocks, g).sequence;
    Eigen::VectorXd prev = fx.ini.u.row(1).transpose();
    for (Eigen::Index j = 0; j < 3; ++j) {
        expect += w.lambda * eval_cost(fx.model, zhat.row(j).transpose(), vhat.segment(j, 1)).value;
        const Eigen::VectorXd du = uhat.row(j).transpose() - prev;
        expect += du.dot(w.r * du);
        prev = uhat.row(j).transpose();
    }
    CHECK(oracle::rel_err(q.problem.objective(x), expect) < 1e-12);
}

TEST_CASE("deeepc assembly: large beta_g drives the operator to zero")
{
    std::mt19937_64 rng(5);
    auto fx = make_fixture(rng, 1, 1, 2, 1, 2, 40);
    fx.ini.u.setZero();
    fx.ini.v.setZero();
    fx.ini.z.setZero();
    DeepcWeights w;
    w.beta_g = 1e8;
    w.beta_z = 1e3;
    const auto q = assemble_deeepc(fx.blocks, fx.model, fx.ini, w, DeepcBounds{});
    const auto s = solve(q.problem);
    INFO("kkt " << s.kkt.stationarity << " " << s.kkt.primal << " " << s.kkt.complementarity << " it " << s.iterations);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK(s.x.head(q.layout.n_g).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(extract_input(fx.blocks, s.x).sequence.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("deeepc assembly: positive scaling of lambda leaves the argmin unchanged")
{
    std::mt19937_64 rng(6);
    auto fx = make_fixture(rng, 1, 1, 2, 1, 2, 30);
    fx.model.q_z.setConstant(0.3);
    DeepcWeights w;
    w.beta_z = 0.0;
    w.beta_g = 0.0;
    w.no_slack = true;
    w.lambda = 1.0;
    DeepcBounds bounds{Eigen::VectorXd::Constant(1, -3), Eigen::VectorXd::Constant(1, 3), {}};
    const auto s1 = solve(assemble_deeepc(fx.blocks, fx.model, fx.ini, w, bounds).problem);
    w.lambda = 40.0;
    const auto s2 = solve(assemble_deeepc(fx.blocks, fx.model, fx.ini, w, bounds).problem);
    REQUIRE(s1.status == QpStatus::Optimal);
    REQUIRE(s2.status == QpStatus::Optimal);
    // The operator itself is not unique; the predicted trajectory is.
    const auto z1 = predicted_outputs(fx.blocks, s1.x);
    const auto z2 = predicted_outputs(fx.blocks, s2.x);
    const auto u1 = extract_input(fx.blocks, s1.x).sequence;
    const auto u2 = extract_input(fx.blocks, s2.x).sequence;
    const double cost1 = eval_cost(fx.model, z1.row(0).transpose(), Eigen::VectorXd::Zero(1)).value;
    const double cost2 = eval_cost(fx.model, z2.row(0).transpose(), Eigen::VectorXd::Zero(1)).value;
    CHECK(std::abs(cost1 - cost2) < 1e-5 * std::max(1.0, std::abs(cost1)));
    CHECK((u1 - u2).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("extract_input: selector, zero and recomputation")
{
    std::mt19937_64 rng(8);
    auto fx = make_fixture(rng, 2, 1, 2, 2, 3, 30);
    const Eigen::Index ng = fx.blocks.operator_dim();
    const auto e3 = extract_input(fx.blocks, Eigen::VectorXd::Unit(ng, 3));
    for (Eigen::Index j = 0; j < 3; ++j)
        CHECK(e3.sequence.row(j).transpose() == fx.blocks.full.uf.col(3).segment(2 * j, 2));
    CHECK(extract_input(fx.blocks, Eigen::VectorXd::Zero(ng)).sequence.cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd g = oracle::gaussian(ng, 1, rng);
    const Eigen::VectorXd direct = fx.blocks.full.uf * g;
    const auto plan = extract_input(fx.blocks, g);
    for (Eigen::Index j = 0; j < 3; ++j)
        for (Eigen::Index i = 0; i < 2; ++i) CHECK(std::abs(plan.sequence(j, i) - direct(2 * j + i)) <= 1e-12);
    CHECK(plan.first() == plan.sequence.row(0).transpose());
    CHECK_THROWS_AS(extract_input(fx.blocks, Eigen::VectorXd::Zero(ng - 1)), Error);
}
