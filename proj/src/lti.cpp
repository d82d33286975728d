#include "deeepc/lti.hpp"

#include "deeepc/error.hpp"
#include "deeepc/hankel.hpp"
#include "deeepc/linalg.hpp"

#include <algorithm>

namespace deeepc {

LtiSystem::LtiSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c, Eigen::MatrixXd d, bool controllable)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d))
{
    require(a_.rows() == a_.cols(), ErrorCode::DimensionMismatch, "A must be square");
    require(b_.rows() == a_.rows(), ErrorCode::DimensionMismatch, "B rows must equal n_x");
    require(c_.cols() == a_.rows(), ErrorCode::DimensionMismatch, "C cols must equal n_x");
    require(d_.rows() == c_.rows() && d_.cols() == b_.cols(), ErrorCode::DimensionMismatch, "D must be n_y x n_u");
    if (controllable) require(is_controllable(), ErrorCode::NotControllable, "system flagged controllable is not");
}

Eigen::MatrixXd LtiSystem::controllability_matrix() const
{
    const Eigen::Index n = n_x(), m = n_u();
    Eigen::MatrixXd ctrl(n, n * m);
    Eigen::MatrixXd block = b_;
    for (Eigen::Index i = 0; i < n; ++i) {
        ctrl.middleCols(i * m, m) = block;
        block = a_ * block;
    }
    return ctrl;
}

bool LtiSystem::is_controllable() const
{
    return linalg::numerical_rank(controllability_matrix(), kRankTolerance) == n_x();
}

Eigen::MatrixXd LtiSystem::observability_matrix(Eigen::Index depth) const
{
    Eigen::MatrixXd obs(n_y() * depth, n_x());
    Eigen::MatrixXd block = c_;
    for (Eigen::Index i = 0; i < depth; ++i) {
        obs.middleRows(i * n_y(), n_y()) = block;
        block = block * a_;
    }
    return obs;
}

Eigen::MatrixXd LtiSystem::toeplitz(Eigen::Index depth) const
{
    const Eigen::Index p = n_y(), m = n_u();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(p * depth, m * depth);
    // Markov parameters: D, CB, CAB, ...
    std::vector<Eigen::MatrixXd> markov;
    markov.push_back(d_);
    Eigen::MatrixXd ab = b_;
    for (Eigen::Index k = 1; k < depth; ++k) {
        markov.push_back(c_ * ab);
        ab = a_ * ab;
    }
    for (Eigen::Index i = 0; i < depth; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) t.block(i * p, j * m, p, m) = markov[i - j];
    return t;
}

SimulationResult simulate(const LtiSystem& sys, const Eigen::VectorXd& x0, const Eigen::MatrixXd& u)
{
    require(x0.size() == sys.n_x(), ErrorCode::DimensionMismatch, "x0 has wrong dimension");
    require(u.cols() == sys.n_u(), ErrorCode::DimensionMismatch, "u has wrong column count");
    const Eigen::Index t = u.rows();
    SimulationResult r{Eigen::MatrixXd(t + 1, sys.n_x()), Eigen::MatrixXd(t, sys.n_y())};
    Eigen::VectorXd x = x0;
    r.x.row(0) = x.transpose();
    for (Eigen::Index k = 0; k < t; ++k) {
        const Eigen::VectorXd uk = u.row(k).transpose();
        r.y.row(k) = (sys.c() * x + sys.d() * uk).transpose();
        x = sys.a() * x + sys.b() * uk;
        r.x.row(k + 1) = x.transpose();
    }
    return r;
}

LtiSystem random_lti(Eigen::Index n_x, Eigen::Index n_u, Eigen::Index n_y, std::mt19937_64& rng)
{
    std::normal_distribution<double> n01;
    auto draw = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n01(rng);
        return m;
    };
    for (;;) {
        Eigen::MatrixXd a = draw(n_x, n_x);
        const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
        if (rho < 1e-6) continue;
        a *= 0.9 / rho;
        LtiSystem sys(a, draw(n_x, n_u), draw(n_y, n_x), draw(n_y, n_u));
        if (sys.is_controllable()) return sys;
    }
}

double initial_state_residual(const LtiSystem& sys, const Eigen::VectorXd& u_stacked, const Eigen::VectorXd& y_stacked)
{
    const Eigen::Index depth = u_stacked.size() / sys.n_u();
    require(y_stacked.size() == depth * sys.n_y(), ErrorCode::DimensionMismatch, "stacked u/y lengths disagree");
    const Eigen::VectorXd free = y_stacked - sys.toeplitz(depth) * u_stacked;
    const double ny = y_stacked.norm();
    const Eigen::MatrixXd obs = sys.observability_matrix(depth);
    const Eigen::VectorXd x0 = obs.completeOrthogonalDecomposition().solve(free);
    const double res = (obs * x0 - free).norm();
    return ny > 0.0 ? res / ny : res;
}

namespace {

LemmaReport run_trials(const LtiSystem& sys, const Eigen::MatrixXd& u_data, Eigen::Index depth, Eigen::Index trials,
                       std::mt19937_64& rng)
{
    std::normal_distribution<double> n01;
    LemmaReport rep;
    rep.trials = trials;
    rep.required_rank = sys.n_u() * (depth + sys.n_x());

    const auto pe = is_persistently_exciting(u_data, depth + sys.n_x());
    rep.min_pe_rank = pe.rank;
    if (!pe.exciting) {
        rep.refused = true;
        return rep;
    }

    Eigen::VectorXd x0(sys.n_x());
    for (auto& v : x0) v = n01(rng);
    const auto data = simulate(sys, x0, u_data);
    const auto hu = build_hankel(u_data, depth);
    const auto hy = build_hankel(data.y, depth);
    const Eigen::MatrixXd stacked = linalg::vstack({&hu.data, &hy.data});
    const auto cod = stacked.completeOrthogonalDecomposition();

    double sum = 0.0;
    for (Eigen::Index t = 0; t < trials; ++t) {
        Eigen::VectorXd xs(sys.n_x());
        for (auto& v : xs) v = n01(rng);
        Eigen::MatrixXd ul(depth, sys.n_u());
        for (Eigen::Index j = 0; j < ul.cols(); ++j)
            for (Eigen::Index i = 0; i < ul.rows(); ++i) ul(i, j) = n01(rng);
        const auto fresh = simulate(sys, xs, ul);
        Eigen::VectorXd target(stacked.rows());
        target << linalg::stack_rows(ul), linalg::stack_rows(fresh.y);
        const Eigen::VectorXd g = cod.solve(target);
        const double res = (stacked * g - target).norm() / target.norm();
        rep.max_residual = std::max(rep.max_residual, res);
        sum += res;
    }
    rep.mean_residual = trials > 0 ? sum / static_cast<double>(trials) : 0.0;
    return rep;
}

} // namespace

LemmaReport verify_fundamental_lemma(const LtiSystem& sys, const Eigen::MatrixXd& u_data, Eigen::Index depth,
                                     Eigen::Index trials, std::uint64_t seed)
{
    require(sys.is_controllable(), ErrorCode::NotControllable, "fundamental lemma needs a controllable system");
    require(u_data.cols() == sys.n_u(), ErrorCode::DimensionMismatch, "data input has wrong column count");
    std::mt19937_64 rng(seed);
    return run_trials(sys, u_data, depth, trials, rng);
}

LemmaReport verify_fundamental_lemma(const LtiSystem& sys, Eigen::Index t, Eigen::Index depth, Eigen::Index trials,
                                     std::uint64_t seed)
{
    require(sys.is_controllable(), ErrorCode::NotControllable, "fundamental lemma needs a controllable system");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd u(t, sys.n_u());
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            for (Eigen::Index i = 0; i < u.rows(); ++i) u(i, j) = unif(rng);
        if (is_persistently_exciting(u, depth + sys.n_x()).exciting) break;
    }
    return run_trials(sys, u, depth, trials, rng);
}

} // namespace deeepc
