#include "fixtures.hpp"

#include <random>

namespace fixture {

double QuadraticPlant::cost(const Eigen::VectorXd& y, const Eigen::VectorXd& u) const
{
    return y.dot(qy.cwiseProduct(y)) + py.dot(y) + u.dot(qu.cwiseProduct(u)) + pu.dot(u) + b;
}

QuadraticPlant quadratic_plant(Eigen::Index n_x, Eigen::Index n_u, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const deeepc::LtiSystem base = deeepc::random_lti(n_x, n_u, n_x, rng);
    std::uniform_real_distribution<double> w(0.5, 2.0), lin(-1.0, 1.0);
    QuadraticPlant p{deeepc::LtiSystem(base.a(), base.b(), Eigen::MatrixXd::Identity(n_x, n_x),
                                       Eigen::MatrixXd::Zero(n_x, n_u)),
                     Eigen::VectorXd(n_x), Eigen::VectorXd(n_x), Eigen::VectorXd(n_u), Eigen::VectorXd(n_u), 1.5, 0};
    for (Eigen::Index i = 0; i < n_x; ++i) {
        p.qy(i) = w(rng);
        p.py(i) = lin(rng);
    }
    for (Eigen::Index i = 0; i < n_u; ++i) {
        p.qu(i) = w(rng);
        p.pu(i) = lin(rng);
    }
    return p;
}

deeepc::Dataset quadratic_dataset(const QuadraticPlant& p, Eigen::Index rows, Eigen::Index hankel_rows,
                                  std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const Eigen::Index n_u = p.sys.n_u();
    Eigen::MatrixXd u(rows, n_u);
    for (Eigen::Index k = 0; k < rows; ++k)
        for (Eigen::Index j = 0; j < n_u; ++j) u(k, j) = unif(rng);
    const auto sim = deeepc::simulate(p.sys, Eigen::VectorXd::Zero(p.sys.n_x()), u);
    Eigen::MatrixXd y(rows, p.sys.n_y()), c(rows, 1);
    for (Eigen::Index k = 0; k < rows; ++k) {
        y.row(k) = (p.sys.c() * sim.x.row(k + 1).transpose()).transpose();
        c(k, 0) = p.cost(y.row(k).transpose(), u.row(k).transpose());
    }
    return deeepc::Dataset(deeepc::Trajectory(u, 1.0), deeepc::Trajectory(y, 1.0), deeepc::Trajectory(c, 1.0),
                           {hankel_rows, rows - hankel_rows}, {p.yc_col});
}

deeepc::EconCostModel lti_cost(const deeepc::PlantSpec& s)
{
    auto m = deeepc::EconCostModel::zeros(s.n_y(), s.n_u(), static_cast<Eigen::Index>(s.yc_index.size()));
    m.q_z = s.w_y.array().log();
    m.p_z = -2.0 * s.w_y.cwiseProduct(s.y_ref);
    m.b_z = s.w_y.dot(s.y_ref.cwiseProduct(s.y_ref));
    m.q_v = s.w_u.array().log();
    for (std::size_t i = 0; i < s.yc_index.size(); ++i) m.g(static_cast<Eigen::Index>(i), s.yc_index[i]) = 1.0;
    return m;
}

} // namespace fixture
