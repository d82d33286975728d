#include "deeepc/hankel.hpp"

#include "deeepc/error.hpp"
#include "deeepc/linalg.hpp"

#include <algorithm>
#include <limits>

namespace deeepc {

HankelMatrix build_hankel(const Eigen::MatrixXd& samples, Eigen::Index depth)
{
    const Eigen::Index t = samples.rows();
    const Eigen::Index m = samples.cols();
    require(depth >= 1, ErrorCode::DepthExceedsLength, "Hankel depth must be at least 1");
    require(t >= depth, ErrorCode::DepthExceedsLength,
            "depth " + std::to_string(depth) + " exceeds length " + std::to_string(t));

    const Eigen::Index cols = t - depth + 1;
    HankelMatrix h{Eigen::MatrixXd(m * depth, cols), depth, m};
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < depth; ++i) h.data.block(i * m, j, m, 1) = samples.row(j + i).transpose();
    return h;
}

HankelMatrix build_hankel(const Trajectory& t, Eigen::Index depth) { return build_hankel(t.values(), depth); }

Eigen::MatrixXd hankel_adjoint(const Eigen::MatrixXd& grad, Eigen::Index depth, Eigen::Index signal_dim,
                               Eigen::Index length)
{
    require(grad.rows() == depth * signal_dim && grad.cols() == length - depth + 1, ErrorCode::DimensionMismatch,
            "gradient does not have Hankel shape");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(length, signal_dim);
    for (Eigen::Index j = 0; j < grad.cols(); ++j)
        for (Eigen::Index i = 0; i < depth; ++i)
            out.row(j + i) += grad.block(i * signal_dim, j, signal_dim, 1).transpose();
    return out;
}

ExcitationReport is_persistently_exciting(const Eigen::MatrixXd& samples, Eigen::Index order)
{
    const auto h = build_hankel(samples, order);
    const auto rank = linalg::numerical_rank(h.data, kRankTolerance);
    return {rank == h.data.rows(), rank};
}

ExcitationReport is_persistently_exciting(const Trajectory& t, Eigen::Index order)
{
    return is_persistently_exciting(t.values(), order);
}

Eigen::MatrixXd HankelPartition::stacked() const { return linalg::vstack({&up, &vp, &zp, &uf, &vf, &zf}); }

namespace {

HankelPartition split_stacked(const Eigen::MatrixXd& m, const HankelBlocks& shape)
{
    HankelPartition p;
    Eigen::Index r = 0;
    auto take = [&](Eigen::Index rows) {
        Eigen::MatrixXd out = m.middleRows(r, rows);
        r += rows;
        return out;
    };
    p.up = take(shape.n_u * shape.t_ini);
    p.vp = take(shape.n_v * shape.t_ini);
    p.zp = take(shape.n_z * shape.t_ini);
    p.uf = take(shape.n_u * shape.n_p);
    p.vf = take(shape.n_v * shape.n_p);
    p.zf = take(shape.n_z * shape.n_p);
    return p;
}

} // namespace

HankelBlocks partition(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, const Eigen::MatrixXd& z, Eigen::Index t_ini,
                       Eigen::Index n_p)
{
    require(t_ini >= 1 && n_p >= 1, ErrorCode::InvalidConfig, "T_ini and N_p must be positive");
    require(u.rows() == z.rows() && (v.cols() == 0 || v.rows() == u.rows()), ErrorCode::LengthMismatch,
            "u, v and z trajectories must have equal length");
    const Eigen::Index depth = t_ini + n_p;

    HankelBlocks b;
    b.t_ini = t_ini;
    b.n_p = n_p;
    b.n_u = u.cols();
    b.n_v = v.cols();
    b.n_z = z.cols();

    const auto hu = build_hankel(u, depth);
    const auto hz = build_hankel(z, depth);
    b.full.up = hu.data.topRows(b.n_u * t_ini);
    b.full.uf = hu.data.bottomRows(b.n_u * n_p);
    b.full.zp = hz.data.topRows(b.n_z * t_ini);
    b.full.zf = hz.data.bottomRows(b.n_z * n_p);
    if (b.n_v > 0) {
        const auto hv = build_hankel(v, depth);
        b.full.vp = hv.data.topRows(b.n_v * t_ini);
        b.full.vf = hv.data.bottomRows(b.n_v * n_p);
    } else {
        b.full.vp = Eigen::MatrixXd(0, hu.columns());
        b.full.vf = Eigen::MatrixXd(0, hu.columns());
    }
    return b;
}

HankelBlocks reduce_svd(const HankelBlocks& b, double tol)
{
    const Eigen::MatrixXd m = b.full.stacked();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();

    const double floor = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(m.rows(), m.cols()));
    const double cut = std::max(tol, floor) * (s.size() ? s(0) : 0.0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cut) ++r;

    HankelReduction red;
    red.rank = r;
    red.singular_values = s;
    red.basis = svd.matrixV().leftCols(r);
    const Eigen::MatrixXd reduced = svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
    red.blocks = split_stacked(reduced, b);

    HankelBlocks out = b;
    out.reduced = std::move(red);
    return out;
}

} // namespace deeepc
