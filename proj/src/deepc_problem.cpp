#include "deeepc/deepc_problem.hpp"

#include "deeepc/error.hpp"
#include "deeepc/linalg.hpp"

#include <vector>

namespace deeepc {

OutputPolytope OutputPolytope::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    require(lo.size() == hi.size(), ErrorCode::DimensionMismatch, "output box bounds differ in size");
    return {Eigen::MatrixXd::Identity(lo.size(), lo.size()), lo, hi};
}

namespace {

// Quadratic pieces of the objective in "value" form: x'Wx + l'x (not yet halved).
struct Objective {
    Eigen::MatrixXd wz;
    Eigen::VectorXd lz;
    Eigen::MatrixXd wv;
    Eigen::VectorXd lv;
    /// Input penalty (D u_hat - e)' Rbar (D u_hat - e).
    Eigen::MatrixXd d;
    Eigen::MatrixXd rbar;
    Eigen::VectorXd e;
    double constant = 0.0;
};

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& blk, Eigen::Index copies)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(blk.rows() * copies, blk.cols() * copies);
    for (Eigen::Index i = 0; i < copies; ++i) out.block(i * blk.rows(), i * blk.cols(), blk.rows(), blk.cols()) = blk;
    return out;
}

void check_ini(const HankelBlocks& b, const IniWindows& ini)
{
    auto ok = [&](const Eigen::MatrixXd& m, Eigen::Index dim) {
        return (dim == 0 && m.size() == 0) || (m.rows() == b.t_ini && m.cols() == dim);
    };
    require(ok(ini.u, b.n_u), ErrorCode::MissingIni, "u_ini must be T_ini x n_u");
    require(ok(ini.v, b.n_v), ErrorCode::MissingIni, "v_ini must be T_ini x n_v");
    require(ok(ini.z, b.n_z), ErrorCode::MissingIni, "z_ini must be T_ini x n_z");
}

DeepcQp assemble(const HankelBlocks& blocks, const Objective& obj, const Eigen::MatrixXd& output_map,
                 const IniWindows& ini, const DeepcWeights& w, const DeepcBounds& bounds)
{
    check_ini(blocks, ini);
    const HankelPartition& p = blocks.active();
    const Eigen::Index ng = p.columns();
    const Eigen::Index nslack = w.no_slack ? 0 : blocks.t_ini * blocks.n_z;
    const Eigen::Index n = ng + nslack;
    const Eigen::Index np = blocks.n_p;

    DeepcQp out;
    out.layout = {ng, nslack};
    QpProblem& q = out.problem;

    const Eigen::MatrixXd du = obj.d * p.uf;
    Eigen::MatrixXd hgg = p.zf.transpose() * obj.wz * p.zf + du.transpose() * obj.rbar * du;
    if (p.vf.rows() > 0) hgg += p.vf.transpose() * obj.wv * p.vf;
    hgg.diagonal().array() += w.beta_g;
    q.h = Eigen::MatrixXd::Zero(n, n);
    q.h.topLeftCorner(ng, ng) = hgg + hgg.transpose();
    if (nslack > 0) q.h.bottomRightCorner(nslack, nslack).diagonal().setConstant(2.0 * w.beta_z);

    q.f = Eigen::VectorXd::Zero(n);
    q.f.head(ng) = p.zf.transpose() * obj.lz - 2.0 * du.transpose() * (obj.rbar * obj.e);
    if (p.vf.rows() > 0) q.f.head(ng) += p.vf.transpose() * obj.lv;
    q.constant = obj.constant + obj.e.dot(obj.rbar * obj.e);

    // Equalities; the slack enters the z-past rows only.
    const Eigen::Index mu = p.up.rows(), mv = p.vp.rows(), mz = p.zp.rows();
    q.aeq = Eigen::MatrixXd::Zero(mu + mv + mz, n);
    q.aeq.block(0, 0, mu, ng) = p.up;
    q.aeq.block(mu, 0, mv, ng) = p.vp;
    q.aeq.block(mu + mv, 0, mz, ng) = p.zp;
    if (nslack > 0) q.aeq.block(mu + mv, ng, mz, nslack) = -Eigen::MatrixXd::Identity(mz, nslack);
    q.beq.resize(mu + mv + mz);
    q.beq << linalg::stack_rows(ini.u), linalg::stack_rows(ini.v), linalg::stack_rows(ini.z);

    // Inequalities: input box on U_f g, output polytope on map * z_hat_j.
    std::vector<Eigen::MatrixXd> rows;
    std::vector<Eigen::VectorXd> los, his;
    if (bounds.u_lb.size() > 0 || bounds.u_ub.size() > 0) {
        require(bounds.u_lb.size() == blocks.n_u && bounds.u_ub.size() == blocks.n_u, ErrorCode::DimensionMismatch,
                "input bounds must have n_u entries");
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p.uf.rows(), n);
        r.leftCols(ng) = p.uf;
        rows.push_back(std::move(r));
        los.push_back(bounds.u_lb.replicate(np, 1));
        his.push_back(bounds.u_ub.replicate(np, 1));
    }
    if (bounds.yc.a.size() > 0) {
        require(output_map.cols() == blocks.n_z && bounds.yc.a.cols() == output_map.rows(),
                ErrorCode::DimensionMismatch, "output polytope does not match the output map");
        const Eigen::MatrixXd sel = bounds.yc.a * output_map;
        for (Eigen::Index j = 0; j < np; ++j) {
            Eigen::MatrixXd r = Eigen::MatrixXd::Zero(sel.rows(), n);
            r.leftCols(ng) = sel * p.zf.middleRows(j * blocks.n_z, blocks.n_z);
            rows.push_back(std::move(r));
            los.push_back(bounds.yc.lo);
            his.push_back(bounds.yc.hi);
        }
    }
    Eigen::Index total = 0;
    for (const auto& r : rows) total += r.rows();
    q.ain.resize(total, n);
    q.lb_in.resize(total);
    q.ub_in.resize(total);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        q.ain.middleRows(off, rows[i].rows()) = rows[i];
        q.lb_in.segment(off, rows[i].rows()) = los[i];
        q.ub_in.segment(off, rows[i].rows()) = his[i];
        off += rows[i].rows();
    }
    return out;
}

} // namespace

DeepcQp assemble_deeepc(const HankelBlocks& blocks, const EconCostModel& model, const IniWindows& ini,
                        const DeepcWeights& weights, const DeepcBounds& bounds)
{
    require(model.n_z() == blocks.n_z && model.n_v() == blocks.n_v, ErrorCode::DimensionMismatch,
            "cost model dimensions do not match the Hankel blocks");
    require(weights.lambda >= 0.0 && weights.beta_z >= 0.0 && weights.beta_g >= 0.0, ErrorCode::InvalidConfig,
            "weights must be nonnegative");
    require(ini.u.rows() == blocks.t_ini && ini.u.cols() == blocks.n_u, ErrorCode::MissingIni,
            "u_ini must be T_ini x n_u");
    const Eigen::Index np = blocks.n_p, nu = blocks.n_u;
    const HorizonCost hc = quad_form_matrices(model, np, weights.lambda);

    Objective obj;
    obj.wz = hc.quad_z.asDiagonal();
    obj.lz = hc.linear_z;
    obj.wv = hc.quad_v.asDiagonal();
    obj.lv = hc.linear_v;
    obj.constant = hc.constant;

    // Input moves: du_0 = u_0 - u_last, du_j = u_j - u_{j-1}.
    obj.d = Eigen::MatrixXd::Identity(np * nu, np * nu);
    for (Eigen::Index j = 1; j < np; ++j) obj.d.block(j * nu, (j - 1) * nu, nu, nu) = -Eigen::MatrixXd::Identity(nu, nu);
    const Eigen::MatrixXd r = weights.r.size() ? weights.r : Eigen::MatrixXd::Zero(nu, nu);
    require(r.rows() == nu && r.cols() == nu, ErrorCode::DimensionMismatch, "R must be n_u x n_u");
    obj.rbar = block_diag(r, np);
    obj.e = Eigen::VectorXd::Zero(np * nu);
    obj.e.head(nu) = ini.u.row(blocks.t_ini - 1).transpose();

    return assemble(blocks, obj, model.g, ini, weights, bounds);
}

DeepcQp assemble_tracking(const HankelBlocks& blocks, const TrackingRefs& refs, const Eigen::MatrixXd& output_map,
                          const IniWindows& ini, const DeepcWeights& weights, const DeepcBounds& bounds)
{
    const Eigen::Index np = blocks.n_p, nu = blocks.n_u, nz = blocks.n_z;
    require(refs.z_ref.rows() == np && refs.z_ref.cols() == nz, ErrorCode::DimensionMismatch,
            "output reference must be N_p x n_z");
    require(refs.u_ref.rows() == np && refs.u_ref.cols() == nu, ErrorCode::DimensionMismatch,
            "input reference must be N_p x n_u");
    require(refs.t.rows() == nz && refs.t.cols() == nz && refs.r.rows() == nu && refs.r.cols() == nu,
            ErrorCode::DimensionMismatch, "tracking weights have wrong shape");

    Objective obj;
    obj.wz = block_diag(refs.t, np);
    const Eigen::VectorXd zr = linalg::stack_rows(refs.z_ref);
    obj.lz = -2.0 * obj.wz * zr;
    obj.constant = zr.dot(obj.wz * zr);
    obj.wv = Eigen::MatrixXd::Zero(np * blocks.n_v, np * blocks.n_v);
    obj.lv = Eigen::VectorXd::Zero(np * blocks.n_v);
    obj.d = Eigen::MatrixXd::Identity(np * nu, np * nu);
    obj.rbar = block_diag(refs.r, np);
    obj.e = linalg::stack_rows(refs.u_ref);
    return assemble(blocks, obj, output_map, ini, weights, bounds);
}

InputPlan extract_input(const HankelBlocks& blocks, const Eigen::VectorXd& g_star)
{
    const HankelPartition& p = blocks.active();
    require(g_star.size() >= p.columns(), ErrorCode::DimensionMismatch, "solution vector shorter than the operator");
    const Eigen::VectorXd u = p.uf * g_star.head(p.columns());
    InputPlan plan;
    plan.sequence.resize(blocks.n_p, blocks.n_u);
    for (Eigen::Index j = 0; j < blocks.n_p; ++j) plan.sequence.row(j) = u.segment(j * blocks.n_u, blocks.n_u).transpose();
    return plan;
}

Eigen::MatrixXd predicted_outputs(const HankelBlocks& blocks, const Eigen::VectorXd& g_star)
{
    const HankelPartition& p = blocks.active();
    require(g_star.size() >= p.columns(), ErrorCode::DimensionMismatch, "solution vector shorter than the operator");
    const Eigen::VectorXd z = p.zf * g_star.head(p.columns());
    Eigen::MatrixXd out(blocks.n_p, blocks.n_z);
    for (Eigen::Index j = 0; j < blocks.n_p; ++j) out.row(j) = z.segment(j * blocks.n_z, blocks.n_z).transpose();
    return out;
}

} // namespace deeepc
