#include "deeepc/cost_model.hpp"

#include "deeepc/error.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace deeepc {

EconCostModel EconCostModel::zeros(Eigen::Index n_z, Eigen::Index n_v, Eigen::Index n_c)
{
    EconCostModel m;
    m.q_z = Eigen::VectorXd::Zero(n_z);
    m.p_z = Eigen::VectorXd::Zero(n_z);
    m.q_v = Eigen::VectorXd::Zero(n_v);
    m.p_v = Eigen::VectorXd::Zero(n_v);
    m.g = Eigen::MatrixXd::Zero(n_c, n_z);
    return m;
}

Eigen::Index EconCostModel::parameter_count() const { return 2 * n_z() + 2 * n_v() + 2 + g.size(); }

Eigen::VectorXd EconCostModel::parameters() const
{
    Eigen::VectorXd flat(parameter_count());
    flat << q_z, p_z, b_z, q_v, p_v, b_v, Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    return flat;
}

void EconCostModel::set_parameters(const Eigen::VectorXd& flat)
{
    require(flat.size() == parameter_count(), ErrorCode::DimensionMismatch, "cost parameter vector has wrong size");
    Eigen::Index o = 0;
    const Eigen::Index nz = n_z(), nv = n_v();
    q_z = flat.segment(o, nz), o += nz;
    p_z = flat.segment(o, nz), o += nz;
    b_z = flat(o++);
    q_v = flat.segment(o, nv), o += nv;
    p_v = flat.segment(o, nv), o += nv;
    b_v = flat(o++);
    g = Eigen::Map<const Eigen::MatrixXd>(flat.data() + o, g.rows(), g.cols());
}

void EconCostModel::validate() const
{
    require(p_z.size() == n_z() && g.cols() == n_z(), ErrorCode::DimensionMismatch, "cost model z-dimensions disagree");
    require(p_v.size() == n_v(), ErrorCode::DimensionMismatch, "cost model v-dimensions disagree");
    require(parameters().allFinite(), ErrorCode::NonFiniteLoss, "cost model has non-finite parameters");
}

void EconCostModel::write(std::ostream& out) const
{
    out << "deeepc-cost 1\n" << "dims " << n_z() << ' ' << n_v() << ' ' << n_c() << "\n";
    const Eigen::VectorXd flat = parameters();
    out << "count " << flat.size() << "\n";
    out.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(sizeof(double) * flat.size()));
}

EconCostModel EconCostModel::read(std::istream& in)
{
    std::string tag, key;
    int version = 0;
    Eigen::Index nz = 0, nv = 0, nc = 0, count = 0;
    in >> tag >> version >> key >> nz >> nv >> nc;
    require(tag == "deeepc-cost" && key == "dims", ErrorCode::Io, "bad cost model header");
    in >> key >> count;
    require(key == "count", ErrorCode::Io, "bad cost model header");
    in.get();
    auto m = zeros(nz, nv, nc);
    require(m.parameter_count() == count, ErrorCode::Io, "cost parameter count does not match header");
    Eigen::VectorXd flat(count);
    in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(sizeof(double) * count));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(double) * count), ErrorCode::Io, "truncated cost payload");
    m.set_parameters(flat);
    return m;
}

CostEval eval_cost(const EconCostModel& m, const Eigen::VectorXd& z, const Eigen::VectorXd& v)
{
    require(z.size() == m.n_z() && v.size() == m.n_v(), ErrorCode::DimensionMismatch, "eval_cost: dimension mismatch");
    const Eigen::VectorXd qz = m.qz_diag();
    const Eigen::VectorXd qv = m.qv_diag();
    CostEval e;
    e.value = (qz.array() * z.array().square()).sum() + m.p_z.dot(z) + m.b_z + (qv.array() * v.array().square()).sum() +
              m.p_v.dot(v) + m.b_v;
    e.grad_z = 2.0 * qz.cwiseProduct(z) + m.p_z;
    e.grad_v = 2.0 * qv.cwiseProduct(v) + m.p_v;
    return e;
}

Eigen::VectorXd eval_cost_batch(const EconCostModel& m, const Eigen::MatrixXd& z, const Eigen::MatrixXd& v)
{
    require(z.cols() == m.n_z() && v.cols() == m.n_v() && z.rows() == v.rows(), ErrorCode::DimensionMismatch,
            "eval_cost_batch: dimension mismatch");
    const Eigen::VectorXd qz = m.qz_diag();
    const Eigen::VectorXd qv = m.qv_diag();
    Eigen::VectorXd c = z.array().square().matrix() * qz + z * m.p_z + v.array().square().matrix() * qv + v * m.p_v;
    c.array() += m.b_z + m.b_v;
    return c;
}

CostBackward cost_backward(const EconCostModel& m, const Eigen::MatrixXd& z, const Eigen::MatrixXd& v,
                           const Eigen::VectorXd& weights)
{
    require(z.rows() == weights.size() && v.rows() == weights.size(), ErrorCode::DimensionMismatch,
            "cost_backward: batch size mismatch");
    const Eigen::VectorXd qz = m.qz_diag();
    const Eigen::VectorXd qv = m.qv_diag();
    const Eigen::Index nz = m.n_z(), nv = m.n_v();

    CostBackward out;
    out.params = Eigen::VectorXd::Zero(m.parameter_count());
    Eigen::Index o = 0;
    out.params.segment(o, nz) = qz.cwiseProduct(z.array().square().matrix().transpose() * weights), o += nz;
    out.params.segment(o, nz) = z.transpose() * weights, o += nz;
    out.params(o++) = weights.sum();
    out.params.segment(o, nv) = qv.cwiseProduct(v.array().square().matrix().transpose() * weights), o += nv;
    out.params.segment(o, nv) = v.transpose() * weights, o += nv;
    out.params(o++) = weights.sum();

    out.z = 2.0 * z * qz.asDiagonal();
    out.z.rowwise() += m.p_z.transpose();
    out.z.array().colwise() *= weights.array();
    out.v = 2.0 * v * qv.asDiagonal();
    out.v.rowwise() += m.p_v.transpose();
    out.v.array().colwise() *= weights.array();
    return out;
}

Eigen::VectorXd reconstruct_output(const EconCostModel& m, const Eigen::VectorXd& z)
{
    require(z.size() == m.n_z(), ErrorCode::DimensionMismatch, "reconstruct_output: z has wrong dimension");
    return m.g * z;
}

Eigen::MatrixXd reconstruct_output_batch(const EconCostModel& m, const Eigen::MatrixXd& z)
{
    require(z.cols() == m.n_z(), ErrorCode::DimensionMismatch, "reconstruct_output: z has wrong dimension");
    return z * m.g.transpose();
}

double HorizonCost::evaluate(const Eigen::VectorXd& z_stacked, const Eigen::VectorXd& v_stacked) const
{
    require(z_stacked.size() == quad_z.size() && v_stacked.size() == quad_v.size(), ErrorCode::DimensionMismatch,
            "HorizonCost::evaluate: dimension mismatch");
    return (quad_z.array() * z_stacked.array().square()).sum() + linear_z.dot(z_stacked) +
           (quad_v.array() * v_stacked.array().square()).sum() + linear_v.dot(v_stacked) + constant;
}

HorizonCost quad_form_matrices(const EconCostModel& m, Eigen::Index n_p, double lambda)
{
    require(n_p >= 1, ErrorCode::InvalidConfig, "horizon must be positive");
    HorizonCost h;
    h.quad_z = (lambda * m.qz_diag()).replicate(n_p, 1);
    h.quad_v = (lambda * m.qv_diag()).replicate(n_p, 1);
    h.linear_z = (lambda * m.p_z).replicate(n_p, 1);
    h.linear_v = (lambda * m.p_v).replicate(n_p, 1);
    h.constant = static_cast<double>(n_p) * lambda * (m.b_z + m.b_v);
    return h;
}

} // namespace deeepc
