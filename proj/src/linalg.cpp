#include "deeepc/linalg.hpp"

#include <algorithm>

namespace deeepc::linalg {

Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double rel_tol)
{
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    return (s.array() > rel_tol * s(0)).count();
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double rel_tol)
{
    if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    if (s.size() > 0 && s(0) > 0.0)
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) > rel_tol * s(0)) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double lstsq_relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    const double nb = b.norm();
    if (nb == 0.0) return 0.0;
    const Eigen::VectorXd g = a.completeOrthogonalDecomposition().solve(b);
    return (a * g - b).norm() / nb;
}

Eigen::MatrixXd vstack(std::initializer_list<const Eigen::MatrixXd*> blocks)
{
    Eigen::Index rows = 0, cols = -1;
    for (const auto* b : blocks) {
        if (b->rows() == 0) continue;
        rows += b->rows();
        cols = std::max(cols, b->cols());
    }
    if (cols < 0) cols = blocks.size() ? (*blocks.begin())->cols() : 0;
    Eigen::MatrixXd out(rows, cols);
    Eigen::Index r = 0;
    for (const auto* b : blocks) {
        if (b->rows() == 0) continue;
        out.middleRows(r, b->rows()) = *b;
        r += b->rows();
    }
    return out;
}

Eigen::VectorXd stack_rows(const Eigen::MatrixXd& rows)
{
    Eigen::VectorXd out(rows.size());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out.segment(i * rows.cols(), rows.cols()) = rows.row(i).transpose();
    return out;
}

} // namespace deeepc::linalg
