#include "deeepc/qp.hpp"

#include "deeepc/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace deeepc {

std::string_view to_string(QpStatus s)
{
    switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

double KktResiduals::max() const noexcept { return std::max({stationarity, primal, complementarity}); }

void QpProblem::validate() const
{
    const Eigen::Index n = f.size();
    require(h.rows() == n && h.cols() == n, ErrorCode::DimensionMismatch, "QP Hessian must be n x n");
    require(aeq.rows() == beq.size() && (aeq.rows() == 0 || aeq.cols() == n), ErrorCode::DimensionMismatch,
            "QP equality system has inconsistent dimensions");
    require(ain.rows() == lb_in.size() && ain.rows() == ub_in.size() && (ain.rows() == 0 || ain.cols() == n),
            ErrorCode::DimensionMismatch, "QP inequality system has inconsistent dimensions");
    require(var_lb.size() == 0 || var_lb.size() == n, ErrorCode::DimensionMismatch, "var_lb has wrong size");
    require(var_ub.size() == 0 || var_ub.size() == n, ErrorCode::DimensionMismatch, "var_ub has wrong size");
    require(h.allFinite() && f.allFinite() && aeq.allFinite() && beq.allFinite() && ain.allFinite(),
            ErrorCode::InvalidConfig, "QP data must be finite");
}

bool is_psd(const Eigen::MatrixXd& h)
{
    if (h.rows() != h.cols()) return false;
    if (h.size() == 0) return true;
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    const double shift = 1e-10 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    Eigen::MatrixXd shifted = 0.5 * (h + h.transpose());
    shifted.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    return llt.info() == Eigen::Success;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Bounds collapse to equalities when lb == ub; the rest become rows of C x >= d.
struct StandardForm {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::MatrixXd c;
    Eigen::VectorXd d;
    bool bounds_conflict = false;
};

StandardForm standardize(const QpProblem& p)
{
    const Eigen::Index n = p.dim();
    std::vector<Eigen::VectorXd> eq_rows, in_rows;
    std::vector<double> eq_rhs, in_rhs;
    StandardForm sf;

    for (Eigen::Index i = 0; i < p.aeq.rows(); ++i) {
        eq_rows.push_back(p.aeq.row(i).transpose());
        eq_rhs.push_back(p.beq(i));
    }
    auto add_two_sided = [&](const Eigen::VectorXd& row, double lo, double hi) {
        if (lo > hi) sf.bounds_conflict = true;
        if (std::isfinite(lo) && std::isfinite(hi) && lo == hi) {
            eq_rows.push_back(row);
            eq_rhs.push_back(lo);
            return;
        }
        if (std::isfinite(lo)) {
            in_rows.push_back(row);
            in_rhs.push_back(lo);
        }
        if (std::isfinite(hi)) {
            in_rows.push_back(-row);
            in_rhs.push_back(-hi);
        }
    };
    for (Eigen::Index i = 0; i < p.ain.rows(); ++i) add_two_sided(p.ain.row(i).transpose(), p.lb_in(i), p.ub_in(i));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lo = p.var_lb.size() ? p.var_lb(i) : -kInf;
        const double hi = p.var_ub.size() ? p.var_ub(i) : kInf;
        if (!std::isfinite(lo) && !std::isfinite(hi)) continue;
        add_two_sided(Eigen::VectorXd::Unit(n, i), lo, hi);
    }

    sf.a.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
    sf.b.resize(sf.a.rows());
    for (Eigen::Index i = 0; i < sf.a.rows(); ++i) {
        sf.a.row(i) = eq_rows[i].transpose();
        sf.b(i) = eq_rhs[i];
    }
    sf.c.resize(static_cast<Eigen::Index>(in_rows.size()), n);
    sf.d.resize(sf.c.rows());
    for (Eigen::Index i = 0; i < sf.c.rows(); ++i) {
        sf.c.row(i) = in_rows[i].transpose();
        sf.d(i) = in_rhs[i];
    }
    return sf;
}

// Newton systems share one factorization of [M A'; A 0] per iteration.
class KktSystem {
public:
    KktSystem(const Eigen::MatrixXd& m, const Eigen::MatrixXd& a) : n_(m.rows()), me_(a.rows())
    {
        k_.setZero(n_ + me_, n_ + me_);
        k_.topLeftCorner(n_, n_) = m;
        k_.topRightCorner(n_, me_) = a.transpose();
        k_.bottomLeftCorner(me_, n_) = a;
        Eigen::MatrixXd reg = k_;
        // The equality rows are independent after reduction, so only the Hessian block is shifted.
        reg.diagonal().head(n_).array() += 1e-13 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
        reg.diagonal().tail(me_).array() -= 1e-14;
        lu_.compute(reg);
    }

    /// Solves [M A'; A 0][dx; w] = [r1; r2] with two refinement sweeps against the unregularized matrix.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const
    {
        Eigen::VectorXd sol = lu_.solve(rhs);
        for (int i = 0; i < 2; ++i) sol += lu_.solve(rhs - k_ * sol);
        return sol;
    }

private:
    Eigen::Index n_, me_;
    Eigen::MatrixXd k_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv)
{
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    return alpha;
}

} // namespace

QpSolution solve(const QpProblem& p, const QpOptions& opts)
{
    const auto t0 = std::chrono::steady_clock::now();
    p.validate();
    require(is_psd(p.h), ErrorCode::NotPSD, "QP Hessian is not positive semidefinite");

    const Eigen::Index n = p.dim();
    QpSolution sol;
    auto finish = [&](QpSolution& s) -> QpSolution& {
        s.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (s.x.size() == n) s.objective = p.objective(s.x);
        return s;
    };

    StandardForm sf = standardize(p);
    if (sf.bounds_conflict) {
        sol.x = Eigen::VectorXd::Zero(n);
        sol.status = QpStatus::Infeasible;
        return finish(sol);
    }

    // Drop linearly dependent equality rows; report inconsistent ones with a separating direction.
    if (sf.a.rows() > 0) {
        const Eigen::MatrixXd at = sf.a.transpose();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
        qr.setThreshold(1e-10);
        const Eigen::Index r = qr.rank();
        const Eigen::VectorXd x_ls = sf.a.completeOrthogonalDecomposition().solve(sf.b);
        const Eigen::VectorXd w = sf.b - sf.a * x_ls;
        if (w.norm() > 1e-9 * std::max(1.0, sf.b.norm())) {
            sol.x = x_ls;
            sol.status = QpStatus::Infeasible;
            sol.certificate = w;
            sol.kkt.primal = inf_norm(w) / std::max(1.0, inf_norm(sf.b));
            return finish(sol);
        }
        if (r < sf.a.rows()) {
            std::vector<Eigen::Index> keep(qr.colsPermutation().indices().data(),
                                           qr.colsPermutation().indices().data() + r);
            std::sort(keep.begin(), keep.end());
            Eigen::MatrixXd a(r, n);
            Eigen::VectorXd b(r);
            for (Eigen::Index i = 0; i < r; ++i) {
                a.row(i) = sf.a.row(keep[i]);
                b(i) = sf.b(keep[i]);
            }
            sf.a = std::move(a);
            sf.b = std::move(b);
        }
    }

    const Eigen::Index me = sf.a.rows(), mi = sf.c.rows();

    // Ruiz equilibration of [H A' C'; A 0 0; C 0 0]: x = D xs, and the rows of A and C are scaled by
    // ea and ec. Slack penalties and tiny regularizers can leave the raw Hessian spanning twenty
    // orders of magnitude, which no refinement recovers.
    Eigen::VectorXd dx_scale = Eigen::VectorXd::Ones(n), ea = Eigen::VectorXd::Ones(me), ec = Eigen::VectorXd::Ones(mi);
    Eigen::MatrixXd h = p.h, a = sf.a, c = sf.c;
    for (int pass = 0; pass < 15; ++pass) {
        Eigen::VectorXd col(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double m = h.col(j).cwiseAbs().maxCoeff();
            if (me > 0) m = std::max(m, a.col(j).cwiseAbs().maxCoeff());
            if (mi > 0) m = std::max(m, c.col(j).cwiseAbs().maxCoeff());
            col(j) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
        }
        Eigen::VectorXd ra(me), rc(mi);
        for (Eigen::Index i = 0; i < me; ++i) {
            const double m = a.row(i).cwiseAbs().maxCoeff();
            ra(i) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
        }
        for (Eigen::Index i = 0; i < mi; ++i) {
            const double m = c.row(i).cwiseAbs().maxCoeff();
            rc(i) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
        }
        h = col.asDiagonal() * h * col.asDiagonal();
        a = ra.asDiagonal() * a * col.asDiagonal();
        c = rc.asDiagonal() * c * col.asDiagonal();
        dx_scale = dx_scale.cwiseProduct(col);
        ea = ea.cwiseProduct(ra);
        ec = ec.cwiseProduct(rc);
        if ((col.array() - 1.0).abs().maxCoeff() < 1e-3 && (me == 0 || (ra.array() - 1.0).abs().maxCoeff() < 1e-3) &&
            (mi == 0 || (rc.array() - 1.0).abs().maxCoeff() < 1e-3))
            break;
    }
    h = 0.5 * (h + h.transpose());
    const Eigen::VectorXd f = dx_scale.cwiseProduct(p.f);
    const Eigen::VectorXd b = ea.cwiseProduct(sf.b);
    const Eigen::VectorXd d = ec.cwiseProduct(sf.d);
    auto objective = [&](const Eigen::VectorXd& xs) { return 0.5 * xs.dot(h * xs) + f.dot(xs) + p.constant; };

    // Starting point: minimize 1/2 x'(H + C'C)x + (f - C'd)'x subject to the equalities.
    Eigen::VectorXd x, y(me), s(mi), z(mi);
    {
        KktSystem kkt0(h + c.transpose() * c, a);
        Eigen::VectorXd rhs(n + me);
        rhs << -f + c.transpose() * d, b;
        const Eigen::VectorXd sol0 = kkt0.solve(rhs);
        x = sol0.head(n);
        y = -sol0.tail(me);
        s = (c * x - d).cwiseAbs().cwiseMax(1.0);
        z = Eigen::VectorXd::Ones(mi);
    }

    auto residuals_of = [](const Eigen::MatrixXd& hh, const Eigen::VectorXd& ff, const Eigen::MatrixXd& aa,
                           const Eigen::VectorXd& bb, const Eigen::MatrixXd& cc, const Eigen::VectorXd& dd,
                           double obj, const Eigen::VectorXd& xx, const Eigen::VectorXd& yy,
                           const Eigen::VectorXd& ss, const Eigen::VectorXd& zz, Eigen::VectorXd& rd,
                           Eigen::VectorXd& rp, Eigen::VectorXd& ri) {
        const Eigen::VectorXd hx = hh * xx;
        const Eigen::VectorXd aty = aa.transpose() * yy;
        const Eigen::VectorXd ctz = cc.transpose() * zz;
        rd = hx + ff - aty - ctz;
        const Eigen::VectorXd ax = aa * xx;
        const Eigen::VectorXd cx = cc * xx;
        rp = ax - bb;
        ri = cx - ss - dd;
        KktResiduals k;
        k.stationarity = inf_norm(rd) / std::max({1.0, inf_norm(hx), inf_norm(ff), inf_norm(aty), inf_norm(ctz)});
        const double pe = inf_norm(rp) / std::max({1.0, inf_norm(bb), inf_norm(ax)});
        const double pi = inf_norm(ri) / std::max({1.0, inf_norm(dd), inf_norm(cx)});
        k.primal = std::max(pe, pi);
        const double mu = ss.size() > 0 ? ss.dot(zz) / static_cast<double>(ss.size()) : 0.0;
        k.complementarity = mu / std::max(1.0, std::abs(obj));
        return k;
    };
    auto residuals = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& yy, const Eigen::VectorXd& ss,
                         const Eigen::VectorXd& zz, Eigen::VectorXd& rd, Eigen::VectorXd& rp, Eigen::VectorXd& ri) {
        return residuals_of(h, f, a, b, c, d, objective(xx), xx, yy, ss, zz, rd, rp, ri);
    };
    // Residuals of the unscaled problem at the unscaled iterate; these are what the caller sees.
    auto report = [&](QpSolution& out, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, const Eigen::VectorXd& ss,
                      const Eigen::VectorXd& zs) {
        out.x = dx_scale.cwiseProduct(xs);
        Eigen::VectorXd r1, r2, r3;
        out.kkt = residuals_of(p.h, p.f, sf.a, sf.b, sf.c, sf.d, p.objective(out.x), out.x, ea.cwiseProduct(ys),
                               ss.cwiseQuotient(ec), ec.cwiseProduct(zs), r1, r2, r3);
    };

    // Re-solves the equality-constrained problem on the active set guessed from (s, z). Interior
    // point iterates only approach the solution to the barrier tolerance; the polished point is kept
    // if it is feasible, has sign-correct multipliers and does not worsen the residuals.
    auto polish = [&](Eigen::VectorXd& xx, Eigen::VectorXd& yy, Eigen::VectorXd& ss, Eigen::VectorXd& zz,
                      const KktResiduals& current) {
        std::vector<Eigen::Index> act;
        for (Eigen::Index i = 0; i < mi; ++i)
            if (zz(i) > ss(i)) act.push_back(i);
        const Eigen::Index na = static_cast<Eigen::Index>(act.size());
        Eigen::MatrixXd aa(me + na, n);
        Eigen::VectorXd bb(me + na);
        aa.topRows(me) = a;
        bb.head(me) = b;
        for (Eigen::Index i = 0; i < na; ++i) {
            aa.row(me + i) = c.row(act[static_cast<std::size_t>(i)]);
            bb(me + i) = d(act[static_cast<std::size_t>(i)]);
        }
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n + me + na, n + me + na);
        full.topLeftCorner(n, n) = h;
        full.topRightCorner(n, me + na) = aa.transpose();
        full.bottomLeftCorner(me + na, n) = aa;
        // Singular means flat directions or dependent active rows; any point picked there would be arbitrary.
        Eigen::FullPivLU<Eigen::MatrixXd> lu(full);
        lu.setThreshold(1e-11);
        if (!lu.isInvertible()) return;
        Eigen::VectorXd rhs(n + me + na);
        rhs << -f, bb;
        Eigen::VectorXd step = lu.solve(rhs);
        for (int i = 0; i < 2; ++i) step += lu.solve(rhs - full * step);
        if (!step.allFinite()) return;
        const Eigen::VectorXd xp = step.head(n);
        const Eigen::VectorXd mult = -step.tail(me + na);
        if (mi > 0 && (c * xp - d).minCoeff() < -1e-9 * std::max(1.0, inf_norm(d))) return;
        if (na > 0 && mult.tail(na).minCoeff() < -1e-9 * std::max(1.0, inf_norm(mult))) return;

        Eigen::VectorXd yp = mult.head(me), zp = Eigen::VectorXd::Zero(mi);
        for (Eigen::Index i = 0; i < na; ++i) zp(act[static_cast<std::size_t>(i)]) = std::max(0.0, mult(me + i));
        const Eigen::VectorXd sp = (c * xp - d).cwiseMax(0.0);
        Eigen::VectorXd r1, r2, r3;
        if (residuals(xp, yp, sp, zp, r1, r2, r3).max() <= std::max(current.max(), opts.tol)) {
            xx = xp;
            yy = yp;
            ss = sp;
            zz = zp;
        }
    };

    Eigen::VectorXd rd, rp, ri;
    KktResiduals best_kkt;
    Eigen::VectorXd best_x = x, best_y = y, best_s = s, best_z = z;
    double best_score = kInf;
    bool diverged = false;
    const double blowup = 1e14 * std::max({1.0, inf_norm(f), h.size() ? h.cwiseAbs().maxCoeff() : 0.0});

    int it = 0;
    for (;; ++it) {
        const KktResiduals k = residuals(x, y, s, z, rd, rp, ri);
        if (k.max() < best_score) {
            best_score = k.max();
            best_kkt = k;
            best_x = x;
            best_y = y;
            best_s = s;
            best_z = z;
        }
        if (k.max() <= opts.tol) {
            polish(x, y, s, z, k);
            report(sol, x, y, s, z);
            sol.status = QpStatus::Optimal;
            sol.iterations = it;
            return finish(sol);
        }
        if (it >= opts.max_iter) break;
        if (mi > 0 && (inf_norm(z) > blowup || inf_norm(x) > blowup)) {
            diverged = true;
            break;
        }

        const double mu = mi > 0 ? s.dot(z) / static_cast<double>(mi) : 0.0;
        const Eigen::VectorXd w = z.cwiseQuotient(s);
        Eigen::MatrixXd m = h;
        if (mi > 0) m.noalias() += c.transpose() * w.asDiagonal() * c;
        const KktSystem kkt(m, a);

        auto newton = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                          Eigen::VectorXd& dz) {
            Eigen::VectorXd rhs(n + me);
            const Eigen::VectorXd tmp = (rc + z.cwiseProduct(ri)).cwiseQuotient(s);
            rhs.head(n) = -rd - c.transpose() * tmp;
            rhs.tail(me) = -rp;
            const Eigen::VectorXd step = kkt.solve(rhs);
            dx = step.head(n);
            dy = -step.tail(me);
            ds = c * dx + ri;
            dz = -(rc + z.cwiseProduct(ds)).cwiseQuotient(s);
        };

        Eigen::VectorXd dx, dy, ds, dz;
        const Eigen::VectorXd sz = s.cwiseProduct(z);
        newton(sz, dx, dy, ds, dz);
        if (mi > 0) {
            const double alpha_aff = std::min(max_step(s, ds), max_step(z, dz));
            const double mu_aff = (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(mi);
            const double sigma = std::pow(mu_aff / mu, 3.0);
            const Eigen::VectorXd rc = sz + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(mi, sigma * mu);
            newton(rc, dx, dy, ds, dz);
        }
        const double alpha = mi > 0 ? std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz))) : 1.0;
        if (!dx.allFinite() || !dz.allFinite() || !ds.allFinite() || !dy.allFinite()) break;
        x += alpha * dx;
        y += alpha * dy;
        s += alpha * ds;
        z += alpha * dz;
    }

    sol.iterations = it;
    if (!diverged) {
        // A stalled run often has the right active set already.
        polish(best_x, best_y, best_s, best_z, best_kkt);
        Eigen::VectorXd r1, r2, r3;
        best_kkt = residuals(best_x, best_y, best_s, best_z, r1, r2, r3);
        if (best_kkt.max() <= opts.tol) {
            report(sol, best_x, best_y, best_s, best_z);
            sol.status = QpStatus::Optimal;
            return finish(sol);
        }
    }
    report(sol, best_x, best_y, best_s, best_z);
    // An iterate that never closes the primal gap is reported as infeasible; a small gap means slow convergence.
    sol.status = (diverged || best_kkt.primal > 1e-6) ? QpStatus::Infeasible : QpStatus::MaxIter;
    return finish(sol);
}

} // namespace deeepc
