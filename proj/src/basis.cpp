#include "deeepc/basis.hpp"

#include "deeepc/error.hpp"
#include "deeepc/linalg.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace deeepc {

namespace {

const Real kPi = boost::math::constants::pi<Real>();

// P_n(t) and P_n'(t) by the three-term recurrence.
std::pair<Real, Real> legendre_with_derivative(Eigen::Index n, const Real& t)
{
    Real p0 = 1, p1 = t;
    if (n == 0) return {p0, Real(0)};
    for (Eigen::Index k = 2; k <= n; ++k) {
        Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const Real dp = n * (t * p1 - p0) / (t * t - 1);
    return {p1, dp};
}

Real legendre(Eigen::Index n, const Real& t)
{
    Real p0 = 1, p1 = t;
    if (n == 0) return p0;
    for (Eigen::Index k = 2; k <= n; ++k) {
        Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

Real member_1d(FamilyKind kind, Interval dom, Eigen::Index i, const Real& x)
{
    const Real len = Real(dom.hi) - Real(dom.lo);
    if (kind == FamilyKind::Legendre) {
        const Real t = (2 * x - Real(dom.lo) - Real(dom.hi)) / len;
        return sqrt(Real(2 * i + 1) / len) * legendre(i, t);
    }
    if (i == 0) return 1 / sqrt(len);
    const Eigen::Index k = (i + 1) / 2;
    const Real arg = 2 * kPi * k * (x - Real(dom.lo)) / len;
    return sqrt(2 / len) * ((i % 2 == 1) ? cos(arg) : sin(arg));
}

OrthonormalFamily one_d(FamilyKind kind, Eigen::Index members, Interval dom, Eigen::Index nodes)
{
    require(members >= 1, ErrorCode::InvalidConfig, "family needs at least one member");
    require(dom.lo < dom.hi && std::isfinite(dom.lo) && std::isfinite(dom.hi), ErrorCode::InvalidConfig,
            "family domain must be a finite interval with lo < hi");
    if (nodes <= 0) nodes = default_quadrature_nodes(kind, members);
    const auto q = gauss_legendre(nodes, dom.lo, dom.hi);

    OrthonormalFamily f;
    f.kind = kind;
    f.domain = {dom};
    f.factor_kinds = {kind};
    f.points = {q.nodes};
    f.weights = q.weights;
    for (Eigen::Index i = 0; i < members; ++i) {
        std::vector<Real> col(q.nodes.size());
        for (std::size_t p = 0; p < q.nodes.size(); ++p) col[p] = member_1d(kind, dom, i, q.nodes[p]);
        f.values.push_back(std::move(col));
        f.orders.push_back({i});
    }
    const double dev = f.gram_deviation();
    require(dev <= kGramRejectTolerance, ErrorCode::QuadratureTooCoarse,
            "Gram deviation " + std::to_string(dev) + " with " + std::to_string(nodes) + " nodes");
    return f;
}

} // namespace

Quadrature gauss_legendre(Eigen::Index n, double a, double b)
{
    require(n >= 1, ErrorCode::InvalidConfig, "quadrature needs at least one node");
    require(a < b, ErrorCode::InvalidConfig, "quadrature interval must have a < b");
    Quadrature q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    const Real half = (Real(b) - Real(a)) / 2, mid = (Real(b) + Real(a)) / 2;
    const Real eps = std::numeric_limits<Real>::epsilon() * 16;
    for (Eigen::Index i = 0; i < n; ++i) {
        Real t = cos(kPi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
        Real dp = 1;
        for (int it = 0; it < 100; ++it) {
            auto [p, d] = legendre_with_derivative(n, t);
            dp = d;
            const Real step = p / d;
            t -= step;
            if (abs(step) < eps) break;
        }
        dp = legendre_with_derivative(n, t).second;
        // Nodes come out in decreasing t; store ascending.
        const auto k = static_cast<std::size_t>(n - 1 - i);
        q.nodes[k] = mid + half * t;
        q.weights[k] = half * 2 / ((1 - t * t) * dp * dp);
    }
    return q;
}

Eigen::Index default_quadrature_nodes(FamilyKind kind, Eigen::Index members)
{
    // Polynomial products up to degree 2(members - 1) are exact; trigonometric ones need more room.
    if (kind == FamilyKind::Fourier) return 2 * members + 24;
    return 2 * members + 8;
}

OrthonormalFamily legendre_family(Eigen::Index members, Interval domain, Eigen::Index nodes)
{
    return one_d(FamilyKind::Legendre, members, domain, nodes);
}

OrthonormalFamily fourier_family(Eigen::Index members, Interval domain, Eigen::Index nodes)
{
    return one_d(FamilyKind::Fourier, members, domain, nodes);
}

Real OrthonormalFamily::evaluate(Eigen::Index i, const std::vector<Real>& x) const
{
    require(i >= 0 && i < size(), ErrorCode::InvalidConfig, "member index out of range");
    require(static_cast<Eigen::Index>(x.size()) == dim(), ErrorCode::DimensionMismatch, "point has wrong dimension");
    Real out = 1;
    for (std::size_t d = 0; d < x.size(); ++d)
        out *= member_1d(factor_kinds[d], domain[d], orders[static_cast<std::size_t>(i)][d], x[d]);
    return out;
}

Eigen::MatrixXd OrthonormalFamily::gram() const
{
    const Eigen::Index n = size();
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            Real s = 0;
            const auto& a = values[static_cast<std::size_t>(i)];
            const auto& b = values[static_cast<std::size_t>(j)];
            for (std::size_t p = 0; p < weights.size(); ++p) s += weights[p] * a[p] * b[p];
            g(i, j) = g(j, i) = static_cast<double>(s);
        }
    return g;
}

double OrthonormalFamily::gram_deviation() const
{
    const auto g = gram();
    return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

OrthonormalFamily tensor_product_family(const OrthonormalFamily& f1, const OrthonormalFamily& f2)
{
    require(f1.dim() == 1 && f2.dim() == 1, ErrorCode::InvalidConfig,
            "tensor product needs two one-dimensional factors");
    require(f1.gram_deviation() <= kGramRejectTolerance && f2.gram_deviation() <= kGramRejectTolerance,
            ErrorCode::QuadratureTooCoarse, "factor quadrature too coarse");
    OrthonormalFamily t;
    t.kind = FamilyKind::Tensor;
    t.domain = {f1.domain[0], f2.domain[0]};
    t.factor_kinds = {f1.factor_kinds[0], f2.factor_kinds[0]};
    const std::size_t n1 = f1.weights.size(), n2 = f2.weights.size();
    t.points.assign(2, std::vector<Real>(n1 * n2));
    t.weights.resize(n1 * n2);
    for (std::size_t a = 0; a < n1; ++a)
        for (std::size_t b = 0; b < n2; ++b) {
            const std::size_t p = a * n2 + b;
            t.points[0][p] = f1.points[0][a];
            t.points[1][p] = f2.points[0][b];
            t.weights[p] = f1.weights[a] * f2.weights[b];
        }
    for (Eigen::Index i = 0; i < f1.size(); ++i)
        for (Eigen::Index j = 0; j < f2.size(); ++j) {
            std::vector<Real> col(n1 * n2);
            const auto& v1 = f1.values[static_cast<std::size_t>(i)];
            const auto& v2 = f2.values[static_cast<std::size_t>(j)];
            for (std::size_t a = 0; a < n1; ++a)
                for (std::size_t b = 0; b < n2; ++b) col[a * n2 + b] = v1[a] * v2[b];
            t.values.push_back(std::move(col));
            t.orders.push_back({f1.orders[static_cast<std::size_t>(i)][0], f2.orders[static_cast<std::size_t>(j)][0]});
        }
    const double dev = t.gram_deviation();
    require(dev <= kGramRejectTolerance, ErrorCode::QuadratureTooCoarse,
            "tensor Gram deviation " + std::to_string(dev));
    return t;
}

TruncationReport truncation_error_curve(const RealFunction& f, const OrthonormalFamily& fam,
                                        const std::vector<Eigen::Index>& orders)
{
    require(fam.size() >= 1 && fam.grid_size() >= 1, ErrorCode::InvalidConfig, "empty family");
    const double dev = fam.gram_deviation();
    require(dev <= kGramRejectTolerance, ErrorCode::QuadratureTooCoarse,
            "family Gram deviation " + std::to_string(dev));
    for (auto n : orders)
        require(n >= 0 && n <= fam.size(), ErrorCode::InvalidConfig, "truncation order exceeds the family size");

    const std::size_t np = fam.weights.size();
    std::vector<Real> fv(np);
    std::vector<Real> x(static_cast<std::size_t>(fam.dim()));
    for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = fam.points[d][p];
        fv[p] = f(x);
        require(isfinite(fv[p]), ErrorCode::InvalidConfig, "target function is not finite on the grid");
    }
    Real norm_sq = 0;
    for (std::size_t p = 0; p < np; ++p) norm_sq += fam.weights[p] * fv[p] * fv[p];
    std::vector<Real> c(static_cast<std::size_t>(fam.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
        Real s = 0;
        for (std::size_t p = 0; p < np; ++p) s += fam.weights[p] * fv[p] * fam.values[i][p];
        c[i] = s;
    }

    TruncationReport r;
    r.orders = orders;
    r.f_norm = static_cast<double>(sqrt(norm_sq));
    for (const auto& ci : c) r.coefficients.push_back(static_cast<double>(ci));
    Real min_rem = norm_sq;
    const double scale = std::max(static_cast<double>(norm_sq), 1e-300);
    for (auto n : orders) {
        Real partial = 0;
        for (Eigen::Index i = 0; i < n; ++i) partial += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)];
        const Real formula = norm_sq - partial;
        min_rem = std::min(min_rem, formula);
        Real direct = 0;
        for (std::size_t p = 0; p < np; ++p) {
            Real e = fv[p];
            for (Eigen::Index i = 0; i < n; ++i)
                e -= c[static_cast<std::size_t>(i)] * fam.values[static_cast<std::size_t>(i)][p];
            direct += fam.weights[p] * e * e;
        }
        r.formula_sq.push_back(static_cast<double>(formula));
        r.direct_sq.push_back(static_cast<double>(direct));
        r.error_norms.push_back(static_cast<double>(sqrt(formula > 0 ? formula : Real(0))));
        r.max_disagreement = std::max(r.max_disagreement, static_cast<double>(abs(formula - direct)) / scale);
    }
    r.min_remainder = static_cast<double>(min_rem);
    for (std::size_t k = 0; k < r.error_norms.size(); ++k) {
        if (r.error_norms[k] > r.f_norm + 1e-8) r.bounded = false;
        if (k == 0) continue;
        const bool later = r.orders[k] > r.orders[k - 1];
        // Compare in extended precision so the tail is not lost to rounding.
        const Real prev = Real(r.formula_sq[k - 1]), cur = Real(r.formula_sq[k]);
        if (later && r.error_norms[k] > r.error_norms[k - 1]) r.non_increasing = false;
        if (later && !(cur < prev)) r.strictly_decreasing = false;
    }
    return r;
}

TruncationReport truncation_error_curve(const std::function<Real(const Real&)>& f, const OrthonormalFamily& fam,
                                        const std::vector<Eigen::Index>& orders)
{
    require(fam.dim() == 1, ErrorCode::DimensionMismatch, "one-dimensional target needs a 1-D family");
    return truncation_error_curve([&](const std::vector<Real>& x) { return f(x[0]); }, fam, orders);
}

PartialStateMap partial_state_map(const Eigen::MatrixXd& c)
{
    PartialStateMap m;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        if (c.col(j).cwiseAbs().maxCoeff() > 0.0) m.columns.push_back(j);
    require(!m.columns.empty() && static_cast<Eigen::Index>(m.columns.size()) <= c.rows(), ErrorCode::InvalidConfig,
            "C needs between 1 and n_y nonzero columns");
    m.c_reduced.resize(c.rows(), static_cast<Eigen::Index>(m.columns.size()));
    for (std::size_t i = 0; i < m.columns.size(); ++i) m.c_reduced.col(static_cast<Eigen::Index>(i)) = c.col(m.columns[i]);
    require(linalg::numerical_rank(m.c_reduced, 1e-10) == m.c_reduced.cols(), ErrorCode::InvalidConfig,
            "nonzero columns of C are linearly dependent");
    const Eigen::MatrixXd ctc = m.c_reduced.transpose() * m.c_reduced;
    m.left_inverse = ctc.ldlt().solve(m.c_reduced.transpose());
    return m;
}

StructuralReport verify_partial_state_map(const Eigen::MatrixXd& c, const OrthonormalFamily& fam, Eigen::Index samples,
                                          std::uint64_t seed)
{
    const auto map = partial_state_map(c);
    const auto nr = static_cast<Eigen::Index>(map.columns.size());
    require(fam.dim() == nr, ErrorCode::DimensionMismatch, "family dimension must equal the number of nonzero columns of C");

    StructuralReport r;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (Eigen::Index s = 0; s < samples; ++s) {
        Eigen::VectorXd x(c.cols());
        for (Eigen::Index j = 0; j < c.cols(); ++j) x(j) = n01(rng);
        for (Eigen::Index d = 0; d < nr; ++d) {
            const auto& dom = fam.domain[static_cast<std::size_t>(d)];
            x(map.columns[static_cast<std::size_t>(d)]) = dom.lo + (dom.hi - dom.lo) * unit(rng);
        }
        const Eigen::VectorXd xr = map(c * x);
        for (Eigen::Index d = 0; d < nr; ++d)
            r.reconstruction_error =
                std::max(r.reconstruction_error, std::abs(xr(d) - x(map.columns[static_cast<std::size_t>(d)])));
    }

    // Push every grid point forward through C' and back, then evaluate the members there.
    const std::size_t np = fam.weights.size();
    std::vector<std::vector<Real>> composed(static_cast<std::size_t>(fam.size()), std::vector<Real>(np));
    std::vector<Real> pt(static_cast<std::size_t>(nr));
    for (std::size_t p = 0; p < np; ++p) {
        Eigen::VectorXd xr(nr);
        for (Eigen::Index d = 0; d < nr; ++d) xr(d) = static_cast<double>(fam.points[static_cast<std::size_t>(d)][p]);
        const Eigen::VectorXd back = map(map.c_reduced * xr);
        for (Eigen::Index d = 0; d < nr; ++d) pt[static_cast<std::size_t>(d)] = Real(back(d));
        for (Eigen::Index i = 0; i < fam.size(); ++i) composed[static_cast<std::size_t>(i)][p] = fam.evaluate(i, pt);
    }
    const auto g_ref = fam.gram();
    for (Eigen::Index i = 0; i < fam.size(); ++i)
        for (Eigen::Index j = i; j < fam.size(); ++j) {
            Real s = 0;
            for (std::size_t p = 0; p < np; ++p)
                s += fam.weights[p] * composed[static_cast<std::size_t>(i)][p] * composed[static_cast<std::size_t>(j)][p];
            r.gram_gap = std::max(r.gram_gap, std::abs(static_cast<double>(s) - g_ref(i, j)));
        }
    return r;
}

} // namespace deeepc
