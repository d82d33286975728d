#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace deeepc {

/// Working precision for quadrature sums; double round-off would hide the tail of a truncation curve.
using Real = boost::multiprecision::cpp_bin_float_50;

struct Interval {
    double lo = -1.0;
    double hi = 1.0;
};

struct Quadrature {
    std::vector<Real> nodes;
    std::vector<Real> weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b].
Quadrature gauss_legendre(Eigen::Index n, double a, double b);

enum class FamilyKind { Legendre, Fourier, Tensor };

/// Gram deviation above which a family is rejected.
inline constexpr double kGramRejectTolerance = 1e-6;
/// Gram deviation the verification suite requires.
inline constexpr double kGramTolerance = 1e-8;

/**
 * @brief Orthonormal functions on an interval or a box, tabulated on a
 * product quadrature grid.
 *
 * values[i][p] is member i at grid point p. Construction fails with
 * QuadratureTooCoarse when the discrete Gram matrix deviates from the identity
 * by more than kGramRejectTolerance.
 */
struct OrthonormalFamily {
    FamilyKind kind = FamilyKind::Legendre;
    std::vector<Interval> domain;
    /// points[d][p]: coordinate d of grid point p.
    std::vector<std::vector<Real>> points;
    std::vector<Real> weights;
    std::vector<std::vector<Real>> values;
    /// Per-member factor orders (one entry per dimension).
    std::vector<std::vector<Eigen::Index>> orders;
    /// 1-D family kind along each dimension.
    std::vector<FamilyKind> factor_kinds;

    Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(domain.size()); }
    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(values.size()); }
    Eigen::Index grid_size() const noexcept { return static_cast<Eigen::Index>(weights.size()); }

    /// Member i at an arbitrary point of the domain.
    Real evaluate(Eigen::Index i, const std::vector<Real>& x) const;

    Eigen::MatrixXd gram() const;
    /// max |Gram - I|.
    double gram_deviation() const;
};

/// Default node count for a family with `members` functions.
Eigen::Index default_quadrature_nodes(FamilyKind kind, Eigen::Index members);

/// First `members` normalized Legendre polynomials on [a, b]; nodes <= 0 picks the default.
OrthonormalFamily legendre_family(Eigen::Index members, Interval domain, Eigen::Index nodes = 0);
/// 1, cos, sin, cos 2, sin 2, ... normalized on [a, b].
OrthonormalFamily fourier_family(Eigen::Index members, Interval domain, Eigen::Index nodes = 0);

/// Products f1_i(x1) f2_j(x2) for all pairs (i, j), on the product grid. Both factors must be 1-D.
OrthonormalFamily tensor_product_family(const OrthonormalFamily& f1, const OrthonormalFamily& f2);

struct TruncationReport {
    std::vector<Eigen::Index> orders;
    /// ||E_n|| from the norm identity ||f||^2 - sum_{i<n} c_i^2.
    std::vector<double> error_norms;
    std::vector<double> formula_sq;
    /// Direct quadrature of (f - sum_{i<n} c_i phi_i)^2.
    std::vector<double> direct_sq;
    std::vector<double> coefficients;
    double f_norm = 0.0;
    /// Smallest ||f||^2 - partial sum seen (Bessel check).
    double min_remainder = 0.0;
    bool non_increasing = true;
    bool strictly_decreasing = true;
    bool bounded = true;
    /// max |formula - direct| / ||f||^2.
    double max_disagreement = 0.0;
};

using RealFunction = std::function<Real(const std::vector<Real>&)>;

/// `orders` are expansion lengths n (number of leading members used), each in [0, size()].
TruncationReport truncation_error_curve(const RealFunction& f, const OrthonormalFamily& fam,
                                        const std::vector<Eigen::Index>& orders);

/// 1-D convenience wrapper.
TruncationReport truncation_error_curve(const std::function<Real(const Real&)>& f, const OrthonormalFamily& fam,
                                        const std::vector<Eigen::Index>& orders);

/**
 * Output-to-partial-state map x^r = (C'^T C')^{-1} C'^T y for C' = the nonzero
 * columns of C.
 */
struct PartialStateMap {
    std::vector<Eigen::Index> columns;
    Eigen::MatrixXd c_reduced;
    Eigen::MatrixXd left_inverse;

    Eigen::VectorXd operator()(const Eigen::VectorXd& y) const { return left_inverse * y; }
};

PartialStateMap partial_state_map(const Eigen::MatrixXd& c);

struct StructuralReport {
    /// max |x^r(C x) - x[columns]| over sampled states.
    double reconstruction_error = 0.0;
    /// max |Gram of phi(x^r(y)) on pushed-forward nodes - Gram of phi on the x^r grid|.
    double gram_gap = 0.0;
};

/**
 * Samples states in the family box (extra states random), maps them through C
 * and back, and compares Gram matrices of the composed functions. The family
 * dimension must equal the number of nonzero columns of C.
 */
StructuralReport verify_partial_state_map(const Eigen::MatrixXd& c, const OrthonormalFamily& fam, Eigen::Index samples,
                                          std::uint64_t seed);

} // namespace deeepc
