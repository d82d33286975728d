#include <doctest.h>

#include "expect_error.hpp"

#include "deeepc/basis.hpp"
#include "deeepc/plants.hpp"

#include <cmath>

using namespace deeepc;

namespace {

const Interval kUnit{-1.0, 1.0};

std::vector<Eigen::Index> range(Eigen::Index lo, Eigen::Index hi)
{
    std::vector<Eigen::Index> v;
    for (Eigen::Index n = lo; n <= hi; ++n) v.push_back(n);
    return v;
}

} // namespace

TEST_CASE("Gauss-Legendre rule is exact for polynomials up to degree 2n - 1")
{
    const auto q = gauss_legendre(5, 0.0, 2.0);
    for (int k = 0; k <= 9; ++k) {
        Real sum = 0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i) sum += q.weights[i] * pow(q.nodes[i], k);
        // integral of x^k over [0, 2]
        const Real exact = pow(Real(2), k + 1) / (k + 1);
        CHECK(static_cast<double>(abs(sum - exact)) < 1e-40);
    }
    CHECK_ERROR_CODE(gauss_legendre(0, -1.0, 1.0), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(gauss_legendre(4, 1.0, 1.0), ErrorCode::InvalidConfig);
}

TEST_CASE("normalized Legendre members match the closed forms")
{
    const auto f = legendre_family(4, kUnit);
    for (std::size_t p = 0; p < f.points[0].size(); ++p) {
        const double x = static_cast<double>(f.points[0][p]);
        CHECK(static_cast<double>(f.values[0][p]) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
        CHECK(static_cast<double>(f.values[1][p]) == doctest::Approx(std::sqrt(1.5) * x).epsilon(1e-13));
        CHECK(static_cast<double>(f.values[2][p]) ==
              doctest::Approx(std::sqrt(2.5) * 0.5 * (3 * x * x - 1)).epsilon(1e-12));
    }
    CHECK(static_cast<double>(f.evaluate(3, {Real(0.3)})) ==
          doctest::Approx(std::sqrt(3.5) * 0.5 * (5 * 0.027 - 3 * 0.3)).epsilon(1e-12));
}

TEST_CASE("one-dimensional families are orthonormal on shifted intervals")
{
    CHECK(legendre_family(10, {0.0, 2.0}).gram_deviation() <= kGramTolerance);
    CHECK(legendre_family(10, {-3.0, 5.0}).gram_deviation() <= kGramTolerance);
    CHECK(fourier_family(9, kUnit).gram_deviation() <= kGramTolerance);
    CHECK(fourier_family(7, {0.0, 1.0}).gram_deviation() <= kGramTolerance);
}

TEST_CASE("Legendre x Legendre up to order 5 gives a 36 x 36 identity Gram")
{
    const auto f = legendre_family(6, kUnit);
    const auto t = tensor_product_family(f, f);
    CHECK(t.dim() == 2);
    CHECK(t.size() == 36);
    const Eigen::MatrixXd g = t.gram();
    CHECK(g.rows() == 36);
    CHECK((g - Eigen::MatrixXd::Identity(36, 36)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("the first tensor member is the normalized constant")
{
    const auto t = tensor_product_family(legendre_family(3, kUnit), legendre_family(3, {0.0, 4.0}));
    // 1 / sqrt(|domain|) with area 2 * 4
    const double c = 1.0 / std::sqrt(8.0);
    for (const auto& v : t.values[0]) CHECK(static_cast<double>(v) == doctest::Approx(c).epsilon(1e-14));
    CHECK(t.gram()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.orders[0] == std::vector<Eigen::Index>{0, 0});
}

TEST_CASE("tensor products reject factors that are not one-dimensional intervals")
{
    const auto f = legendre_family(3, kUnit);
    const auto t = tensor_product_family(f, f);
    CHECK_ERROR_CODE(tensor_product_family(t, f), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(tensor_product_family(f, t), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(legendre_family(3, {1.0, -1.0}), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(legendre_family(0, kUnit), ErrorCode::InvalidConfig);
}

TEST_CASE("too few quadrature nodes raise QuadratureTooCoarse")
{
    CHECK_ERROR_CODE(legendre_family(10, kUnit, 4), ErrorCode::QuadratureTooCoarse);
    CHECK_ERROR_CODE(fourier_family(9, kUnit, 3), ErrorCode::QuadratureTooCoarse);
    // Enough nodes for exact products of degree 2(members - 1).
    CHECK(legendre_family(10, kUnit, 10).gram_deviation() <= kGramTolerance);
}

TEST_CASE("a family member is represented exactly once it is included")
{
    const auto f = legendre_family(8, kUnit);
    const auto r = truncation_error_curve([&](const std::vector<Real>& x) { return f.evaluate(3, x); }, f, range(0, 8));
    for (std::size_t k = 0; k < r.orders.size(); ++k) {
        if (r.orders[k] >= 4) CHECK(r.error_norms[k] <= 1e-14);
        else CHECK(r.error_norms[k] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("x^3 on [-1, 1] has zero truncation error from four members on")
{
    const auto f = legendre_family(10, kUnit);
    const auto r = truncation_error_curve([](const Real& x) { return x * x * x; }, f, range(1, 10));
    // ||x^3||^2 = 2/7
    CHECK(r.f_norm == doctest::Approx(std::sqrt(2.0 / 7.0)).epsilon(1e-14));
    for (std::size_t k = 0; k < r.orders.size(); ++k) {
        if (r.orders[k] >= 4) CHECK(r.error_norms[k] <= 1e-14);
        else CHECK(r.error_norms[k] > 1e-3);
    }
    // Only the odd coefficients up to degree 3 survive.
    CHECK(std::abs(r.coefficients[0]) <= 1e-15);
    CHECK(std::abs(r.coefficients[2]) <= 1e-15);
    CHECK(std::abs(r.coefficients[1]) > 0.1);
    CHECK(std::abs(r.coefficients[3]) > 0.1);
}

TEST_CASE("exp truncation error decreases strictly and stays below the norm")
{
    const auto f = legendre_family(13, kUnit);
    const auto r = truncation_error_curve([](const Real& x) { return exp(x); }, f, range(1, 12));
    // ||exp||^2 on [-1, 1] = sinh(2)
    CHECK(r.f_norm == doctest::Approx(std::sqrt(std::sinh(2.0))).epsilon(1e-14));
    CHECK(r.strictly_decreasing);
    CHECK(r.bounded);
    for (std::size_t k = 0; k < r.error_norms.size(); ++k) {
        CHECK(r.error_norms[k] < r.f_norm);
        if (k > 0) CHECK(r.error_norms[k] < r.error_norms[k - 1]);
    }
    CHECK(r.error_norms.back() < 1e-10);
}

TEST_CASE("the norm identity agrees with direct quadrature and never goes negative")
{
    const auto f = legendre_family(13, kUnit);
    for (auto g : std::vector<std::function<Real(const Real&)>>{
             [](const Real& x) { return exp(x); }, [](const Real& x) { return sin(3 * x); },
             [](const Real& x) { return 1 / (2 + x); }}) {
        const auto r = truncation_error_curve(g, f, range(0, 13));
        CHECK(r.max_disagreement <= 1e-6);
        CHECK(r.min_remainder >= -1e-8);
        CHECK(r.non_increasing);
        for (std::size_t k = 0; k < r.orders.size(); ++k)
            CHECK(std::abs(r.formula_sq[k] - r.direct_sq[k]) <= 1e-6 * r.f_norm * r.f_norm);
    }
}

TEST_CASE("truncation on a 2-D tensor family")
{
    const auto f = legendre_family(4, kUnit);
    const auto t = tensor_product_family(f, f);
    // x1 * x2^2 lies in the span of the tensor members
    const auto r = truncation_error_curve([](const std::vector<Real>& x) { return x[0] * x[1] * x[1]; }, t,
                                          {0, 4, 8, static_cast<Eigen::Index>(t.size())});
    CHECK(r.error_norms.back() <= 1e-14);
    CHECK(r.non_increasing);
    CHECK(r.min_remainder >= -1e-8);
}

TEST_CASE("truncation orders beyond the family size are rejected")
{
    const auto f = legendre_family(5, kUnit);
    CHECK_ERROR_CODE(truncation_error_curve([](const Real& x) { return x; }, f, {6}), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(truncation_error_curve([](const Real& x) { return x; }, f, {-1}), ErrorCode::InvalidConfig);
    const auto t = tensor_product_family(f, f);
    CHECK_ERROR_CODE(truncation_error_curve([](const Real& x) { return x; }, t, {1}), ErrorCode::DimensionMismatch);
}

TEST_CASE("partial-state map recovers the measured states of the LTI benchmark")
{
    const PlantSpec spec = builtin_benchmark("lti-3");
    const auto m = partial_state_map(spec.c);
    CHECK(m.columns == std::vector<Eigen::Index>{0, 1});
    CHECK((m.left_inverse * m.c_reduced - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
    const Eigen::Vector3d x(0.3, -0.7, 1.9);
    CHECK((m(spec.c * x) - x.head(2)).cwiseAbs().maxCoeff() <= 1e-14);

    const auto f = legendre_family(4, kUnit);
    const auto rep = verify_partial_state_map(spec.c, tensor_product_family(f, f), 200, 5);
    CHECK(rep.reconstruction_error <= 1e-10);
    CHECK(rep.gram_gap <= 1e-6);
}

TEST_CASE("partial-state map with a mixing output matrix")
{
    Eigen::MatrixXd c(3, 4);
    c << 1, 0, 2, 0, //
        0, 0, 1, 0,  //
        1, 0, 0, 0;
    const auto m = partial_state_map(c);
    CHECK(m.columns == std::vector<Eigen::Index>{0, 2});
    const auto f = legendre_family(3, kUnit);
    const auto rep = verify_partial_state_map(c, tensor_product_family(f, f), 100, 9);
    CHECK(rep.reconstruction_error <= 1e-10);
    CHECK(rep.gram_gap <= 1e-6);
    CHECK_ERROR_CODE(verify_partial_state_map(c, f, 10, 1), ErrorCode::DimensionMismatch);
}

TEST_CASE("partial-state map rejects dependent or empty columns")
{
    Eigen::MatrixXd dependent(2, 3);
    dependent << 1, 2, 0, //
        2, 4, 0;
    CHECK_ERROR_CODE(partial_state_map(dependent), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(partial_state_map(Eigen::MatrixXd::Zero(2, 3)), ErrorCode::InvalidConfig);
}
