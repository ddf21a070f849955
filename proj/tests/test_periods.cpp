#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zn/periods.hpp"
#include "zn/error.hpp"

using namespace zn;

namespace {

CVec line_points(int n) {
    CVec v;
    for (int i = 0; i < n; ++i) v.push_back(Complex(i));
    return v;
}

/* complete elliptic integral via the arithmetic-geometric mean */
Real agm_k(const Real& kprime) {
    Real a(1), b(kprime);
    for (int i = 0; i < 60; ++i) {
        Real a2 = (a + b) / 2;
        Real b2 = sqrt(a * b);
        a = a2;
        b = b2;
    }
    return pi_value() / (2 * a);
}

Real tol(int bits) { return eps_work(unsigned(bits)); }

/* distance from d to the lattice {2 pi i n + tau m} */
Real lattice_residual(const Complex& d, const Complex& tau) {
    Real twopi = 2 * pi_value();
    Real m = d.re / tau.re;                       /* Re(2 pi i) = 0 */
    Real n = (d.im - m * tau.im) / twopi;
    Real rm = round(m);
    Real rn = round(n);
    Complex rec = Complex(Real(0), twopi * rn) + tau * rm;
    return abs(d - rec);
}

} // namespace

TEST_CASE("square-root periods match the arithmetic-geometric mean") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto cycles = elementary_cycles(s);
    DifferentialRef w = DifferentialRef::holo(1, 1);

    Real k01 = agm_k(sqrt(Real(3)) / 2);   /* around the (0,1) cut */
    Real k12 = agm_k(Real(1) / 2);         /* around the (1,2) cut */

    QuadResult p1 = integrate_cycle(s, w, cycles[0]);
    QuadResult p2 = integrate_cycle(s, w, cycles[1]);
    QuadResult p3 = integrate_cycle(s, w, cycles[2]);

    CHECK(abs(abs(p1.value) - 2 * k01) < tol(100));
    CHECK(abs(p1.value.re) < tol(100));            /* pure imaginary */
    CHECK(abs(abs(p2.value) - 2 * k12) < tol(100));
    CHECK(abs(p2.value.im) < tol(100));            /* pure real */
    CHECK(abs(abs(p3.value) - 2 * k01) < tol(100));
    CHECK(p1.error < tol(90));
}

TEST_CASE("exact differentials integrate to zero on loops") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto cycles = elementary_cycles(s);
    DifferentialRef e1 = DifferentialRef::exact_part(1);
    DifferentialRef e4 = DifferentialRef::exact_part(4);
    for (const Cycle& c : cycles) {
        CHECK(abs(integrate_cycle(s, e1, c).value) < tol(96));
        CHECK(abs(integrate_cycle(s, e4, c).value) < tol(96));
    }
}

TEST_CASE("pole and weight rows share loop integrals") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto cycles = elementary_cycles(s);
    OrderedPartition part = make_partition({{1, 2}, {3, 4}});
    /* degree reduction: the single weight row integrates like every pole row */
    DifferentialRef z1 = DifferentialRef::zeta(part, 1);
    for (int p : {1, 3, 4}) {
        DifferentialRef mu = DifferentialRef::mu(part, p);
        Complex a = integrate_cycle(s, z1, cycles[0]).value;
        Complex b = integrate_cycle(s, mu, cycles[0]).value;
        CHECK(abs(a - b) < tol(96));
    }
}

TEST_CASE("normalized matrices on the four-point square-root curve") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    PeriodData pd = build_period_data(s);
    REQUIRE(pd.holos.size() == 1);

    Complex norm = pd.sigma[0][0] * pd.A[0][0];
    CHECK(abs(norm - Complex(Real(0), 2 * pi_value())) < tol(100));
    CHECK(pd.tau[0][0].re < 0);

    /* consistency of the combination helpers with the assembled matrices */
    CHECK(abs(pd.a_period(pd.holos[0], 1) - pd.A[0][0]) == 0);
    CHECK(abs(pd.b_period(pd.holos[0], 1) - pd.B[0][0]) == 0);
    CHECK_THROWS_WITH_AS(pd.a_period(pd.holos[0], 2), doctest::Contains("InvalidIndex"), Error);
    CHECK_THROWS_WITH_AS(pd.holo_index(1, 2), doctest::Contains("InvalidIndex"), Error);
    CHECK(pd.holo_index(1, 1) == 0);
    CHECK(pd.d_coeff(1).size() == 1);
    CHECK(abs(pd.d_coeff(1)[0] - pd.sigma[0][0]) == 0);
}

TEST_CASE("bilinear alternating sum vanishes on a genus-two curve") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 3, line_points(6));
    PeriodData pd = build_period_data(s);
    REQUIRE(pd.holos.size() == 2);
    Real scale(0);
    Complex acc(0);
    for (int i = 0; i < 2; ++i) {
        acc = acc + pd.A[size_t(i)][0] * pd.B[size_t(i)][1] - pd.B[size_t(i)][0] * pd.A[size_t(i)][1];
        scale = std::max(scale, abs(pd.A[size_t(i)][0]) * abs(pd.B[size_t(i)][1]));
    }
    CHECK(abs(acc) < scale * tol(96));

    Real asym(0);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            asym = std::max(asym, abs(pd.tau[size_t(i)][size_t(j)] - pd.tau[size_t(j)][size_t(i)]));
    CHECK(asym < tol(80));

    std::vector<std::vector<Real>> re;
    re.assign(2, std::vector<Real>(2, Real(0)));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) re[size_t(i)][size_t(j)] = pd.tau[size_t(i)][size_t(j)].re;
    auto eig = symmetric_eigenvalues(re);
    CHECK(eig.back() < 0);
}

TEST_CASE("branch values of the normalized abel sums are torsion") {
    set_precision_bits(128);

    /* order two on the square-root curve */
    {
        CurveSpec s = validate_curve(2, 2, line_points(4));
        PeriodData pd = build_period_data(s);
        std::vector<Complex> u;
        for (int p = 1; p <= 4; ++p) {
            MultiQuad q = integrate_forms_to_branch(s, pd.holos, p);
            u.push_back(pd.sigma[0][0] * q.values[0]);
        }
        for (int p = 1; p < 4; ++p) {
            Complex d = (u[size_t(p)] - u[0]) * Real(2);
            CHECK(lattice_residual(d, pd.tau[0][0]) < tol(88));
        }
    }

    /* order three on the cube-root curve */
    {
        CVec pts{Complex(0), Complex(1), Complex(2, 1)};
        CurveSpec s = validate_curve(3, 1, pts);
        PeriodData pd = build_period_data(s);
        std::vector<Complex> u;
        for (int p = 1; p <= 3; ++p) {
            MultiQuad q = integrate_forms_to_branch(s, pd.holos, p);
            u.push_back(pd.sigma[0][0] * q.values[0]);
        }
        for (int p = 1; p < 3; ++p) {
            Complex d = (u[size_t(p)] - u[0]) * Real(3);
            CHECK(lattice_residual(d, pd.tau[0][0]) < tol(88));
        }
    }
}

TEST_CASE("paths through a branch point are rejected") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    std::vector<Complex> path{Complex(Real(1) / 2), Complex(Real(3) / 2)};
    std::vector<DifferentialRef> forms{DifferentialRef::holo(1, 1)};
    CHECK_THROWS_WITH_AS(integrate_forms_polyline(s, forms, path, 0),
                         doctest::Contains("PoleOnPath"), Error);
    CHECK_THROWS_WITH_AS(integrate_forms_polyline(s, forms, path, 5),
                         doctest::Contains("InvalidIndex"), Error);
}
