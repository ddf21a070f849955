#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zn/differentials.hpp"

using namespace zn;

namespace {
CVec line_points(int n) {
    CVec v;
    for (int i = 0; i < n; ++i) v.push_back(Complex(i));
    return v;
}
} // namespace

TEST_CASE("spin exponents: exact values and reflection") {
    /* N=2 window: q_{-1/2}(0) = -1/4, q_{-1/2}(1) = 1/4, q_{1/2}(0) = 1/4 */
    CHECK(spin_q(2, -1, 0) == Rat(-1, 4));
    CHECK(spin_q(2, -1, 1) == Rat(1, 4));
    CHECK(spin_q(2, 1, 0) == Rat(1, 4));
    CHECK(spin_q(2, 1, 1) == Rat(-1, 4));
    for (int N : {2, 3, 4, 5}) {
        for (int tl = -(N - 1) - 2 * N; tl <= (N - 1) + 2 * N; tl += 2)
            for (int i = -3; i <= 2 * N; ++i) {
                CHECK(-spin_q(N, tl, i) == spin_q(N, -tl, N - i));
                CHECK(spin_q(N, tl, i) == spin_q(N, tl, i + N));   /* periodicity */
                CHECK(spin_q(N, tl, i) == spin_q(N, tl + 2 * N, i));
            }
        CHECK_THROWS_WITH_AS(spin_q(N, N, 0), doctest::Contains("InvalidIndex"), Error);
    }
}

TEST_CASE("spin exponent pair sums") {
    for (int N : {2, 3, 4, 5}) {
        /* depends only on |i-j| */
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                CHECK(spin_q_pair(N, i, j) == spin_q_pair(N, 0, (i - j + N) % N) );
        CHECK(spin_q_pair(N, 0, 0) == Rat(N * N - 1, 12 * N));
        Rat off_sum(0);
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) off_sum += spin_q_pair(N, i, j);
        CHECK(off_sum == Rat(-(N * N - 1), 24));
    }
}

TEST_CASE("window sums behind the branch product identities") {
    /* q_{-(N-1)/2+r}(N-i) + q_{-(N-1)/2+N-r}(i) = 1/N - [i == r mod N]
       q_{-(N-1)/2+r^-}(i) + q_{-(N-1)/2+r-1}(N-i) = -1/N + [i == r mod N] */
    for (int N : {2, 3, 4, 5})
        for (int r = 0; r < N; ++r)
            for (int i = 0; i < N; ++i) {
                int tl_a = 2 * r - (N - 1);
                int tl_b = 2 * (N - r) - (N - 1);
                Rat lhs = spin_q(N, tl_a, N - i) + spin_q(N, tl_b, i);
                Rat expect = Rat(1, N) - (i % N == r % N ? 1 : 0);
                CHECK(lhs == expect);

                int rm = N - 1 - r;
                int tl_c = 2 * rm - (N - 1);
                int tl_d = 2 * (r - 1) - (N - 1);
                Rat lhs2 = spin_q(N, tl_c, i) + spin_q(N, tl_d, N - i);
                Rat expect2 = Rat(-1, N) + (i % N == r % N ? 1 : 0);
                CHECK(lhs2 == expect2);
            }
}

TEST_CASE("mu evaluation matches the direct product") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto part = make_partition({{1, 2}, {3, 4}});
    SheetPoint x = make_point(s, Complex(5), 0);
    Complex got = eval_form(s, DifferentialRef::mu(part, 1), x);
    /* g^{(block 1)}(lambda_1) = (0-2)(0-3) = 6; in-block factor (5-1) = 4 */
    Complex expect = Complex(6) * Complex(4) / (Complex(5) * x.s);
    CHECK(abs(got - expect) < eps_work(24) * abs(expect));

    /* second sheet flips the sign for N = 2 */
    SheetPoint x1 = make_point(s, Complex(5), 1);
    Complex got1 = eval_form(s, DifferentialRef::mu(part, 1), x1);
    CHECK(abs(got1 + got) < eps_work(24) * abs(got));

    CHECK_THROWS_WITH_AS(eval_form(s, DifferentialRef::mu(part, 9), x),
                         doctest::Contains("InvalidIndex"), Error);
    SheetPoint at_pole = make_point(s, s.lambda(1) + Complex(Real("1e-12")), 0);
    CHECK_THROWS_WITH_AS(eval_form(s, DifferentialRef::mu(part, 1), at_pole),
                         doctest::Contains("PoleHit"), Error);
}

TEST_CASE("holomorphic basis indices and values") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(3, 2, line_points(6));
    int count = 0;
    for (int a = 1; a <= s.N - 1; ++a)
        for (int b = 1; b <= a * s.m - 1; ++b) {
            SheetPoint x = make_point(s, Complex(Real(7), Real(2)), 1);
            Complex v = eval_form(s, DifferentialRef::holo(a, b), x);
            Complex expect = pow_int(x.z, b - 1) / pow_int(x.s, a);
            CHECK(abs(v - expect) < eps_work(24) * abs(expect));
            ++count;
        }
    CHECK(count == s.genus);
    CHECK_THROWS_WITH_AS(eval_form(s, DifferentialRef::holo(3, 1),
                                   make_point(s, Complex(Real(7), Real(2)), 0)),
                         doctest::Contains("InvalidIndex"), Error);
    CHECK_THROWS_WITH_AS(eval_form(s, DifferentialRef::holo(1, 2),
                                   make_point(s, Complex(Real(7), Real(2)), 0)),
                         doctest::Contains("InvalidIndex"), Error);
}

TEST_CASE("zeta polynomial structure for the smallest case") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto part = make_partition({{1, 2}, {3, 4}});
    /* L = 1, j = 1: polynomial part of d/dz(co/z) is the leading coefficient,
       so zeta_1 = (g_{block1} + g_{block2}) dz/s */
    SheetPoint x = make_point(s, Complex(Real(4), Real(3)), 0);
    Complex got = eval_form(s, DifferentialRef::zeta(part, 1), x);
    Complex expect = (block_poly_in(s, part, 1, x.z) + block_poly_in(s, part, 2, x.z)) / x.s;
    CHECK(abs(got - expect) < eps_work(24) * abs(expect));
    CHECK_THROWS_WITH_AS(eval_form(s, DifferentialRef::zeta(part, 2), x),
                         doctest::Contains("InvalidIndex"), Error);
}

TEST_CASE("exact part matches a numerical derivative") {
    set_precision_bits(256);
    CurveSpec s = validate_curve(3, 1, line_points(3));
    int p = 2;
    Complex z(Real(4), Real(2));
    SheetPoint x = make_point(s, z, 0);
    Complex e = eval_form(s, DifferentialRef::exact_part(p), x);
    Real h("1e-25");
    auto g = [&](const Complex& zz) {
        SheetPoint pt = make_point(s, zz, 0);
        return Complex(Real(s.N)) * pow_int(pt.s, s.N - 1) / (zz - s.lambda(p));
    };
    Complex diff = (g(z + Complex(h)) - g(z - Complex(h))) / Complex(2 * h);
    CHECK(abs(e - diff) < Real("1e-45"));
    set_precision_bits(128);
}

TEST_CASE("polynomial combination of zetas equals mu plus the exact part") {
    set_precision_bits(128);
    CurveSpec s2 = validate_curve(2, 2, line_points(4));
    for (const auto& part : enumerate_partitions(2, 2)) {
        for (int p = 1; p <= 4; ++p) {
            Complex d = exact_relation_defect(s2, part, p, Complex(Real(10), Real(1)), 0);
            CHECK(abs(d) < Real("1e-30"));
            Complex d2 = exact_relation_defect(s2, part, p, Complex(Real("-2.5"), Real("1.25")), 1);
            CHECK(abs(d2) < Real("1e-28"));
        }
    }
    CVec lam6 = {Complex(0), Complex(1), Complex(Real(2), Real(1)), Complex(3),
                 Complex(Real(4), Real(-1)), Complex(6)};
    CurveSpec s3 = validate_curve(3, 2, lam6);
    auto part3 = make_partition({{1, 4}, {2, 5}, {3, 6}});
    for (int p : {1, 5, 6}) {
        Complex d = exact_relation_defect(s3, part3, p, Complex(Real(9), Real(2)), 2);
        CHECK(abs(d) < Real("1e-26"));
    }
}

TEST_CASE("branch product identities vanish") {
    set_precision_bits(128);
    CurveSpec s2 = validate_curve(2, 2, line_points(4));
    auto part2 = make_partition({{1, 3}, {2, 4}});
    for (int p = 1; p <= 4; ++p)
        for (int sheet = 0; sheet < 2; ++sheet) {
            SheetPoint x = make_point(s2, Complex(Real("4.7"), Real("1.3")), sheet);
            auto [d1, d2] = eval_spin_product_identities(s2, part2, p, x);
            CHECK(abs(d1) < Real("1e-30"));
            CHECK(abs(d2) < Real("1e-30"));
        }

    CurveSpec s3 = validate_curve(3, 1, line_points(3));
    auto part3 = make_partition({{1}, {2}, {3}});
    SheetPoint x3 = make_point(s3, Complex(Real(2), Real(2)), 0);
    for (int p = 1; p <= 3; ++p) {
        auto [d1, d2] = eval_spin_product_identities(s3, part3, p, x3);
        CHECK(abs(d1) < Real("1e-30"));
        CHECK(abs(d2) < Real("1e-30"));
    }

    CVec lam32 = {Complex(0), Complex(Real(1), Real("0.5")), Complex(2),
                  Complex(Real(3), Real(-1)), Complex(4), Complex(Real(5), Real("0.25"))};
    CurveSpec s32 = validate_curve(3, 2, lam32);
    auto part32 = make_partition({{1, 2}, {3, 4}, {5, 6}});
    SheetPoint x32 = make_point(s32, Complex(Real("2.5"), Real(3)), 2);
    for (int p : {1, 4, 6}) {
        auto [d1, d2] = eval_spin_product_identities(s32, part32, p, x32);
        CHECK(abs(d1) < Real("1e-28"));
        CHECK(abs(d2) < Real("1e-28"));
    }
}

TEST_CASE("szego kernel: coincident projections rejected, branch identity holds") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto part = make_partition({{1, 2}, {3, 4}});
    SheetPoint x = make_point(s, Complex(Real("4.6"), Real("0.8")), 0);
    SheetPoint y = make_point(s, Complex(Real("4.6"), Real("0.8")), 1);
    CHECK_THROWS_WITH_AS(szego_algebraic(s, part, x, y),
                         doctest::Contains("CoincidentProjection"), Error);

    /* mu_p = N f'(lambda_p)^{(N-1)/N} R(x,Q_p|e) R(x,Q_p|-e) */
    for (int p = 1; p <= 4; ++p) {
        Complex r_plus = szego_at_branch(s, part, x, p);
        Complex r_minus = szego_at_branch(s, part.reversed(), x, p);
        Complex root = fprime_root_continued(s, p);
        Complex fpow = s.fprime_at_branch(p) / root;     /* f'^{(N-1)/N}, matched branch */
        Complex lhs = eval_form(s, DifferentialRef::mu(part, p), x);
        Complex rhs = Complex(Real(s.N)) * fpow * r_plus * r_minus;
        CHECK(abs(lhs - rhs) < Real("1e-25") * (abs(lhs) + 1));
    }
}

TEST_CASE("szego kernel generic-point sum for N=2") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto part = make_partition({{1, 2}, {3, 4}});
    SheetPoint x = make_point(s, Complex(Real(5), Real(1)), 0);
    SheetPoint y = make_point(s, Complex(Real(-2), Real("0.5")), 0);
    /* two-term window: (1/2)(A + 1/A) structure with A = (h(x)/h(y))^{1/4}
       style factors; cross-check against the direct spin evaluations */
    Complex direct(0);
    for (int t = 0; t < 2; ++t) {
        int tl = 2 * t - 1;
        direct += eval_form(s, DifferentialRef::spin(tl, part, +1), x) *
                  eval_form(s, DifferentialRef::spin(tl, part, -1), y);
    }
    direct = direct / Complex(2) / (y.z - x.z);
    Complex via = szego_algebraic(s, part, x, y);
    CHECK(abs(via - direct) < eps_work(24) * abs(via));
}

TEST_CASE("local values at branch points") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto part = make_partition({{1, 2}, {3, 4}});

    /* w^(1)_1 = dz/s at Q_1: coefficient N / f'(lambda_1)^{(N-1)/N} */
    Complex v = local_value_at_branch(s, 1, DifferentialRef::holo(1, 1));
    Complex expect = Complex(2) / pow(s.fprime_at_branch(1), Complex(Real(1) / 2));
    CHECK(abs(v - expect) < Real("1e-25") * abs(expect));

    /* mu_p at its own branch point has a second-order pole in t */
    CHECK_THROWS_WITH_AS(local_value_at_branch(s, 1, DifferentialRef::mu(part, 1)),
                         doctest::Contains("PoleAtBranchPoint"), Error);
    CHECK_THROWS_WITH_AS(local_value_at_branch(s, 3, DifferentialRef::exact_part(3)),
                         doctest::Contains("PoleAtBranchPoint"), Error);

    /* mu_p is regular at every other branch point */
    Complex off = local_value_at_branch(s, 2, DifferentialRef::mu(part, 1));
    CHECK(abs(off) < Real("1e50"));   /* finite; structural check only */

    /* N=3: dz/s vanishes at branch points (t-exponent N-2 > 0) */
    CurveSpec s3 = validate_curve(3, 2, line_points(6));
    Complex v3 = local_value_at_branch(s3, 2, DifferentialRef::holo(1, 1));
    CHECK(abs(v3) < Real("1e-25"));
    /* dz/s^2 picks up the full coefficient */
    Complex v32 = local_value_at_branch(s3, 2, DifferentialRef::holo(2, 1));
    Complex expect32 = Complex(3) / pow(s3.fprime_at_branch(2), Complex(Real(2) / 3));
    CHECK(abs(v32 - expect32) < Real("1e-25") * abs(expect32));
}

TEST_CASE("form string parsing") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto part = make_partition({{1, 2}, {3, 4}});
    auto f1 = parse_form(s, "holo:a=1,b=1", std::nullopt);
    CHECK(f1.kind == DifferentialRef::Holo);
    auto f2 = parse_form(s, "mu:p=4", part);
    CHECK(f2.kind == DifferentialRef::Mu);
    CHECK(f2.p == 4);
    auto f3 = parse_form(s, "zeta:j=1", part);
    CHECK(f3.j == 1);
    auto f4 = parse_form(s, "exact:p=2", std::nullopt);
    CHECK(f4.kind == DifferentialRef::ExactPart);
    CHECK_THROWS_WITH_AS(parse_form(s, "mu:p=4", std::nullopt), doctest::Contains("BadInput"),
                         Error);
    CHECK_THROWS_WITH_AS(parse_form(s, "zeta:j=7", part), doctest::Contains("InvalidIndex"),
                         Error);
    CHECK_THROWS_WITH_AS(parse_form(s, "whatever:x=1", std::nullopt),
                         doctest::Contains("BadInput"), Error);
}
