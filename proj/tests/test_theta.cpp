#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zn/theta.hpp"
#include "zn/error.hpp"

#include <random>

using namespace zn;

namespace {

Real tol(int bits) { return eps_work(unsigned(bits)); }

CMat diag_tau(const Real& t) { return CMat{CVec{Complex(t, Real(0))}}; }

CMat tau_g2() {
    Complex off(Real(1) / 2, Real(1) / 10);
    CMat t(2, CVec(2));
    t[0][0] = Complex(Real(-3), Real(0));
    t[1][1] = Complex(Real(-4), Real(0));
    t[0][1] = t[1][0] = off;
    return t;
}

Characteristics zero_ch(size_t g) {
    Characteristics ch;
    ch.delta.assign(g, Rat(0));
    ch.epsilon.assign(g, Rat(0));
    return ch;
}

Rat mod1(const Rat& q) {
    Int n = boost::multiprecision::numerator(q);
    Int d = boost::multiprecision::denominator(q);
    Int fl = n / d;
    if (n < 0 && fl * d != n) fl -= 1;
    return q - Rat(fl);
}

bool same_or_mirror(const Characteristics& a, const Characteristics& b) {
    if (a == b) return true;
    for (size_t i = 0; i < a.delta.size(); ++i)
        if (a.delta[i] != mod1(-b.delta[i]) || a.epsilon[i] != mod1(-b.epsilon[i])) return false;
    return true;
}

long max_denominator(const Characteristics& ch) {
    Int d(1);
    for (const Rat& q : ch.delta) d = std::max(d, Int(boost::multiprecision::denominator(q)));
    for (const Rat& q : ch.epsilon) d = std::max(d, Int(boost::multiprecision::denominator(q)));
    return d.convert_to<long>();
}

CVec real_points(std::initializer_list<double> xs) {
    CVec v;
    for (double x : xs) v.push_back(Complex(Real(x)));
    return v;
}

} // namespace

TEST_CASE("g = 1 lattice sum matches a frozen direct evaluation") {
    set_precision_bits(128);
    CMat tau = diag_tau(Real(-5));
    ThetaEval th = riemann_theta(CVec{Complex(0)}, tau, zero_ch(1), 2);

    Real v("1.164260797445702153061863116246563839497");
    Real dd("0.1413198830470689546556840862946879929167");
    CHECK(abs(th.value - Complex(v)) < tol(100));
    CHECK(abs(th.dlog[0]) < tol(100));            /* even in z */
    CHECK(abs(th.ddlog[0][0] - Complex(dd)) < tol(96));
    CHECK(th.radius >= 2);
    CHECK(th.tail < eps_work(12) * abs(th.value));
}

TEST_CASE("integer characteristic shifts rescale theta by a unit phase") {
    set_precision_bits(128);
    std::mt19937 rng(20240517);
    std::uniform_int_distribution<int> num(-3, 3);
    std::uniform_real_distribution<double> re(-0.4, 0.4);

    for (int g : {1, 2}) {
        CMat tau = g == 1 ? diag_tau(Real(-4)) : tau_g2();
        for (int trial = 0; trial < 10; ++trial) {
            Characteristics ch;
            std::vector<Int> mshift, nshift;
            CVec z;
            for (int i = 0; i < g; ++i) {
                ch.delta.push_back(Rat(num(rng), 4));
                ch.epsilon.push_back(Rat(num(rng), 4));
                mshift.push_back(Int(num(rng)));
                nshift.push_back(Int(num(rng)));
                z.push_back(Complex(Real(re(rng)), Real(re(rng))));
            }
            Characteristics shifted = ch;
            Rat phase(0);
            for (int i = 0; i < g; ++i) {
                shifted.delta[size_t(i)] += Rat(mshift[size_t(i)]);
                shifted.epsilon[size_t(i)] += Rat(nshift[size_t(i)]);
                phase += Rat(nshift[size_t(i)]) * ch.delta[size_t(i)];
            }
            ThetaEval a = riemann_theta(z, tau, ch, 2);
            ThetaEval b = riemann_theta(z, tau, shifted, 2);

            Real ang = 2 * pi_value() * rat_to_real(phase);
            Complex factor = exp(Complex(Real(0), ang));
            CHECK(abs(b.value - factor * a.value) < tol(104) * abs(a.value));
            /* the constant drops out of every log derivative */
            for (int i = 0; i < g; ++i) {
                CHECK(abs(b.dlog[size_t(i)] - a.dlog[size_t(i)]) < tol(104));
                for (int j = 0; j < g; ++j)
                    CHECK(abs(b.ddlog[size_t(i)][size_t(j)] - a.ddlog[size_t(i)][size_t(j)]) <
                          tol(104));
            }
        }
    }
}

TEST_CASE("lattice translations obey the automorphy factor") {
    set_precision_bits(128);
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> num(-2, 2);
    std::uniform_real_distribution<double> re(-0.3, 0.3);

    for (int g : {1, 2}) {
        CMat tau = g == 1 ? diag_tau(Real(-4)) : tau_g2();
        Real twopi = 2 * pi_value();
        for (int trial = 0; trial < 8; ++trial) {
            Characteristics ch;
            CVec z;
            std::vector<int> mvec, nvec;
            for (int i = 0; i < g; ++i) {
                ch.delta.push_back(Rat(num(rng), 3));
                ch.epsilon.push_back(Rat(num(rng), 3));
                mvec.push_back(num(rng));
                nvec.push_back(num(rng));
                z.push_back(Complex(Real(re(rng)), Real(re(rng))));
            }
            CVec zs = z;
            for (int j = 0; j < g; ++j) {
                Real sh = twopi * Real(nvec[size_t(j)]);
                zs[size_t(j)] += Complex(Real(0), sh);
                for (int i = 0; i < g; ++i) zs[size_t(j)] += Real(mvec[size_t(i)]) * tau[size_t(i)][size_t(j)];
            }
            /* exponent 2 pi i n.delta - m tau m^t / 2 - (z + 2 pi i eps) m^t */
            Complex expo(0);
            for (int i = 0; i < g; ++i) {
                Real nd = twopi * Real(nvec[size_t(i)]) * rat_to_real(ch.delta[size_t(i)]);
                expo += Complex(Real(0), nd);
                Real ze = twopi * rat_to_real(ch.epsilon[size_t(i)]);
                Complex zeff = z[size_t(i)] + Complex(Real(0), ze);
                expo -= Real(mvec[size_t(i)]) * zeff;
                for (int j = 0; j < g; ++j) {
                    Real mm = Real(mvec[size_t(i)]) * Real(mvec[size_t(j)]);
                    expo -= mm / 2 * tau[size_t(i)][size_t(j)];
                }
            }
            ThetaEval a = riemann_theta(z, tau, ch, 0);
            ThetaEval b = riemann_theta(zs, tau, ch, 0);
            CHECK(abs(b.value - exp(expo) * a.value) < tol(100) * abs(a.value));
        }
    }
}

TEST_CASE("theta with zero characteristics is even") {
    set_precision_bits(128);
    CMat tau = tau_g2();
    CVec z{Complex(Real(0.2), Real(0.1)), Complex(Real(-0.3), Real(0.25))};
    CVec nz{-z[0], -z[1]};
    ThetaEval a = riemann_theta(z, tau, zero_ch(2), 0);
    ThetaEval b = riemann_theta(nz, tau, zero_ch(2), 0);
    CHECK(abs(a.value - b.value) < tol(110) * abs(a.value));
}

TEST_CASE("characteristic point and its real coordinates round-trip") {
    set_precision_bits(128);
    CMat tau = tau_g2();
    Characteristics ch;
    ch.delta = {Rat(1, 4), Rat(3, 4)};
    ch.epsilon = {Rat(1, 2), Rat(1, 6)};
    CVec e = characteristic_point(ch, tau);
    std::vector<Real> dl, ep;
    real_characteristics(e, tau, dl, ep);
    for (int i = 0; i < 2; ++i) {
        CHECK(abs(dl[size_t(i)] - rat_to_real(ch.delta[size_t(i)])) < tol(110));
        CHECK(abs(ep[size_t(i)] - rat_to_real(ch.epsilon[size_t(i)])) < tol(110));
    }
}

TEST_CASE("divergent and degenerate inputs are rejected") {
    set_precision_bits(128);
    CHECK_THROWS_WITH_AS(riemann_theta(CVec{Complex(0)}, diag_tau(Real(1)), zero_ch(1), 0),
                         doctest::Contains("NotNegativeDefinite"), Error);
    CHECK_THROWS_WITH_AS(riemann_theta(CVec{Complex(0), Complex(0)}, diag_tau(Real(-3)),
                                       zero_ch(1), 0),
                         doctest::Contains("BadCount"), Error);
    /* the odd half-period point: theta vanishes, log derivatives blow up */
    Characteristics odd;
    odd.delta = {Rat(1, 2)};
    odd.epsilon = {Rat(1, 2)};
    CHECK_THROWS_WITH_AS(riemann_theta(CVec{Complex(0)}, diag_tau(Real(-3)), odd, 1),
                         doctest::Contains("Underflow"), Error);
}

TEST_CASE("branch-point images are torsion points of the lattice") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, real_points({0, 1, 2, 3}));
    PeriodData pd = build_period_data(s);
    auto table = abel_branch_table(pd);
    REQUIRE(table.size() == 5);

    CVec u1 = abel_map(pd, 1);
    CHECK(abs(u1[0] - table[1][0]) < tol(100));

    for (int i = 1; i <= 4; ++i)
        for (int j = i + 1; j <= 4; ++j) {
            CVec e{Real(s.N) * (table[size_t(i)][0] - table[size_t(j)][0])};
            std::vector<Real> dl, ep;
            real_characteristics(e, pd.tau, dl, ep);
            CHECK(abs(dl[0] - round(dl[0])) < tol(90));
            CHECK(abs(ep[0] - round(ep[0])) < tol(90));
        }

    /* degenerate chord from the base point to itself */
    SheetPoint base = make_point(s, s.z0, 0);
    CVec u0 = abel_map(pd, base);
    CHECK(abs(u0[0]) < tol(100));
}

TEST_CASE("characteristics resolve on the square-root curve") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, real_points({0, 1, 2, 3}));
    PeriodData pd = build_period_data(s);
    CharacteristicResolver res(pd);

    auto parts = enumerate_partitions(2, 2);
    REQUIRE(parts.size() == 6);
    for (const auto& part : parts) {
        const Characteristics& ch = res.find(part);
        CHECK(max_denominator(ch) <= 2);   /* even N: half periods */
        CHECK(res.loop_identity_defect(part) < Real("1e-18"));
        ThetaEval th = riemann_theta(CVec{Complex(0)}, pd.tau, ch, 0);
        CHECK(abs(th.value) > Real("1e-6"));
    }

    /* anchoring on a different partition must land on the same classes */
    CharacteristicResolver res2(pd);
    const Characteristics& alt = res2.find(parts[4]);
    CHECK(same_or_mirror(alt, res.find(parts[4])));
    for (const auto& part : parts) CHECK(same_or_mirror(res2.find(part), res.find(part)));
}

TEST_CASE("characteristics resolve on a cube-root curve") {
    set_precision_bits(128);
    CVec lam = real_points({0, 1});
    lam.push_back(Complex(Real(2), Real(1)));
    CurveSpec s = validate_curve(3, 1, lam);
    PeriodData pd = build_period_data(s);
    CharacteristicResolver res(pd);

    auto parts = enumerate_partitions(3, 1);
    REQUIRE(parts.size() == 6);
    for (const auto& part : parts) {
        const Characteristics& ch = res.find(part);
        CHECK(max_denominator(ch) <= 6);   /* odd N: sixth periods */
        CHECK(res.loop_identity_defect(part) < Real("1e-18"));
    }
}

TEST_CASE("squared theta constants depend on lambda only through block products") {
    set_precision_bits(128);
    /* exact exponents first */
    CHECK(spin_q_pair(2, 0, 0) == Rat(1, 8));
    CHECK(spin_q_pair(2, 1, 1) == Rat(1, 8));
    Rat mu = Rat((2 - 1) * (2 * 2 - 1), 6 * 2);
    CHECK(mu == Rat(1, 4));

    auto parts = enumerate_partitions(2, 2);
    std::vector<CVec> samples = {real_points({0, 1, 2, 3}), real_points({0, 1.1, 2.3, 3.7}),
                                 real_points({-0.5, 0.9, 2.2, 3.4})};
    CHECK(thomae_check(2, 2, samples, parts[0]) < Real("1e-15"));
    CHECK(thomae_check(2, 2, samples, parts[3]) < Real("1e-15"));
}

TEST_CASE("the block-product quotient is independent of the branch points") {
    set_precision_bits(128);
    auto parts = enumerate_partitions(2, 2);
    const auto& part = parts[1];
    Real q1, q2;
    {
        CurveSpec s = validate_curve(2, 2, real_points({0, 1, 2, 3}));
        PeriodData pd = build_period_data(s);
        CharacteristicResolver res(pd);
        q1 = block_product_quotient(res, part);
    }
    {
        CurveSpec s = validate_curve(2, 2, real_points({-0.4, 0.8, 2.1, 3.3}));
        PeriodData pd = build_period_data(s);
        CharacteristicResolver res(pd);
        q2 = block_product_quotient(res, part);
    }
    CHECK(abs(q1 - q2) < Real("1e-15") * q1);
}

TEST_CASE("the compact square-root form agrees with the determinant solution") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, real_points({0, 1, 2, 3}));
    PeriodData pd = build_period_data(s);
    CharacteristicResolver res(pd);

    auto vals = smirnov_sl2(res);
    REQUIRE(vals.size() == 6);

    /* the modulus of the ratio against the determinant formula is the same
       for every partition: both sides carry the full partition dependence */
    Real lo(0), hi(0);
    bool first = true;
    for (const auto& part : enumerate_partitions(2, 2)) {
        Complex ts = theta_solution(res, part);
        Real r = abs(vals.at(part.to_string())) / abs(ts);
        if (first) {
            lo = hi = r;
            first = false;
        } else {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    CHECK((hi - lo) < Real("1e-12") * hi);
}

TEST_CASE("solver index sets are validated") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, real_points({0, 1, 2, 3}));
    PeriodData pd = build_period_data(s);
    CharacteristicResolver res(pd);
    auto parts = enumerate_partitions(2, 2);

    CHECK_THROWS_WITH_AS(theta_solution(res, parts[0], {1, 2}), doctest::Contains("BadCount"),
                         Error);
    CHECK_THROWS_WITH_AS(theta_solution(res, parts[0], {2}), doctest::Contains("InvalidIndex"),
                         Error);
}

TEST_CASE("the compact form refuses other root orders") {
    set_precision_bits(128);
    CVec lam = real_points({0, 1});
    lam.push_back(Complex(Real(2), Real(1)));
    CurveSpec s = validate_curve(3, 1, lam);
    PeriodData pd = build_period_data(s);
    CharacteristicResolver res(pd);
    CHECK_THROWS_WITH_AS(smirnov_sl2(res), doctest::Contains("WrongN"), Error);
}
