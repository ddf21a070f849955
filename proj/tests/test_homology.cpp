#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zn/homology.hpp"
#include "zn/error.hpp"

using namespace zn;

namespace {

CVec line_points(int n) {
    CVec v;
    for (int i = 0; i < n; ++i) v.push_back(Complex(i));
    return v;
}

/* fraction-free integer determinant */
long long int_det(IMat m) {
    size_t n = m.size();
    long long prev = 1, sign = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && m[p][c] == 0) ++p;
        if (p == n) return 0;
        if (p != c) { std::swap(m[p], m[c]); sign = -sign; }
        for (size_t r = c + 1; r < n; ++r)
            for (size_t x = c + 1; x < n; ++x)
                m[r][x] = (m[r][x] * m[c][c] - m[r][c] * m[c][x]) / prev;
        prev = m[c][c];
    }
    return sign * m[n - 1][n - 1];
}

IMat congruence(const IMat& u, const IMat& m) {
    size_t n = m.size();
    IMat out(n, std::vector<long long>(n, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            long long acc = 0;
            for (size_t a = 0; a < n; ++a)
                for (size_t b = 0; b < n; ++b) acc += u[i][a] * m[a][b] * u[j][b];
            out[i][j] = acc;
        }
    return out;
}

/* interleaved A1,B1,A2,B2,... pairing blocks followed by zero rows */
void check_symplectic_form(const IMat& t, int genus) {
    size_t n = t.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            long long want = 0;
            if (i < size_t(2 * genus) && j == i + 1 && i % 2 == 0) want = 1;
            if (j < size_t(2 * genus) && i == j + 1 && j % 2 == 0) want = -1;
            CHECK(t[i][j] == want);
        }
}

} // namespace

TEST_CASE("no cycles on a rational curve") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 1, line_points(2));
    CHECK_THROWS_WITH_AS(elementary_cycles(s), doctest::Contains("GenusZero"), Error);
}

TEST_CASE("square-root curve on four points") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto cycles = elementary_cycles(s);
    REQUIRE(cycles.size() == 3);
    CHECK(cycles[0].code.a == 1);
    CHECK(cycles[0].code.b == 2);
    CHECK(cycles[1].code.a == 2);
    CHECK(cycles[2].code.b == 4);

    IMat M = intersection_matrix(s, cycles);
    for (int i = 0; i < 3; ++i) CHECK(M[i][i] == 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(M[i][j] == -M[j][i]);
    /* adjacent loops meet once, disjoint loops not at all */
    CHECK(std::abs(M[0][1]) == 1);
    CHECK(std::abs(M[1][2]) == 1);
    CHECK(M[0][2] == 0);

    IntersectionData data = canonical_basis(s, cycles, M);
    CHECK(data.genus == 1);
    CHECK(std::abs(int_det(data.transform)) == 1);
    check_symplectic_form(congruence(data.transform, M), 1);
    /* one kernel direction: the sum relation among sheet-exchange loops */
    CHECK(data.transform.size() == 3);
}

TEST_CASE("cube-root curve on three points") {
    set_precision_bits(128);
    CVec pts{Complex(0), Complex(1), Complex(2, 1)};
    CurveSpec s = validate_curve(3, 1, pts);
    auto cycles = elementary_cycles(s);
    REQUIRE(cycles.size() == 4);

    IMat M = intersection_matrix(s, cycles);
    IntersectionData data = canonical_basis(s, cycles, M);
    CHECK(data.genus == 1);
    CHECK(std::abs(int_det(data.transform)) == 1);
    check_symplectic_form(congruence(data.transform, M), 1);
}

TEST_CASE("deck shift acts on loop classes") {
    set_precision_bits(128);
    CVec pts{Complex(0), Complex(1), Complex(2, 1)};
    CurveSpec s = validate_curve(3, 1, pts);
    auto fam = elementary_cycles(s);
    IMat M = intersection_matrix(s, fam);

    int a = fam[0].code.a, b = fam[0].code.b;
    /* independent realization of the same class, regenerated off-family */
    Cycle c0 = make_cycle(s, CycleCode{a, b, 0, 3});
    auto row0 = intersection_row(s, shift_start_sheet(s, c0, 1), fam);
    for (size_t t = 0; t < fam.size(); ++t) CHECK(row0[t] == M[1][t]);

    Cycle c1 = make_cycle(s, CycleCode{a, b, 1, 3});
    auto row1 = intersection_row(s, shift_start_sheet(s, c1, 1), fam);
    for (size_t t = 0; t < fam.size(); ++t) CHECK(row1[t] == -M[0][t] - M[1][t]);
}

TEST_CASE("genus-two square-root curve") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 3, line_points(6));
    auto cycles = elementary_cycles(s);
    REQUIRE(cycles.size() == 5);
    IMat M = intersection_matrix(s, cycles);
    /* nearest-neighbour chain */
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            CHECK(std::abs(M[i][j]) == (j == i + 1 ? 1 : 0));
    IntersectionData data = canonical_basis(s, cycles, M);
    CHECK(data.genus == 2);
    check_symplectic_form(congruence(data.transform, M), 2);
    CHECK(std::abs(int_det(data.transform)) == 1);
}

TEST_CASE("cube-root curve on six points") {
    set_precision_bits(128);
    CVec pts{Complex(0), Complex(1), Complex(2, 1), Complex(3), Complex(4, -1), Complex(6)};
    CurveSpec s = validate_curve(3, 2, pts);
    auto data = homology_data(s);
    REQUIRE(data.cycles.size() == 10);
    CHECK(data.genus == 4);
    check_symplectic_form(congruence(data.transform, data.pairing), 4);
    CHECK(std::abs(int_det(data.transform)) == 1);
    /* two kernel directions: one sheet-sum relation per deck power */
    size_t zero_rows = 0;
    IMat t = congruence(data.transform, data.pairing);
    for (size_t i = 8; i < 10; ++i) {
        bool all0 = true;
        for (size_t j = 0; j < 10; ++j) all0 = all0 && t[i][j] == 0;
        if (all0) ++zero_rows;
    }
    CHECK(zero_rows == 2);
}

TEST_CASE("already-symplectic pairing keeps the basis") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto cycles = elementary_cycles(s);
    IMat J{{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}};
    IntersectionData data = canonical_basis(s, cycles, J);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j)
            CHECK(data.transform[i][j] == (i == j ? 1 : 0));
    CHECK(data.a_row(1) == std::vector<long long>{1, 0, 0});
    CHECK(data.b_row(1) == std::vector<long long>{0, 1, 0});
    CHECK_THROWS_WITH_AS(data.a_row(2), doctest::Contains("InvalidIndex"), Error);
}

TEST_CASE("codes regenerate homotopic loops after perturbation") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    auto cycles = elementary_cycles(s);
    IMat M = intersection_matrix(s, cycles);

    CVec moved = line_points(4);
    moved[1] = moved[1] + Complex(Real(3) / 100, Real(1) / 20);
    moved[3] = moved[3] + Complex(0, Real(-1) / 25);
    CurveSpec s2 = validate_curve(2, 2, moved);
    std::vector<Cycle> again;
    for (auto& c : cycles) again.push_back(make_cycle(s2, c.code));
    IMat M2 = intersection_matrix(s2, again);
    CHECK(M2 == M);
}

TEST_CASE("cycle construction rejects bad codes") {
    set_precision_bits(128);
    CurveSpec s = validate_curve(2, 2, line_points(4));
    CHECK_THROWS_WITH_AS(make_cycle(s, CycleCode{1, 1, 0, 0}), doctest::Contains("InvalidIndex"),
                         Error);
    CHECK_THROWS_WITH_AS(make_cycle(s, CycleCode{0, 2, 0, 0}), doctest::Contains("InvalidIndex"),
                         Error);
    CHECK_THROWS_WITH_AS(make_cycle(s, CycleCode{1, 2, 5, 0}), doctest::Contains("InvalidIndex"),
                         Error);
}
