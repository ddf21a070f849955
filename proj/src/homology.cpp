#include "zn/homology.hpp"
#include "zn/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace zn {

namespace {

Complex rotate(const Complex& v, const Real& angle) {
    return v * polar(Real(1), angle);
}

/* Full 16-gon around `center` through `from`, oriented by `ccw`. */
std::vector<Complex> circle_polyline(const Complex& center, const Complex& from, bool ccw) {
    const int M = 16;
    std::vector<Complex> poly;
    poly.reserve(M + 1);
    Complex rad = from - center;
    Real step = 2 * pi_value() / M;
    if (!ccw) step = -step;
    for (int i = 0; i < M; ++i) poly.push_back(center + rotate(rad, step * i));
    poly.push_back(from);
    return poly;
}

/* Straight corridor with perpendicular detours around stray branch points. */
std::vector<Complex> corridor(const CurveSpec& spec, const Complex& from, const Complex& to,
                              int skip_a, int skip_b, const Real& bulge) {
    std::vector<Complex> poly{from};
    Complex dir = to - from;
    Real len = abs(dir);
    if (len == 0) fail("PathTooClose", "corridor endpoints coincide");
    Complex unit = dir / len;
    Complex normal{-unit.im, unit.re};
    std::vector<std::pair<Real, Complex>> detours;
    for (int q = 1; q <= spec.nm(); ++q) {
        if (q == skip_a || q == skip_b) continue;
        Complex rel = spec.lambda(q) - from;
        Real t = (rel.re * unit.re + rel.im * unit.im) / len;
        if (t <= 0 || t >= 1) continue;
        Complex foot = from + dir * t;
        if (abs(spec.lambda(q) - foot) < spec.min_spacing / 4)
            detours.emplace_back(t, spec.lambda(q) + normal * bulge);
    }
    std::sort(detours.begin(), detours.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& d : detours) poly.push_back(d.second);
    poly.push_back(to);
    return poly;
}

int jmod(long v, int mod) { return int(((v % mod) + mod) % mod); }

Real side_radius(const CurveSpec& spec, int center_idx, int k, int role, unsigned jitter) {
    int idx = jmod(long(center_idx) * 7 + long(k) * 3 + role + long(jitter) * 5, 11);
    return spec.min_spacing * (Real(15) / 100 + Real(5) / 1000 * idx);
}

Real side_angle(const CycleCode& c, int which) {
    int idx = jmod((long(c.a) + c.b) * 3 + long(c.k) * 2 + which * 5 + c.jitter, 7) - 3;
    return pi_value() / 40 * idx;
}

struct PreparedPiece {
    std::vector<Complex> poly;
    std::vector<SheetPoint> vertex_state;   /* continued state at each vertex */
};

struct PreparedCycle {
    std::vector<PreparedPiece> pieces;
};

PreparedCycle prepare(const CurveSpec& spec, const Cycle& cycle) {
    PreparedCycle out;
    for (auto& seg : cycle.segments) {
        PreparedPiece p;
        p.poly = seg.first;
        p.vertex_state.push_back(seg.second);
        for (size_t i = 1; i < p.poly.size(); ++i) {
            std::vector<Complex> chord{p.poly[i - 1], p.poly[i]};
            p.vertex_state.push_back(continue_s(spec, chord, p.vertex_state.back()));
        }
        out.pieces.push_back(std::move(p));
    }
    /* closure: the final continued state must reproduce the start */
    const SheetPoint& last = out.pieces.back().vertex_state.back();
    const SheetPoint& first = out.pieces.front().vertex_state.front();
    if (abs(last.z - first.z) > spec.diameter * eps_work(40) ||
        abs(last.s - first.s) > abs(first.s) / 1000000)
        fail("NonClosedCycle", "loop continuation does not close");
    return out;
}

struct Crossing {
    Complex point;
    int sign;             /* orientation of (d1, d2) frame */
    size_t piece1, chord1;
    size_t piece2, chord2;
    Real t1, t2;
};

/* Transversal crossings of the z-plane polylines of two prepared cycles.
   Throws DegenerateGeometry on near-tangency or near-vertex hits so the
   caller can retry with different jitter. */
std::vector<Crossing> chord_crossings(const CurveSpec& spec, const PreparedCycle& x,
                                      const PreparedCycle& y) {
    std::vector<Crossing> out;
    Real margin = Real(1) / 10000000;
    for (size_t pi = 0; pi < x.pieces.size(); ++pi) {
        const auto& P = x.pieces[pi].poly;
        for (size_t ci = 0; ci + 1 < P.size(); ++ci) {
            Complex p1 = P[ci], d1 = P[ci + 1] - P[ci];
            for (size_t pj = 0; pj < y.pieces.size(); ++pj) {
                const auto& Q = y.pieces[pj].poly;
                for (size_t cj = 0; cj + 1 < Q.size(); ++cj) {
                    Complex q1 = Q[cj], d2 = Q[cj + 1] - Q[cj];
                    Real cross = d1.re * d2.im - d1.im * d2.re;
                    Real scale = abs(d1) * abs(d2);
                    if (scale == 0) continue;
                    if (abs(cross) < scale / Real("1e9")) {
                        /* parallel: collinear overlap would hide crossings */
                        Complex rel = q1 - p1;
                        Real off = rel.re * d1.im - rel.im * d1.re;
                        if (abs(off) < abs(d1) * spec.min_spacing / 1000000) {
                            Real l2 = d1.re * d1.re + d1.im * d1.im;
                            Real ta = (rel.re * d1.re + rel.im * d1.im) / l2;
                            Complex rel2 = q1 + d2 - p1;
                            Real tb = (rel2.re * d1.re + rel2.im * d1.im) / l2;
                            if (ta > tb) std::swap(ta, tb);
                            if (tb > 0 && ta < 1)
                                fail("DegenerateGeometry", "collinear chord overlap");
                        }
                        continue;
                    }
                    Complex rel = q1 - p1;
                    Real t = (rel.re * d2.im - rel.im * d2.re) / cross;
                    Real u = (rel.re * d1.im - rel.im * d1.re) / cross;
                    if (t < -margin || t > 1 + margin || u < -margin || u > 1 + margin)
                        continue;
                    if (t < margin || t > 1 - margin || u < margin || u > 1 - margin)
                        fail("DegenerateGeometry", "crossing at chord endpoint");
                    Crossing c;
                    c.point = p1 + d1 * t;
                    c.sign = cross > 0 ? 1 : -1;
                    c.piece1 = pi; c.chord1 = ci; c.t1 = t;
                    c.piece2 = pj; c.chord2 = cj; c.t2 = u;
                    out.push_back(c);
                }
            }
        }
    }
    return out;
}

Complex s_at(const CurveSpec& spec, const PreparedPiece& piece, size_t chord, const Complex& pt) {
    std::vector<Complex> stub{piece.poly[chord], pt};
    if (abs(stub[1] - stub[0]) == 0) return piece.vertex_state[chord].s;
    return continue_s(spec, stub, piece.vertex_state[chord]).s;
}

long long pair_intersection(const CurveSpec& spec, const PreparedCycle& x, const PreparedCycle& y) {
    long long total = 0;
    Real gap = 2 * sin(pi_value() / spec.N);   /* sheet separation of s values */
    for (const auto& c : chord_crossings(spec, x, y)) {
        Complex s1 = s_at(spec, x.pieces[c.piece1], c.chord1, c.point);
        Complex s2 = s_at(spec, y.pieces[c.piece2], c.chord2, c.point);
        Real diff = abs(s1 - s2);
        Real size = abs(s1);
        if (diff < size / 100000000) {
            total += c.sign;
        } else if (diff < size * gap / 4) {
            fail("DegenerateGeometry", "ambiguous sheet match at crossing");
        }
    }
    return total;
}

} // namespace

std::vector<Complex> Cycle::flat() const {
    std::vector<Complex> out;
    for (auto& seg : segments) {
        size_t from = out.empty() ? 0 : 1;
        out.insert(out.end(), seg.first.begin() + from, seg.first.end());
    }
    return out;
}

std::vector<int> sorted_branch_order(const CurveSpec& spec) {
    std::vector<int> order(spec.nm());
    std::iota(order.begin(), order.end(), 1);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        const Complex& u = spec.lambda(i);
        const Complex& v = spec.lambda(j);
        if (u.re != v.re) return u.re < v.re;
        return u.im < v.im;
    });
    return order;
}

Cycle make_cycle(const CurveSpec& spec, const CycleCode& code) {
    if (code.a < 1 || code.a > spec.nm() || code.b < 1 || code.b > spec.nm() || code.a == code.b)
        fail("InvalidIndex", "branch indices out of range");
    if (code.k < 0 || code.k >= spec.N)
        fail("InvalidIndex", "sheet index out of range");
    Complex ca = spec.lambda(code.a);
    Complex cb = spec.lambda(code.b);
    Complex unit = (cb - ca) / abs(cb - ca);
    Real ra = side_radius(spec, code.a, code.k, 0 + int(code.jitter) * 2, code.jitter);
    Real rb = side_radius(spec, code.b, code.k, 2 + int(code.jitter) * 2, code.jitter);
    Complex A = ca + rotate(unit, side_angle(code, 0)) * ra;
    Complex B = cb - rotate(unit, side_angle(code, 1)) * rb;
    Real bulge = spec.min_spacing * (Real(1) / 3 + Real(1) / 100 * jmod(long(code.a) + code.b + code.k + code.jitter, 5));

    Cycle cy;
    cy.code = code;
    std::vector<std::vector<Complex>> polys;
    polys.push_back(corridor(spec, A, B, code.a, code.b, bulge));          /* out */
    polys.push_back(circle_polyline(cb, B, true));                         /* wind up */
    auto back = polys[0];
    std::reverse(back.begin(), back.end());
    polys.push_back(std::move(back));                                      /* return */
    polys.push_back(circle_polyline(ca, A, false));                        /* wind down */

    cy.start = make_point(spec, A, code.k);
    SheetPoint state = cy.start;
    for (auto& p : polys) {
        cy.segments.emplace_back(p, state);
        for (size_t i = 1; i < p.size(); ++i) {
            std::vector<Complex> chord{p[i - 1], p[i]};
            state = continue_s(spec, chord, state);
        }
    }
    return cy;
}

Cycle shift_start_sheet(const CurveSpec& spec, const Cycle& cycle, int shift) {
    Cycle out;
    out.code = cycle.code;
    out.code.k = jmod(cycle.code.k + shift, spec.N);
    out.start = make_point(spec, cycle.start.z, jmod(cycle.start.sheet + shift, spec.N));
    SheetPoint state = out.start;
    for (auto& seg : cycle.segments) {
        out.segments.emplace_back(seg.first, state);
        for (size_t i = 1; i < seg.first.size(); ++i) {
            std::vector<Complex> chord{seg.first[i - 1], seg.first[i]};
            state = continue_s(spec, chord, state);
        }
    }
    return out;
}

std::vector<Cycle> elementary_cycles(const CurveSpec& spec, unsigned jitter) {
    if (spec.genus == 0) fail("GenusZero", "no homology to build");
    auto order = sorted_branch_order(spec);
    std::vector<Cycle> out;
    out.reserve(size_t(spec.N - 1) * (spec.nm() - 1));
    for (size_t j = 0; j + 1 < order.size(); ++j)
        for (int k = 0; k + 1 < spec.N; ++k)
            out.push_back(make_cycle(spec, CycleCode{order[j], order[j + 1], k, jitter}));
    return out;
}

IMat intersection_matrix(const CurveSpec& spec, const std::vector<Cycle>& cycles) {
    size_t n = cycles.size();
    std::vector<PreparedCycle> prep;
    prep.reserve(n);
    for (auto& c : cycles) prep.push_back(prepare(spec, c));
    IMat M(n, std::vector<long long>(n, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            long long v = pair_intersection(spec, prep[i], prep[j]);
            M[i][j] = v;
            M[j][i] = -v;
        }
    return M;
}

std::vector<long long> intersection_row(const CurveSpec& spec, const Cycle& extra,
                                        const std::vector<Cycle>& cycles) {
    PreparedCycle pe = prepare(spec, extra);
    std::vector<long long> row;
    row.reserve(cycles.size());
    for (auto& c : cycles) row.push_back(pair_intersection(spec, pe, prepare(spec, c)));
    return row;
}

IntersectionData canonical_basis(const CurveSpec& spec, std::vector<Cycle> cycles,
                                 const IMat& pairing) {
    size_t n = cycles.size();
    if (pairing.size() != n) fail("BadCount", "pairing size mismatch");
    IMat M = pairing;
    IMat U(n, std::vector<long long>(n, 0));
    for (size_t i = 0; i < n; ++i) U[i][i] = 1;

    auto add_to = [&](size_t dst, size_t src, long long c) {
        /* basis op e_dst += c * e_src, congruent update of M */
        if (c == 0) return;
        for (size_t t = 0; t < n; ++t) U[dst][t] += c * U[src][t];
        for (size_t t = 0; t < n; ++t) M[dst][t] += c * M[src][t];
        for (size_t t = 0; t < n; ++t) M[t][dst] += c * M[t][src];
    };
    auto swap_basis = [&](size_t i, size_t j) {
        if (i == j) return;
        std::swap(U[i], U[j]);
        std::swap(M[i], M[j]);
        for (size_t t = 0; t < n; ++t) std::swap(M[t][i], M[t][j]);
    };

    size_t pos = 0;
    while (true) {
        long long best = 0;
        size_t br = 0, bc = 0;
        for (size_t r = pos; r < n; ++r)
            for (size_t c = pos; c < n; ++c) {
                long long v = M[r][c] < 0 ? -M[r][c] : M[r][c];
                if (v != 0 && (best == 0 || v < best)) { best = v; br = r; bc = c; }
            }
        if (best == 0) break;

        swap_basis(br, pos);
        if (bc == pos) bc = br;
        swap_basis(bc, pos + 1);
        if (M[pos][pos + 1] < 0) swap_basis(pos, pos + 1);

        bool clean = false;
        while (!clean) {
            clean = true;
            long long d = M[pos][pos + 1];
            for (size_t x = pos + 2; x < n && clean; ++x) {
                if (M[pos][x] % d != 0) {
                    /* Euclid: shrink the pivot toward the gcd */
                    long long q = M[pos][x] / d;
                    add_to(x, pos + 1, -q);
                    swap_basis(pos + 1, x);
                    if (M[pos][pos + 1] < 0) add_to(pos + 1, pos + 1, -2);
                    clean = false;
                } else if (M[pos + 1][x] % d != 0) {
                    long long q = M[pos + 1][x] / d;
                    add_to(x, pos, q);
                    swap_basis(pos, x);
                    if (M[pos][pos + 1] < 0) add_to(pos, pos, -2);
                    clean = false;
                }
            }
            if (!clean) continue;
            for (size_t x = pos + 2; x < n; ++x) {
                add_to(x, pos + 1, -M[pos][x] / d);
                add_to(x, pos, M[pos + 1][x] / d);
            }
            for (size_t x = pos + 2; x < n; ++x)
                if (M[pos][x] != 0 || M[pos + 1][x] != 0) { clean = false; break; }
        }
        if (M[pos][pos + 1] != 1)
            fail("RankDeficient", "non-unit symplectic pivot");
        pos += 2;
    }

    if (pos != size_t(2 * spec.genus))
        fail("RankDeficient", "pairing rank does not match twice the genus");

    IntersectionData out;
    out.cycles = std::move(cycles);
    out.pairing = pairing;
    out.transform = std::move(U);
    out.genus = spec.genus;
    return out;
}

std::vector<long long> IntersectionData::a_row(int i) const {
    if (i < 1 || i > genus) fail("InvalidIndex", "basis index out of range");
    return transform[size_t(2 * (i - 1))];
}

std::vector<long long> IntersectionData::b_row(int i) const {
    if (i < 1 || i > genus) fail("InvalidIndex", "basis index out of range");
    return transform[size_t(2 * (i - 1) + 1)];
}

IntersectionData homology_data(const CurveSpec& spec) {
    std::string last;
    for (unsigned jitter = 0; jitter < 3; ++jitter) {
        try {
            auto cycles = elementary_cycles(spec, jitter);
            auto pairing = intersection_matrix(spec, cycles);
            return canonical_basis(spec, std::move(cycles), pairing);
        } catch (const Error& e) {
            if (e.code != "DegenerateGeometry") throw;
            last = e.what();
        }
    }
    fail("NonConvergent", "cycle geometry degenerate for all seeds: " + last);
}

} // namespace zn
