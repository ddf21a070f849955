#include "zn/kz.hpp"

#include "zn/homology.hpp"
#include "zn/theta.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace zn {

namespace {

Int binomial_int(int n, int k) {
    if (k < 0 || k > n) return Int(0);
    Int r(1);
    for (int t = 1; t <= k; ++t) {
        r *= n - k + t;
        r /= t;
    }
    return r;
}

Complex period_of(const PeriodData& pd, const DifferentialRef& form, int ref) {
    return ref > 0 ? pd.a_period(form, ref) : pd.b_period(form, -ref);
}

/* mu only sees the block containing its pole, so all partitions sharing that
   block share the integral; route them through one representative. */
DifferentialRef canonical_mu(const CurveSpec& spec, const OrderedPartition& part, int p) {
    std::vector<int> own = part.block(part.block_of(p));
    std::sort(own.begin(), own.end());
    std::vector<int> rest;
    for (int q = 1; q <= spec.nm(); ++q)
        if (std::find(own.begin(), own.end(), q) == own.end()) rest.push_back(q);
    std::vector<std::vector<int>> blocks{own};
    for (int r = 0; r + 1 < spec.N; ++r)
        blocks.emplace_back(rest.begin() + r * spec.m, rest.begin() + (r + 1) * spec.m);
    return DifferentialRef::mu(make_partition(std::move(blocks)), p);
}

/* sum over rows of |minor| per row: first-order determinant sensitivity to a
   per-entry error that may differ between rows */
std::vector<Real> det_row_weights(const CMat& M) {
    size_t n = M.size();
    std::vector<Real> w(n, Real(0));
    if (n == 1) {
        w[0] = Real(1);
        return w;
    }
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            CMat minor;
            for (size_t r = 0; r < n; ++r) {
                if (r == i) continue;
                CVec row;
                for (size_t c = 0; c < n; ++c)
                    if (c != j) row.push_back(M[r][c]);
                minor.push_back(std::move(row));
            }
            w[i] += abs(det(minor));
        }
    return w;
}

Real row_coeff_sum(const PeriodData& pd, int ref) {
    const auto& row = ref > 0 ? pd.arows[size_t(ref - 1)] : pd.brows[size_t(-ref - 1)];
    long long s = 0;
    for (long long c : row) s += c >= 0 ? c : -c;
    return Real(s);
}

void finish_metadata(SolutionVector& sol, const CurveSpec& spec) {
    sol.delta = lambda_vandermonde(spec);
    sol.log_delta = log(sol.delta);
    Real expo = Real(spec.N - 1) / (spec.N * spec.N);
    sol.delta_power = exp(Complex(expo) * sol.log_delta);
    for (std::size_t i = 0; i < sol.partitions.size(); ++i)
        sol.slots[sol.partitions[i].to_string()] = i;
}

} // namespace

std::size_t SolutionVector::index(const OrderedPartition& part) const {
    auto it = slots.find(part.to_string());
    if (it == slots.end()) fail("InvalidIndex", "partition not part of this solution");
    return it->second;
}

SolutionVector solve_integral(const CurveSpec& spec) {
    if (spec.L != 0) fail("BadCount", "this entry point is for empty determinants only");
    SolutionVector sol;
    sol.partitions = enumerate_partitions(spec.N, spec.m);
    finish_metadata(sol, spec);
    for (const auto& part : sol.partitions) {
        Complex fb = Complex(Real(1)) / block_pair_product_all(spec, part);
        sol.fbar.push_back(fb);
        sol.f.push_back(sol.delta_power * fb);
        sol.error.push_back(abs(fb) * eps_work(4));
    }
    return sol;
}

SolutionVector solve_integral(const PeriodData& pd, std::vector<int> cycle_refs,
                              std::vector<int> pset) {
    const CurveSpec& spec = pd.spec;
    const int L = spec.L;
    const int g = spec.genus;
    if (L == 0) return solve_integral(spec);

    if (cycle_refs.empty()) {
        if (L > g) fail("GenusTooSmall", "fewer independent loops than determinant rows");
        for (int i = 1; i <= L; ++i) cycle_refs.push_back(i);
    }
    if (int(cycle_refs.size()) != L) fail("BadCount", "need exactly L cycle references");
    for (int r : cycle_refs)
        if (r == 0 || r > g || r < -g) fail("InvalidIndex", "cycle reference out of range");
    if (std::set<int>(cycle_refs.begin(), cycle_refs.end()).size() != cycle_refs.size())
        fail("InvalidIndex", "repeated cycle reference");

    if (pset.empty())
        for (int i = 1; i <= L; ++i) pset.push_back(i);
    if (int(pset.size()) != L) fail("BadCount", "need exactly L pole choices");
    for (int p : pset)
        if (p < 1 || p > spec.nm()) fail("InvalidIndex", "pole choice out of range");
    if (std::set<int>(pset.begin(), pset.end()).size() != pset.size())
        fail("DegenerateVandermonde", "repeated entry in the pole set");

    SolutionVector sol;
    sol.partitions = enumerate_partitions(spec.N, spec.m);
    sol.cycle_refs = cycle_refs;
    sol.pset = pset;
    finish_metadata(sol, spec);

    /* everything the determinants need, batched into one cache fill */
    std::vector<DifferentialRef> mu_refs;
    std::vector<std::vector<CVec>> polys(sol.partitions.size());
    std::size_t mono_count = 0;
    for (std::size_t n = 0; n < sol.partitions.size(); ++n) {
        const auto& part = sol.partitions[n];
        for (int p : pset) mu_refs.push_back(canonical_mu(spec, part, p));
        for (int j = 1; j <= L; ++j) {
            polys[n].push_back(zeta_polynomial(spec, part, j));
            mono_count = std::max(mono_count, polys[n].back().size());
        }
    }
    std::vector<DifferentialRef> monos;
    for (std::size_t k = 0; k < mono_count; ++k) {
        CVec e(k + 1, Complex(Real(0)));
        e[k] = Complex(Real(1));
        monos.push_back(DifferentialRef::poly_over_s(e, "z^" + std::to_string(k)));
    }
    std::vector<DifferentialRef> batch = mu_refs;
    batch.insert(batch.end(), monos.begin(), monos.end());
    pd.fill_cache(batch);

    const std::size_t Ls = std::size_t(L);
    CMat mono_periods(mono_count, CVec(Ls));
    for (std::size_t k = 0; k < mono_count; ++k)
        for (int i = 0; i < L; ++i)
            mono_periods[k][size_t(i)] = period_of(pd, monos[k], cycle_refs[size_t(i)]);

    Complex vdm(Real(1));
    for (int a = 0; a < L; ++a)
        for (int b = a + 1; b < L; ++b)
            vdm = vdm * (spec.lambda(pset[size_t(a)]) - spec.lambda(pset[size_t(b)]));

    std::vector<Real> entry_err(Ls);
    for (int i = 0; i < L; ++i)
        entry_err[size_t(i)] = pd.quad_error * row_coeff_sum(pd, cycle_refs[size_t(i)]);

    Real gap_num(0), gap_den(0);
    for (std::size_t n = 0; n < sol.partitions.size(); ++n) {
        const auto& part = sol.partitions[n];
        CMat M1(Ls, CVec(Ls)), M2(Ls, CVec(Ls));
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) {
                M1[size_t(i)][size_t(j)] =
                    period_of(pd, mu_refs[n * size_t(L) + size_t(j)], cycle_refs[size_t(i)]);
                Complex acc(Real(0));
                const CVec& c = polys[n][size_t(j)];
                for (std::size_t k = 0; k < c.size(); ++k)
                    acc = acc + c[k] * mono_periods[k][size_t(i)];
                M2[size_t(i)][size_t(j)] = acc;
            }
        Complex bpp = block_pair_product_all(spec, part);
        Complex fb1 = det(M1) / (vdm * bpp);
        Complex fb2 = det(M2) / bpp;
        sol.fbar.push_back(fb1);
        sol.f.push_back(sol.delta_power * fb1);

        auto w = det_row_weights(M1);
        Real err(0);
        for (int i = 0; i < L; ++i) err += w[size_t(i)] * entry_err[size_t(i)];
        sol.error.push_back(err / abs(vdm * bpp));

        Real d = abs(fb1 - fb2);
        if (d > gap_num) gap_num = d;
        Real a = abs(fb1);
        if (a > gap_den) gap_den = a;
    }
    sol.disagreement = gap_den > 0 ? gap_num / gap_den : gap_num;
    return sol;
}

namespace {

SolutionVector solve_at(const CurveSpec& ref, const CVec& lambdas, const IntersectionData* base,
                        bool* grew) {
    CurveSpec spec = validate_curve(ref.N, ref.m, lambdas, ref.precision_bits);
    if (spec.L == 0) return solve_integral(spec);
    PeriodData pd = build_period_data(spec);
    if (base) {
        bool same = pd.homo.cycles.size() == base->cycles.size() &&
                    pd.homo.pairing == base->pairing && pd.homo.transform == base->transform;
        if (same)
            for (std::size_t i = 0; i < pd.homo.cycles.size(); ++i) {
                const auto& c = pd.homo.cycles[i].code;
                const auto& d = base->cycles[i].code;
                if (c.a != d.a || c.b != d.b || c.k != d.k) same = false;
            }
        if (!same) *grew = true;
    }
    return solve_integral(pd);
}

} // namespace

Real kz_residual(const CurveSpec& spec, int p, Real h) {
    if (p < 1 || p > spec.nm()) fail("InvalidIndex", "branch index out of range");
    if (h <= 0) h = spec.min_spacing / 10000;
    if (h * 4 > spec.min_spacing)
        fail("StepTooLarge", "the step crowds a neighboring branch point");

    const IntersectionData* base = nullptr;
    IntersectionData base_homo;
    if (spec.L > 0) {
        base_homo = homology_data(spec);
        base = &base_homo;
    }

    SolutionVector center = spec.L > 0 ? solve_integral(build_period_data(spec))
                                       : solve_integral(spec);

    bool grew = false;
    auto shifted = [&](const Real& d) {
        CVec l = spec.lambdas;
        l[size_t(p - 1)] = l[size_t(p - 1)] + Complex(d);
        SolutionVector s = solve_at(spec, l, base, &grew);
        if (grew) fail("StepTooLarge", "the loop skeleton changed under the step");
        if (abs(s.log_delta.im - center.log_delta.im) > pi_value() / 2)
            fail("StepTooLarge", "the recorded branch jumped under the step");
        return s;
    };
    Real h2 = h / 2;
    SolutionVector sp = shifted(h), sm = shifted(-h), sp2 = shifted(h2), sm2 = shifted(-h2);

    const int N = spec.N;
    const std::size_t count = center.partitions.size();
    std::vector<Complex> lhs_f(count), lhs_fb(count), rhs_f(count), rhs_fb(count);
    for (std::size_t n = 0; n < count; ++n) {
        Complex d1 = (sp.f[n] - sm.f[n]) / Complex(2 * h);
        Complex d2 = (sp2.f[n] - sm2.f[n]) / Complex(2 * h2);
        lhs_f[n] = (Complex(Real(4)) * d2 - d1) / Complex(Real(3));
        d1 = (sp.fbar[n] - sm.fbar[n]) / Complex(2 * h);
        d2 = (sp2.fbar[n] - sm2.fbar[n]) / Complex(2 * h2);
        lhs_fb[n] = (Complex(Real(4)) * d2 - d1) / Complex(Real(3));

        const auto& part = center.partitions[n];
        int r = part.block_of(p);
        Complex own(Real(0)), other(Real(0)), swap_f(Real(0)), swap_fb(Real(0));
        for (int q = 1; q <= spec.nm(); ++q) {
            if (q == p) continue;
            Complex inv = Complex(Real(1)) / (spec.lambda(p) - spec.lambda(q));
            if (part.block_of(q) == r) {
                own = own + inv;
            } else {
                other = other + inv;
                std::size_t t = center.index(part.swapped(p, q));
                swap_f = swap_f + center.f[t] * inv;
                swap_fb = swap_fb + center.fbar[t] * inv;
            }
        }
        Real c1 = Real(N - 1) / (N * N);
        Real c2 = Real(1) / (N * N);
        rhs_f[n] = (Complex(c1) * own - Complex(c2) * other) * center.f[n] +
                   Complex(Real(1) / N) * swap_f;
        rhs_fb[n] = Complex(Real(1) / N) * (swap_fb - other * center.fbar[n]);
    }

    Real scale(0), worst(0);
    for (std::size_t n = 0; n < count; ++n) {
        for (const Complex* v : {&lhs_f[n], &rhs_f[n], &lhs_fb[n], &rhs_fb[n]})
            scale = std::max(scale, abs(*v));
    }
    if (scale == 0) fail("NonConvergent", "all derivative terms vanished");
    for (std::size_t n = 0; n < count; ++n) {
        worst = std::max(worst, abs(lhs_f[n] - rhs_f[n]));
        worst = std::max(worst, abs(lhs_fb[n] - rhs_fb[n]));
    }
    return worst / scale;
}

Real singlet_residual(const SolutionVector& sol) {
    if (sol.partitions.empty()) fail("BadCount", "empty solution");
    const int N = sol.partitions[0].N();
    const int m = sol.partitions[0].m();
    Real den(0);
    for (const auto& v : sol.fbar) den = std::max(den, abs(v));
    if (den == 0) fail("NonConvergent", "solution vanishes identically");
    Real num(0);
    for (std::size_t n = 0; n < sol.partitions.size(); ++n) {
        const auto& part = sol.partitions[n];
        for (int r = 1; r <= N; ++r)
            for (int t = 1; t <= N; ++t) {
                if (t == r) continue;
                int q = part.element(t, m);
                Complex s = sol.fbar[n];
                for (int l = 1; l <= m; ++l)
                    s = s + sol.fbar_of(part.swapped(part.element(r, l), q));
                num = std::max(num, abs(s));
            }
    }
    return num / den;
}

DimCounts dim_counts(int N, int m) {
    if (N < 2 || m < 1) fail("InvalidIndex", "need N >= 2 and m >= 1");
    DimCounts out;
    Int num(1);
    for (int t = 2; t <= N * m; ++t) num *= t;
    Int den(1);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < m; ++j) den *= m + k - j;
    out.mult = num / den;
    if (out.mult * den != num) fail("PrecisionLoss", "multiplicity count is not integral");
    out.indep = binomial_int(N * m - 2, (N - 1) * m - 1);
    out.ratio = Rat(out.mult) / Rat(out.indep);
    return out;
}

} // namespace zn
