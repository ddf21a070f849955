#include "zn/periods.hpp"
#include "zn/error.hpp"

#include <algorithm>

namespace zn {

namespace {

Complex poly_eval_c(const CVec& coeff, const Complex& z) {
    Complex acc(0);
    for (size_t i = coeff.size(); i-- > 0;) acc = acc * z + coeff[i];
    return acc;
}

/* Form with per-curve constants folded out of the inner quadrature loop. */
struct CompiledForm {
    DifferentialRef ref;
    CVec zpoly;                 /* weight-derivative polynomial */
    Complex gout;               /* complement product at the pole */
    std::vector<int> members;   /* own block, pole removed */

    Complex eval(const CurveSpec& spec, const Complex& z, const Complex& s) const {
        switch (ref.kind) {
        case DifferentialRef::Holo:
            return pow_int(z, ref.b - 1) / pow_int(s, ref.a);
        case DifferentialRef::Mu: {
            Complex acc(1);
            for (int j : members) acc = acc * (z - spec.lambda(j));
            return gout * acc / ((z - spec.lambda(ref.p)) * s);
        }
        case DifferentialRef::Zeta:
        case DifferentialRef::PolyS:
            return poly_eval_c(zpoly, z) / s;
        case DifferentialRef::ExactPart: {
            Complex zl = z - spec.lambda(ref.p);
            Complex f = pow_int(s, spec.N);
            Complex num = Complex(Real(spec.N - 1) / spec.N) * spec.fprime(z) * zl - f;
            return num * Complex(Real(spec.N)) / (zl * zl * s);
        }
        case DifferentialRef::SpinF: {
            SheetPoint x{z, sheet_of(spec, z, s), s};
            return eval_form(spec, ref, x);
        }
        }
        fail("InvalidIndex", "unknown form kind");
    }
};

CompiledForm compile_form(const CurveSpec& spec, const DifferentialRef& form) {
    validate_ref(spec, form);
    CompiledForm out;
    out.ref = form;
    if (form.kind == DifferentialRef::Zeta) {
        out.zpoly = zeta_polynomial(spec, *form.part, form.j);
    } else if (form.kind == DifferentialRef::PolyS) {
        out.zpoly = form.coeffs;
    } else if (form.kind == DifferentialRef::Mu) {
        int r = form.part->block_of(form.p);
        Complex acc(1);
        for (int q = 1; q <= spec.nm(); ++q)
            if (form.part->block_of(q) != r) acc = acc * (spec.lambda(form.p) - spec.lambda(q));
        out.gout = acc;
        for (int j : form.part->block(r))
            if (j != form.p) out.members.push_back(j);
    }
    return out;
}

/* Advance logs along the straight segment to `target`, substepping so each
   factor rotates less than a quarter turn. Factor `exempt` (1-based, or 0)
   is skipped in the distance guards; its ratio must stay on a ray. */
void walk_segment(const CurveSpec& spec, FactorLogs& st, const Complex& target, int exempt) {
    Real clear = path_clearance(spec);
    int guard = 0;
    while (true) {
        Complex rest = target - st.z;
        Real len = abs(rest);
        if (len == 0) return;
        Real dmin(-1);
        for (int j = 1; j <= spec.nm(); ++j) {
            if (j == exempt) continue;
            Real d = abs(st.z - spec.lambda(j));
            if (dmin < 0 || d < dmin) dmin = d;
        }
        if (dmin >= 0 && dmin < clear) fail("PathTooClose", "segment hugs a branch point");
        Complex next = target;
        if (dmin >= 0 && len > dmin * 2 / 5) {
            Real frac = dmin * 2 / 5 / len;
            next = st.z + rest * frac;
        }
        for (int j = 1; j <= spec.nm(); ++j) {
            Complex num = next - spec.lambda(j);
            if (j != exempt && abs(num) < clear)
                fail("PathTooClose", "segment hugs a branch point");
            Complex ratio = num / (st.z - spec.lambda(j));
            st.logs[size_t(j - 1)] = st.logs[size_t(j - 1)] + log(ratio);
        }
        st.z = next;
        if (++guard > 4000000) fail("NonConvergent", "segment walk stalled");
    }
}

struct QuadCtx {
    const CurveSpec& spec;
    const std::vector<CompiledForm>& forms;
    const GLRule& rule;
    Real tol;
    int exempt = 0;             /* terminal branch index, 0 on plain chords */
    Complex pole_leg;           /* z1 - lambda_p for the endpoint chart */
    std::vector<Complex> acc;
    Real err{0};
    std::vector<Real> gscale;   /* per-form running mass of the whole run, floors the
                                   acceptance test so tiny panels are judged against
                                   the integral instead of their own roundoff */
};

/* One Gauss panel on the plain linear chart. */
std::vector<Complex> gl_panel(QuadCtx& ctx, const FactorLogs& base, const Complex& a,
                              const Complex& b, std::vector<Real>& scale) {
    size_t nf = ctx.forms.size();
    std::vector<Complex> out(nf, Complex(0));
    scale.assign(nf, Real(0));
    Complex half = (b - a) / 2;
    for (size_t i = 0; i < ctx.rule.nodes.size(); ++i) {
        Real t01 = (ctx.rule.nodes[i] + 1) / 2;
        Complex z = a + (b - a) * t01;
        FactorLogs st = base;
        walk_segment(ctx.spec, st, z, ctx.exempt);
        Complex s = st.s(ctx.spec);
        for (size_t f = 0; f < nf; ++f) {
            Complex v = ctx.forms[f].eval(ctx.spec, z, s) * half * ctx.rule.weights[i];
            out[f] = out[f] + v;
            scale[f] += abs(v);
        }
    }
    return out;
}

void panel_linear(QuadCtx& ctx, const FactorLogs& base, const Complex& a, const Complex& b,
                  int depth) {
    std::vector<Real> sc1, sc2a, sc2b;
    auto whole = gl_panel(ctx, base, a, b, sc1);
    Complex mid = (a + b) / 2;
    auto left = gl_panel(ctx, base, a, mid, sc2a);
    FactorLogs at_mid = base;
    walk_segment(ctx.spec, at_mid, mid, ctx.exempt);
    auto right = gl_panel(ctx, at_mid, mid, b, sc2b);

    bool ok = true;
    Real worst(0);
    for (size_t f = 0; f < ctx.forms.size(); ++f) {
        Real mass = sc2a[f] + sc2b[f];
        if (mass > ctx.gscale[f]) ctx.gscale[f] = mass;
        Real diff = abs(whole[f] - (left[f] + right[f]));
        Real ref = abs(left[f] + right[f]) + mass + ctx.gscale[f];
        if (diff > ctx.tol * ref) ok = false;
        if (diff > worst) worst = diff;
    }
    if (ok) {
        for (size_t f = 0; f < ctx.forms.size(); ++f) ctx.acc[f] = ctx.acc[f] + left[f] + right[f];
        ctx.err += worst;
        return;
    }
    if (depth >= 34) fail("NoConvergence", "panel refinement exhausted");
    panel_linear(ctx, base, a, mid, depth + 1);
    FactorLogs at_mid2 = base;
    walk_segment(ctx.spec, at_mid2, mid, ctx.exempt);
    panel_linear(ctx, at_mid2, mid, b, depth + 1);
}

/* Move a state along the endpoint ray z(u) = lambda_p + leg u^N.  The pinned
   factor's log follows the chart variable exactly; recovering it from z
   differences sheds most of its precision once leg*u^N drops below the
   representable offset at lambda_p. */
void walk_u(QuadCtx& ctx, FactorLogs& st, const Real& u_from, const Real& u_to,
            const Complex& z_to) {
    size_t e = size_t(ctx.exempt - 1);
    Complex keep = st.logs[e];
    walk_segment(ctx.spec, st, z_to, ctx.exempt);
    Real dl = Real(ctx.spec.N) * log(u_to / u_from);
    st.logs[e] = keep + Complex(dl, Real(0));
}

/* Endpoint chart z(u) = lambda_p + leg * u^N straightens the root branch on
   the final approach; panels descend from u = hi with known logs there. */
std::vector<Complex> gl_panel_u(QuadCtx& ctx, const FactorLogs& base_hi, const Real& hi,
                                const Real& lo, std::vector<Real>& scale) {
    size_t nf = ctx.forms.size();
    std::vector<Complex> out(nf, Complex(0));
    scale.assign(nf, Real(0));
    const CurveSpec& spec = ctx.spec;
    Complex pole = spec.lambda(ctx.exempt);
    Real half = (hi - lo) / 2;
    for (size_t i = 0; i < ctx.rule.nodes.size(); ++i) {
        Real u = lo + (hi - lo) * ((ctx.rule.nodes[i] + 1) / 2);
        Real un = u;
        for (int t = 1; t < spec.N; ++t) un *= u;        /* u^N */
        Complex z = pole + ctx.pole_leg * un;
        FactorLogs st = base_hi;
        walk_u(ctx, st, hi, u, z);
        Complex s = st.s(spec);
        Real dun = Real(spec.N);                          /* N u^{N-1} */
        for (int t = 1; t < spec.N; ++t) dun *= u;
        Complex jac = ctx.pole_leg * dun * half * ctx.rule.weights[i];
        for (size_t f = 0; f < nf; ++f) {
            Complex v = ctx.forms[f].eval(spec, z, s) * jac;
            out[f] = out[f] + v;
            scale[f] += abs(v);
        }
    }
    return out;
}

void panel_u(QuadCtx& ctx, const FactorLogs& base_hi, const Real& hi, const Real& lo, int depth) {
    std::vector<Real> sc1, sc2a, sc2b;
    auto whole = gl_panel_u(ctx, base_hi, hi, lo, sc1);
    Real mid = (hi + lo) / 2;
    auto upper = gl_panel_u(ctx, base_hi, hi, mid, sc2a);
    Real un = mid;
    for (int t = 1; t < ctx.spec.N; ++t) un *= mid;
    FactorLogs at_mid = base_hi;
    walk_u(ctx, at_mid, hi, mid, ctx.spec.lambda(ctx.exempt) + ctx.pole_leg * un);
    auto lower = gl_panel_u(ctx, at_mid, mid, lo, sc2b);

    bool ok = true;
    Real worst(0);
    for (size_t f = 0; f < ctx.forms.size(); ++f) {
        Real mass = sc2a[f] + sc2b[f];
        if (mass > ctx.gscale[f]) ctx.gscale[f] = mass;
        Real diff = abs(whole[f] - (upper[f] + lower[f]));
        Real ref = abs(upper[f] + lower[f]) + mass + ctx.gscale[f];
        if (diff > ctx.tol * ref) ok = false;
        if (diff > worst) worst = diff;
    }
    if (ok) {
        for (size_t f = 0; f < ctx.forms.size(); ++f)
            ctx.acc[f] = ctx.acc[f] + upper[f] + lower[f];
        ctx.err += worst;
        return;
    }
    if (depth >= 34) fail("NoConvergence", "endpoint panel refinement exhausted");
    panel_u(ctx, base_hi, hi, mid, depth + 1);
    panel_u(ctx, at_mid, mid, lo, depth + 1);
}

[[noreturn]] void rethrow_quad(const Error& e) {
    if (e.code == "PathTooClose" || e.code == "PoleHit") fail("PoleOnPath", e.what());
    throw e;
}

MultiQuad run_quad(const CurveSpec& spec, const std::vector<DifferentialRef>& forms,
                   const std::vector<Complex>& polyline, FactorLogs st, int terminal) {
    if (polyline.size() < 2) fail("BadInput", "polyline needs two or more vertices");
    std::vector<CompiledForm> cf;
    cf.reserve(forms.size());
    for (auto& f : forms) cf.push_back(compile_form(spec, f));
    QuadCtx ctx{spec, cf, gauss_legendre(32), eps_work(16), 0, Complex(0), {}, Real(0)};
    ctx.acc.assign(forms.size(), Complex(0));
    ctx.gscale.assign(forms.size(), Real(0));
    try {
        size_t last = polyline.size() - 1;
        for (size_t i = 0; i + 1 < polyline.size(); ++i) {
            bool is_term = terminal != 0 && i + 1 == last;
            if (!is_term) {
                panel_linear(ctx, st, polyline[i], polyline[i + 1], 0);
                walk_segment(spec, st, polyline[i + 1], 0);
            } else {
                ctx.exempt = terminal;
                ctx.pole_leg = polyline[i] - spec.lambda(terminal);
                /* descending orientation: subtract the ascending u-integral */
                std::vector<Complex> before = ctx.acc;
                ctx.acc.assign(forms.size(), Complex(0));
                panel_u(ctx, st, Real(1), Real(0), 0);
                for (size_t f = 0; f < forms.size(); ++f)
                    ctx.acc[f] = before[f] - ctx.acc[f];
            }
        }
    } catch (const Error& e) {
        rethrow_quad(e);
    }
    return MultiQuad{ctx.acc, ctx.err};
}

} // namespace

MultiQuad integrate_forms_polyline(const CurveSpec& spec,
                                   const std::vector<DifferentialRef>& forms,
                                   const std::vector<Complex>& polyline, int start_sheet) {
    if (start_sheet < 0 || start_sheet >= spec.N) fail("InvalidIndex", "sheet out of range");
    FactorLogs st = factor_logs_at(spec, polyline.at(0));
    st.logs[0].im += 2 * pi_value() * Real(start_sheet);
    return run_quad(spec, forms, polyline, st, 0);
}

MultiQuad integrate_forms_cycle(const CurveSpec& spec,
                                const std::vector<DifferentialRef>& forms, const Cycle& cycle) {
    auto flat = cycle.flat();
    MultiQuad out = integrate_forms_polyline(spec, forms, flat, cycle.start.sheet);
    return out;
}

QuadResult integrate_cycle(const CurveSpec& spec, const DifferentialRef& form,
                           const Cycle& cycle) {
    MultiQuad m = integrate_forms_cycle(spec, {form}, cycle);
    return QuadResult{m.values[0], m.error};
}

MultiQuad integrate_forms_to_branch(const CurveSpec& spec,
                                    const std::vector<DifferentialRef>& forms, int p) {
    if (p < 1 || p > spec.nm()) fail("InvalidIndex", "branch index out of range");
    auto path = pinned_path(spec, spec.lambda(p));
    FactorLogs st = factor_logs_at(spec, path.at(0));
    return run_quad(spec, forms, path, st, p);
}

int PeriodData::holo_index(int a, int b) const {
    if (a < 1 || a >= spec.N || b < 1 || b > a * spec.m - 1)
        fail("InvalidIndex", "no such basis form");
    int idx = 0;
    for (int t = 1; t < a; ++t) idx += t * spec.m - 1;
    return idx + b - 1;
}

std::vector<Complex> PeriodData::d_coeff(int beta) const {
    if (beta < 1 || beta > spec.L) fail("InvalidIndex", "weight index out of range");
    int c = holo_index(spec.N - 1, beta);
    std::vector<Complex> out;
    out.reserve(sigma.size());
    for (size_t j = 0; j < sigma.size(); ++j) out.push_back(sigma[j][size_t(c)]);
    return out;
}

const std::vector<Complex>& PeriodData::elementary(const DifferentialRef& form) const {
    auto it = cache.find(form.key());
    if (it != cache.end()) return it->second;
    fill_cache({form});
    return cache.at(form.key());
}

void PeriodData::fill_cache(const std::vector<DifferentialRef>& forms) const {
    std::vector<DifferentialRef> missing;
    for (auto& f : forms)
        if (!cache.count(f.key())) missing.push_back(f);
    if (missing.empty()) return;
    size_t n = homo.cycles.size();
    std::vector<std::vector<Complex>> vals(missing.size(), std::vector<Complex>(n));
    for (size_t j = 0; j < n; ++j) {
        MultiQuad q = integrate_forms_cycle(spec, missing, homo.cycles[j]);
        for (size_t f = 0; f < missing.size(); ++f) vals[f][j] = q.values[f];
        if (q.error > quad_error) quad_error = q.error;
    }
    for (size_t f = 0; f < missing.size(); ++f) cache[missing[f].key()] = std::move(vals[f]);
}

Complex PeriodData::a_period(const DifferentialRef& form, int i) const {
    if (i < 1 || i > homo.genus) fail("InvalidIndex", "basis index out of range");
    const auto& elem = elementary(form);
    Complex acc(0);
    for (size_t j = 0; j < elem.size(); ++j)
        if (arows[size_t(i - 1)][j] != 0) acc = acc + Complex(Real(arows[size_t(i - 1)][j])) * elem[j];
    return acc;
}

Complex PeriodData::b_period(const DifferentialRef& form, int i) const {
    if (i < 1 || i > homo.genus) fail("InvalidIndex", "basis index out of range");
    const auto& elem = elementary(form);
    Complex acc(0);
    for (size_t j = 0; j < elem.size(); ++j)
        if (brows[size_t(i - 1)][j] != 0) acc = acc + Complex(Real(brows[size_t(i - 1)][j])) * elem[j];
    return acc;
}

PeriodData build_period_data(const CurveSpec& spec) {
    PeriodData pd;
    pd.spec = spec;
    pd.homo = homology_data(spec);
    int g = spec.genus;

    for (int a = 1; a < spec.N; ++a)
        for (int b = 1; b <= a * spec.m - 1; ++b) pd.holos.push_back(DifferentialRef::holo(a, b));
    if (int(pd.holos.size()) != g) fail("BadCount", "basis count does not match the genus");

    pd.arows.resize(size_t(g));
    pd.brows.resize(size_t(g));
    for (int i = 1; i <= g; ++i) {
        pd.arows[size_t(i - 1)] = pd.homo.a_row(i);
        pd.brows[size_t(i - 1)] = pd.homo.b_row(i);
    }

    pd.quad_error = Real(0);
    pd.fill_cache(pd.holos);

    auto assemble = [&](const IMat& rows) {
        CMat M(size_t(g), CVec(size_t(g), Complex(0)));
        for (int i = 0; i < g; ++i)
            for (int c = 0; c < g; ++c) {
                const auto& elem = pd.elementary(pd.holos[size_t(c)]);
                Complex acc(0);
                for (size_t j = 0; j < elem.size(); ++j)
                    if (rows[size_t(i)][j] != 0)
                        acc = acc + Complex(Real(rows[size_t(i)][j])) * elem[j];
                M[size_t(i)][size_t(c)] = acc;
            }
        return M;
    };

    auto normalize = [&](const CMat& A, const CMat& B, CMat& sigma, CMat& tau) {
        CMat inv;
        try {
            inv = inverse(A);
        } catch (const SingularMatrix&) {
            fail("SingularAMatrix", "degenerate normalization system");
        }
        Complex twopii(Real(0), 2 * pi_value());
        sigma.assign(size_t(g), CVec(size_t(g), Complex(0)));
        for (int j = 0; j < g; ++j)
            for (int c = 0; c < g; ++c) sigma[size_t(j)][size_t(c)] = twopii * inv[size_t(c)][size_t(j)];
        tau.assign(size_t(g), CVec(size_t(g), Complex(0)));
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                Complex acc(0);
                for (int c = 0; c < g; ++c)
                    acc = acc + sigma[size_t(i)][size_t(c)] * B[size_t(j)][size_t(c)];
                tau[size_t(i)][size_t(j)] = acc;
            }
    };

    auto neg_definite = [&](const CMat& tau) {
        std::vector<std::vector<Real>> S;
        S.assign(size_t(g), std::vector<Real>(size_t(g), Real(0)));
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j)
                S[size_t(i)][size_t(j)] = (tau[size_t(i)][size_t(j)].re + tau[size_t(j)][size_t(i)].re) / 2;
        auto eig = symmetric_eigenvalues(S);
        return eig.back() < 0;
    };

    CMat A = assemble(pd.arows), B = assemble(pd.brows);
    CMat sigma, tau;
    normalize(A, B, sigma, tau);
    if (!neg_definite(tau)) {
        /* orientation fix: (A, B) -> (B, -A) keeps the pairing symplectic */
        std::swap(pd.arows, pd.brows);
        for (auto& row : pd.brows)
            for (auto& v : row) v = -v;
        pd.swapped = true;
        A = assemble(pd.arows);
        B = assemble(pd.brows);
        normalize(A, B, sigma, tau);
        if (!neg_definite(tau))
            fail("NotNegativeDefinite", "no orientation yields a convergent period matrix");
    }

    Real scale(1);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) scale = std::max(scale, abs(tau[size_t(i)][size_t(j)]));
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            if (abs(tau[size_t(i)][size_t(j)] - tau[size_t(j)][size_t(i)]) > scale * eps_work(48))
                fail("NonConvergent", "period matrix asymmetry exceeds tolerance");

    pd.A = std::move(A);
    pd.B = std::move(B);
    pd.sigma = std::move(sigma);
    pd.tau = std::move(tau);
    return pd;
}

} // namespace zn
