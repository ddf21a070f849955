#include "zn/differentials.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace zn {

DifferentialRef DifferentialRef::holo(int a, int b) {
    DifferentialRef r;
    r.kind = Holo;
    r.a = a;
    r.b = b;
    return r;
}
DifferentialRef DifferentialRef::mu(OrderedPartition part, int p) {
    DifferentialRef r;
    r.kind = Mu;
    r.part = std::move(part);
    r.p = p;
    return r;
}
DifferentialRef DifferentialRef::zeta(OrderedPartition part, int j) {
    DifferentialRef r;
    r.kind = Zeta;
    r.part = std::move(part);
    r.j = j;
    return r;
}
DifferentialRef DifferentialRef::exact_part(int p) {
    DifferentialRef r;
    r.kind = ExactPart;
    r.p = p;
    return r;
}
DifferentialRef DifferentialRef::spin(int twice_l, OrderedPartition part, int sign) {
    DifferentialRef r;
    r.kind = SpinF;
    r.twice_l = twice_l;
    r.part = std::move(part);
    r.sign = sign;
    return r;
}
DifferentialRef DifferentialRef::poly_over_s(CVec coeffs, std::string tag) {
    DifferentialRef r;
    r.kind = PolyS;
    r.coeffs = std::move(coeffs);
    r.tag = std::move(tag);
    return r;
}

std::string DifferentialRef::key() const {
    std::ostringstream os;
    switch (kind) {
    case Holo: os << "holo:" << a << ":" << b; break;
    case Mu: os << "mu:" << p << ":" << part->to_string(); break;
    case Zeta: os << "zeta:" << j << ":" << part->to_string(); break;
    case ExactPart: os << "exact:" << p; break;
    case SpinF: os << "spin:" << twice_l << ":" << sign << ":" << part->to_string(); break;
    case PolyS: os << "polys:" << tag; break;
    }
    return os.str();
}

Rat spin_q(int N, int twice_l, int i) {
    if (((twice_l - (N - 1)) % 2) != 0)
        fail("InvalidIndex", "spin label parity must match N-1");
    long u2 = static_cast<long>(twice_l) + 2L * i + (N - 1);
    long u = u2 / 2;
    long r = ((u % N) + N) % N;
    return Rat(1 - N, 2L * N) + Rat(r, N);
}

Rat spin_q_pair(int N, int i, int j) {
    Rat total(0);
    for (int t = 0; t < N; ++t) {
        int twice_l = 2 * t - (N - 1);
        total += spin_q(N, twice_l, i) * spin_q(N, twice_l, j);
    }
    return total;
}

Complex block_poly_in(const CurveSpec& spec, const OrderedPartition& part, int r,
                      const Complex& z) {
    Complex v(1);
    for (int idx : part.block(r)) v *= (z - spec.lambda(idx));
    return v;
}

Complex block_poly_out(const CurveSpec& spec, const OrderedPartition& part, int r,
                       const Complex& z) {
    Complex v(1);
    const auto& b = part.block(r);
    for (int idx = 1; idx <= spec.nm(); ++idx)
        if (!std::binary_search(b.begin(), b.end(), idx)) v *= (z - spec.lambda(idx));
    return v;
}

Complex block_poly_in_excl(const CurveSpec& spec, const OrderedPartition& part, int r, int p,
                           const Complex& z) {
    Complex v(1);
    for (int idx : part.block(r))
        if (idx != p) v *= (z - spec.lambda(idx));
    return v;
}

namespace {
CVec poly_mul(const CVec& a, const CVec& b) {
    if (a.empty() || b.empty()) return {};
    CVec c(a.size() + b.size() - 1, Complex(0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

CVec poly_from_roots(const CurveSpec& spec, const std::vector<int>& roots) {
    CVec c{Complex(1)};
    for (int idx : roots) c = poly_mul(c, CVec{-spec.lambda(idx), Complex(1)});
    return c;
}

Complex poly_eval(const CVec& c, const Complex& z) {
    Complex v(0);
    for (std::size_t i = c.size(); i-- > 0;) v = v * z + c[i];
    return v;
}

std::vector<int> complement_of_block(const OrderedPartition& part, int r) {
    std::vector<int> out;
    const auto& b = part.block(r);
    for (int idx = 1; idx <= part.nm(); ++idx)
        if (!std::binary_search(b.begin(), b.end(), idx)) out.push_back(idx);
    return out;
}
} // namespace

CVec zeta_polynomial(const CurveSpec& spec, const OrderedPartition& part, int j) {
    if (j < 1 || j > spec.L) fail("InvalidIndex", "zeta index outside 1..L");
    const int M = spec.L - j + 1;
    CVec total;
    for (int k = 1; k <= spec.N; ++k) {
        CVec co = poly_from_roots(spec, complement_of_block(part, k));
        /* polynomial part of d/dz (co(z) / z^M): term c_i z^{i-M} has
           derivative (i-M) c_i z^{i-M-1}; keep exponents >= 0 */
        CVec pk;
        for (std::size_t i = static_cast<std::size_t>(M) + 1; i < co.size(); ++i) {
            std::size_t e = i - static_cast<std::size_t>(M) - 1;
            if (pk.size() <= e) pk.resize(e + 1, Complex(0));
            pk[e] += Complex(static_cast<int>(i) - M) * co[i];
        }
        CVec gk = poly_from_roots(spec, part.block(k));
        CVec term = poly_mul(gk, pk);
        if (term.size() > total.size()) total.resize(term.size(), Complex(0));
        for (std::size_t i = 0; i < term.size(); ++i) total[i] += term[i];
    }
    if (total.empty()) total.push_back(Complex(0));
    return total;
}

void validate_ref(const CurveSpec& spec, const DifferentialRef& form) {
    switch (form.kind) {
    case DifferentialRef::Holo:
        if (form.a < 1 || form.a > spec.N - 1 || form.b < 1 || form.b > form.a * spec.m - 1)
            fail("InvalidIndex", "holomorphic form indices out of range");
        break;
    case DifferentialRef::Mu:
        if (form.p < 1 || form.p > spec.nm()) fail("InvalidIndex", "mu point out of range");
        if (!form.part || form.part->N() != spec.N || form.part->m() != spec.m)
            fail("InvalidIndex", "mu needs a partition matching the curve");
        break;
    case DifferentialRef::Zeta:
        if (!form.part || form.part->N() != spec.N || form.part->m() != spec.m)
            fail("InvalidIndex", "zeta needs a partition matching the curve");
        if (form.j < 1 || form.j > spec.L) fail("InvalidIndex", "zeta index outside 1..L");
        break;
    case DifferentialRef::ExactPart:
        if (form.p < 1 || form.p > spec.nm()) fail("InvalidIndex", "point out of range");
        break;
    case DifferentialRef::SpinF:
        if (!form.part || form.part->N() != spec.N || form.part->m() != spec.m)
            fail("InvalidIndex", "spin form needs a partition matching the curve");
        if (((form.twice_l - (spec.N - 1)) % 2) != 0)
            fail("InvalidIndex", "spin label parity must match N-1");
        break;
    case DifferentialRef::PolyS:
        if (form.coeffs.empty() || form.tag.empty())
            fail("InvalidIndex", "coefficient form needs coefficients and a tag");
        break;
    }
}

namespace {
void check_pole_clearance(const CurveSpec& spec, const Complex& z, const Complex& pole) {
    if (abs(z - pole) < path_clearance(spec))
        fail("PoleHit", "evaluation point within clearance of a pole");
}
} // namespace

std::vector<Complex> pinned_path(const CurveSpec& spec, const Complex& z_target) {
    /* straight run from the base point, with a vertex pushed above any
       branch point the segment would graze */
    Complex a = spec.z0, b = z_target;
    Complex d = b - a;
    Real len = abs(d);
    std::vector<std::pair<Real, Complex>> detours;
    Real graze = spec.min_spacing / 4;
    for (int j = 1; j <= spec.nm(); ++j) {
        const Complex& lam = spec.lambda(j);
        if (abs(lam - b) < graze || len.is_zero()) continue;   /* endpoint itself is near */
        Complex rel = lam - a;
        Real t = (rel.re * d.re + rel.im * d.im) / (len * len);
        if (t <= 0 || t >= 1) continue;
        Complex foot = a + Complex(t) * d;
        if (abs(foot - lam) < graze)
            detours.emplace_back(t, lam + Complex(Real(0), graze));
    }
    std::sort(detours.begin(), detours.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<Complex> path{a};
    for (auto& dv : detours) path.push_back(dv.second);
    path.push_back(b);
    return path;
}

namespace {
/* Continued logs of every factor along a polyline, with internal
   subdivision keeping each factor rotation small. */
void walk_logs(const CurveSpec& spec, FactorLogs& st, const std::vector<Complex>& path) {
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
        Complex target = path[seg + 1];
        while (!(target - st.z).is_zero()) {
            Real d_min(-1);
            for (const auto& l : spec.lambdas) {
                Real d = abs(st.z - l);
                if (d_min < 0 || d < d_min) d_min = d;
            }
            Complex dz = target - st.z;
            Real ln = abs(dz);
            Real cap = d_min * Real(2) / Real(5);
            Complex next = target;
            if (ln > cap) next = st.z + dz * Complex(cap / ln);
            advance_logs(spec, st, next);
        }
    }
}

/* Continued logs at a sheet point: pinned path from the base point, the
   base-phase absorption twist, and the winding correction selecting the
   requested sheet. exp((1/N) sum logs) equals x.s exactly. */
std::vector<Complex> spin_logs(const CurveSpec& spec, const SheetPoint& x) {
    FactorLogs st = factor_logs_at(spec, spec.z0);
    st.logs[0].im += 2 * pi_value() * Real(spec.base_phase_exp);
    walk_logs(spec, st, pinned_path(spec, x.z));
    Complex total(0);
    for (const auto& l : st.logs) total += l;
    Complex s_reached = exp(total / spec.N);
    Complex ratio = x.s / s_reached;
    Real kk = arg(ratio) * spec.N / (2 * pi_value());
    mpfr_round(kk.backend().data(), kk.backend().data());
    long delta = static_cast<long>(kk);
    if (abs(ratio - spec.omega_pow(delta)) > Real("1e-6"))
        fail("PrecisionLoss", "sheet alignment failed in spin continuation");
    st.logs[0].im += 2 * pi_value() * Real(((delta % spec.N) + spec.N) % spec.N);
    return st.logs;
}

Complex spin_eval_from_logs(const CurveSpec& spec, int twice_l, const OrderedPartition& part,
                            int sign, const std::vector<Complex>& logs) {
    OrderedPartition eff = (sign > 0) ? part : part.reversed();
    int tl = sign > 0 ? twice_l : -twice_l;
    Complex expo(0);
    for (int i = 1; i <= spec.nm(); ++i) {
        Rat q = spin_q(spec.N, tl, eff.block_of(i));
        long num = static_cast<long>(boost::multiprecision::numerator(q));
        long den = static_cast<long>(boost::multiprecision::denominator(q));
        expo += logs[static_cast<std::size_t>(i - 1)] * Complex(Real(num) / Real(den));
    }
    return exp(expo);
}

/* Continued logs of the factors j != p taken onto z = lambda_p along the
   pinned path (hover above, then drop on); slot p keeps the hover value. */
std::vector<Complex> logs_at_branch(const CurveSpec& spec, int p) {
    Complex hover = spec.lambda(p) + Complex(Real(0), spec.min_spacing / 20);
    FactorLogs st = factor_logs_at(spec, spec.z0);
    st.logs[0].im += 2 * pi_value() * Real(spec.base_phase_exp);
    walk_logs(spec, st, pinned_path(spec, hover));
    const Complex lp = spec.lambda(p);
    for (int j = 1; j <= spec.nm(); ++j) {
        if (j == p) continue;
        Complex w_new = lp - spec.lambda(j);
        Complex w_old = st.z - spec.lambda(j);
        st.logs[static_cast<std::size_t>(j - 1)] =
            Complex(boost::multiprecision::log(abs(w_new)),
                    st.logs[static_cast<std::size_t>(j - 1)].im + arg(w_new / w_old));
    }
    return st.logs;
}
} // namespace

Complex eval_form(const CurveSpec& spec, const DifferentialRef& form, const SheetPoint& x) {
    validate_ref(spec, form);
    const Complex& z = x.z;
    switch (form.kind) {
    case DifferentialRef::Holo:
        return pow_int(z, form.b - 1) / pow_int(x.s, form.a);
    case DifferentialRef::Mu: {
        check_pole_clearance(spec, z, spec.lambda(form.p));
        int r = form.part->block_of(form.p);
        Complex gout = block_poly_out(spec, *form.part, r, spec.lambda(form.p));
        Complex gexcl = block_poly_in_excl(spec, *form.part, r, form.p, z);
        return gout * gexcl / ((z - spec.lambda(form.p)) * x.s);
    }
    case DifferentialRef::Zeta: {
        CVec poly = zeta_polynomial(spec, *form.part, form.j);
        return poly_eval(poly, z) / x.s;
    }
    case DifferentialRef::PolyS:
        return poly_eval(form.coeffs, z) / x.s;
    case DifferentialRef::ExactPart: {
        check_pole_clearance(spec, z, spec.lambda(form.p));
        Complex zl = z - spec.lambda(form.p);
        Complex num = Complex(Real(spec.N - 1) / spec.N) * spec.fprime(z) * zl - spec.f(z);
        return num * Complex(Real(spec.N)) / (zl * zl * x.s);
    }
    case DifferentialRef::SpinF: {
        auto logs = spin_logs(spec, x);
        return spin_eval_from_logs(spec, form.twice_l, *form.part, form.sign, logs);
    }
    }
    fail("InvalidIndex", "unknown form kind");
}

Complex spin_value_at_branch(const CurveSpec& spec, int twice_l, const OrderedPartition& part,
                             int sign, int p) {
    if (p < 1 || p > spec.nm()) fail("InvalidIndex", "branch index out of range");
    OrderedPartition eff = (sign > 0) ? part : part.reversed();
    int tl = sign > 0 ? twice_l : -twice_l;

    /* local exponent of t relative to sqrt(dt): N q + (N-1)/2 must be a
       non-negative integer; positive means the value is 0 */
    Rat a = Rat(spec.N) * spin_q(spec.N, tl, eff.block_of(p)) + Rat(spec.N - 1, 2);
    if (boost::multiprecision::denominator(a) != 1)
        fail("PrecisionLoss", "non-integer local spin exponent");
    long aexp = static_cast<long>(boost::multiprecision::numerator(a));
    if (aexp < 0) fail("PoleAtBranchPoint", "spin form singular at this branch point");
    if (aexp > 0) return Complex(0);

    auto logs = logs_at_branch(spec, p);
    Complex expo(0);
    for (int i = 1; i <= spec.nm(); ++i) {
        if (i == p) continue;
        Rat q = spin_q(spec.N, tl, eff.block_of(i));
        long num = static_cast<long>(boost::multiprecision::numerator(q));
        long den = static_cast<long>(boost::multiprecision::denominator(q));
        expo += logs[static_cast<std::size_t>(i - 1)] * Complex(Real(num) / Real(den));
    }
    return Complex(boost::multiprecision::sqrt(Real(spec.N))) * exp(expo);
}

Complex fprime_root_continued(const CurveSpec& spec, int p) {
    if (p < 1 || p > spec.nm()) fail("InvalidIndex", "branch index out of range");
    auto logs = logs_at_branch(spec, p);
    Complex total(0);
    for (int j = 1; j <= spec.nm(); ++j)
        if (j != p) total += logs[static_cast<std::size_t>(j - 1)];
    return exp(total / spec.N);
}

Complex exact_relation_defect(const CurveSpec& spec, const OrderedPartition& part, int p,
                              const Complex& z, int sheet) {
    SheetPoint x = make_point(spec, z, sheet);
    Complex lhs(0);
    Complex lp_pow(1);
    const Complex lp = spec.lambda(p);
    /* sum_j zeta_j lambda_p^{L-j}: accumulate from j = L down */
    for (int j = spec.L; j >= 1; --j) {
        lhs += eval_form(spec, DifferentialRef::zeta(part, j), x) * lp_pow;
        lp_pow *= lp;
    }
    Complex rhs = eval_form(spec, DifferentialRef::mu(part, p), x) +
                  eval_form(spec, DifferentialRef::exact_part(p), x);
    return lhs - rhs;
}

std::pair<Complex, Complex> eval_spin_product_identities(const CurveSpec& spec,
                                                         const OrderedPartition& part, int p,
                                                         const SheetPoint& x) {
    int N = spec.N;
    int r = part.block_of(p) % N;       /* block N plays the role of 0 */
    int rminus = N - 1 - r;

    /* first identity: branch values at Q_p */
    int tl_a = 2 * r - (N - 1);          /* l = -(N-1)/2 + r     on part reversed */
    int tl_b = 2 * (N - r) - (N - 1);    /* l = -(N-1)/2 + N - r on part */
    Complex va = spin_value_at_branch(spec, -tl_a, part, -1, p);   /* f_{tl_a}(Q_p, part^-) */
    Complex vb = spin_value_at_branch(spec, tl_b, part, +1, p);

    const Complex lp = spec.lambda(p);
    int rblk = part.block_of(p);
    Complex first = va * vb - Complex(Real(N)) * fprime_root_continued(spec, p) /
                                  block_poly_in_excl(spec, part, rblk, p, lp);

    /* second identity: generic-point product */
    int tl_c = 2 * rminus - (N - 1);     /* l = -(N-1)/2 + r^-   on part */
    int tl_d = 2 * (r - 1) - (N - 1);    /* l = -(N-1)/2 + r - 1 on part reversed */
    auto logs = spin_logs(spec, x);
    Complex fc = spin_eval_from_logs(spec, tl_c, part, +1, logs);
    Complex fd = spin_eval_from_logs(spec, -tl_d, part, -1, logs);
    Complex second = fc * fd - block_poly_in(spec, part, rblk, x.z) / x.s;
    return {first, second};
}

Complex szego_algebraic(const CurveSpec& spec, const OrderedPartition& part,
                        const SheetPoint& x, const SheetPoint& y) {
    if (abs(x.z - y.z) < path_clearance(spec))
        fail("CoincidentProjection", "kernel arguments share a projection");
    auto logs_x = spin_logs(spec, x);
    auto logs_y = spin_logs(spec, y);
    Complex total(0);
    for (int t = 0; t < spec.N; ++t) {
        int tl = 2 * t - (spec.N - 1);
        total += spin_eval_from_logs(spec, tl, part, +1, logs_x) *
                 spin_eval_from_logs(spec, tl, part, -1, logs_y);
    }
    return total / Complex(Real(spec.N)) / (y.z - x.z);
}

Complex szego_at_branch(const CurveSpec& spec, const OrderedPartition& part,
                        const SheetPoint& x, int p) {
    check_pole_clearance(spec, x.z, spec.lambda(p));
    auto logs_x = spin_logs(spec, x);
    Complex total(0);
    for (int t = 0; t < spec.N; ++t) {
        int tl = 2 * t - (spec.N - 1);
        Complex vy = spin_value_at_branch(spec, tl, part, -1, p);
        if (vy.is_zero()) continue;
        total += spin_eval_from_logs(spec, tl, part, +1, logs_x) * vy;
    }
    return total / Complex(Real(spec.N)) / (spec.lambda(p) - x.z);
}

Complex local_value_at_branch(const CurveSpec& spec, int p, const DifferentialRef& form) {
    validate_ref(spec, form);
    if (p < 1 || p > spec.nm()) fail("InvalidIndex", "branch index out of range");
    if (form.kind == DifferentialRef::SpinF) {
        /* exact surviving-term extraction via the continued-product formula */
        return spin_value_at_branch(spec, form.twice_l, *form.part, form.sign, p);
    }

    const Complex lp = spec.lambda(p);
    Real d_near(-1);
    for (int j = 1; j <= spec.nm(); ++j) {
        if (j == p) continue;
        Real d = abs(lp - spec.lambda(j));
        if (d_near < 0 || d < d_near) d_near = d;
    }
    const int N = spec.N;
    const unsigned M = static_cast<unsigned>(16 * N);
    Real rho_z = d_near / 20;

    Complex fp = spec.fprime_at_branch(p);
    auto ring_mode = [&](const Real& rz, Complex& mode0, Complex& mode_m1, Complex& mode_m2,
                         Real& scale) {
        Real rho = boost::multiprecision::exp(boost::multiprecision::log(rz) / N);
        Complex c_prev = pow(fp, Complex(Real(1) / N));
        mode0 = mode_m1 = mode_m2 = Complex(0);
        scale = Real(0);
        for (unsigned k = 0; k < M; ++k) {
            Complex t = polar(rho, 2 * pi_value() * Real(static_cast<long>(k)) / Real(static_cast<long>(M)));
            Complex z = lp + pow_int(t, N);
            Complex w(1);
            for (int j = 1; j <= spec.nm(); ++j)
                if (j != p) w *= (z - spec.lambda(j));
            Complex croot = pow(w, Complex(Real(1) / N));
            /* keep the branch continuous along the ring */
            Complex best = croot;
            Real bd = abs(croot - c_prev);
            for (int jj = 1; jj < N; ++jj) {
                Complex cand = croot * spec.omega_pow(jj);
                Real d = abs(cand - c_prev);
                if (d < bd) { bd = d; best = cand; }
            }
            c_prev = best;
            SheetPoint pt{z, 0, t * best};
            Complex g = Complex(Real(N)) * pow_int(t, N - 1) * eval_form(spec, form, pt);
            Real ag = abs(g);
            if (ag > scale) scale = ag;
            mode0 += g;
            mode_m1 += g * t;
            mode_m2 += g * t * t;
        }
        Complex invM(Real(1) / Real(static_cast<long>(M)));
        mode0 *= invM;
        mode_m1 *= invM;
        mode_m2 *= invM;
    };

    Complex prev_rich;
    bool have_prev = false;
    Complex v_prev;
    {
        /* A pole shows up in the shifted modes at the geometric scale
           rho^{1,2}; aliasing of a regular form sits at rho^{M-2} or below,
           so a precision-independent rho^8 threshold separates them. */
        Complex m0, m1, m2;
        Real scale0;
        ring_mode(rho_z, m0, m1, m2, scale0);
        Real rho = boost::multiprecision::exp(boost::multiprecision::log(rho_z) / N);
        Real thresh = scale0 * boost::multiprecision::pow(rho, 8);
        if (abs(m1) > thresh || abs(m2) > thresh)
            fail("PoleAtBranchPoint", "form has a singular part at this branch point");
        v_prev = m0;
    }
    Real rz = rho_z;
    Real two_M = boost::multiprecision::pow(Real(2), static_cast<int>(M) / N);
    for (int iter = 0; iter < 9; ++iter) {
        rz /= 2;
        Complex m0, m1, m2;
        Real scale;
        ring_mode(rz, m0, m1, m2, scale);
        /* one Richardson step removes the first aliased mode */
        Complex rich = (Complex(two_M) * m0 - v_prev) / Complex(two_M - 1);
        if (have_prev) {
            Real tol = (abs(rich) + 1) * eps_work(32);
            if (abs(rich - prev_rich) < tol) return rich;
        }
        prev_rich = rich;
        have_prev = true;
        v_prev = m0;
    }
    fail("NonConvergent", "branch-value extrapolation did not settle");
}

DifferentialRef parse_form(const CurveSpec& spec, const std::string& text,
                           const std::optional<OrderedPartition>& part) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::map<std::string, int> kv;
    if (colon != std::string::npos) {
        std::string rest = text.substr(colon + 1);
        std::istringstream is(rest);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) fail("BadInput", "form option without '=': " + tok);
            kv[tok.substr(0, eq)] = std::stoi(tok.substr(eq + 1));
        }
    }
    DifferentialRef ref;
    if (head == "holo") {
        if (!kv.count("a") || !kv.count("b")) fail("BadInput", "holo needs a= and b=");
        ref = DifferentialRef::holo(kv["a"], kv["b"]);
    } else if (head == "mu") {
        if (!kv.count("p")) fail("BadInput", "mu needs p=");
        if (!part) fail("BadInput", "mu needs a partition");
        ref = DifferentialRef::mu(*part, kv["p"]);
    } else if (head == "zeta") {
        if (!kv.count("j")) fail("BadInput", "zeta needs j=");
        if (!part) fail("BadInput", "zeta needs a partition");
        ref = DifferentialRef::zeta(*part, kv["j"]);
    } else if (head == "exact") {
        if (!kv.count("p")) fail("BadInput", "exact needs p=");
        ref = DifferentialRef::exact_part(kv["p"]);
    } else {
        fail("BadInput", "unknown form: " + head);
    }
    validate_ref(spec, ref);
    return ref;
}

} // namespace zn
