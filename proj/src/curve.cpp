#include "zn/curve.hpp"

namespace zn {

Complex CurveSpec::f(const Complex& z) const {
    Complex r(1);
    for (const auto& l : lambdas) r *= (z - l);
    return r;
}

Complex CurveSpec::fprime(const Complex& z) const {
    /* sum over j of prod_{k != j} (z - lambda_k) */
    const std::size_t n = lambdas.size();
    Complex total(0);
    for (std::size_t j = 0; j < n; ++j) {
        Complex t(1);
        for (std::size_t k = 0; k < n; ++k)
            if (k != j) t *= (z - lambdas[k]);
        total += t;
    }
    return total;
}

Complex CurveSpec::fprime_at_branch(int p) const {
    Complex r(1);
    const Complex& lp = lambda(p);
    for (int j = 1; j <= nm(); ++j)
        if (j != p) r *= (lp - lambda(j));
    return r;
}

Complex CurveSpec::omega_pow(long k) const {
    long kk = ((k % N) + N) % N;
    return root_of_unity(kk, N);
}

namespace {
/* arg with the discontinuity moved onto the downward vertical ray:
   values in [-pi/2, 3pi/2). */
Real arg_cut_down(const Complex& w) {
    Real a = arg(w);
    Real half_pi = pi_value() / 2;
    if (a < -half_pi) a += 4 * half_pi;
    return a;
}
} // namespace

Complex CurveSpec::s0_raw(const Complex& z) const {
    Real log_abs(0), ang(0);
    for (const auto& l : lambdas) {
        Complex w = z - l;
        Real aw = abs(w);
        if (aw.is_zero()) fail("PathTooClose", "s0 evaluated at a branch point");
        log_abs += boost::multiprecision::log(aw);
        ang += arg_cut_down(w);
    }
    return polar(boost::multiprecision::exp(log_abs / N), ang / N);
}

Complex CurveSpec::s0(const Complex& z) const { return base_phase * s0_raw(z); }

CurveSpec validate_curve(int N, int m, const CVec& lambdas, unsigned precision_bits) {
    if (precision_bits == 0) precision_bits = zn::precision_bits();
    if (N < 2 || m < 1)
        fail("BadCount", "need N >= 2 and m >= 1");
    if (lambdas.size() != static_cast<std::size_t>(N) * static_cast<std::size_t>(m))
        fail("BadCount", "expected N*m branch points, got " + std::to_string(lambdas.size()));

    CurveSpec spec;
    spec.N = N;
    spec.m = m;
    spec.lambdas = lambdas;
    spec.genus = ((N - 1) * (N * m - 2)) / 2;
    spec.L = (N - 1) * m - 1;
    spec.precision_bits = precision_bits;

    const std::size_t n = lambdas.size();
    Real diam(0);
    Real minsp(-1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            Real d = abs(lambdas[i] - lambdas[j]);
            if (d > diam) diam = d;
            if (minsp < 0 || d < minsp) minsp = d;
        }
    if (n >= 2 && (diam.is_zero() || minsp <= diam * Real("1e-12")))
        fail("DuplicateBranchPoint", "two branch points closer than 1e-12 of the diameter");
    spec.diameter = diam;
    spec.min_spacing = (minsp < 0) ? Real(1) : minsp;

    Real re_mean(0), im_max;
    for (std::size_t i = 0; i < n; ++i) {
        re_mean += lambdas[i].re;
        if (i == 0 || lambdas[i].im > im_max) im_max = lambdas[i].im;
    }
    re_mean /= static_cast<int>(n);
    spec.z0 = Complex(re_mean, im_max + diam + 1);

    spec.base_phase = Complex(1);
    Complex raw = spec.s0_raw(spec.z0);
    Complex principal = pow(spec.f(spec.z0), Complex(Real(1) / N));
    Complex ratio = principal / raw;
    /* ratio is an N-th root of unity up to rounding */
    Real twopi = 2 * pi_value();
    Real kk = arg(ratio) * N / twopi;
    mpfr_round(kk.backend().data(), kk.backend().data());
    long k = static_cast<long>(kk);
    spec.base_phase_exp = ((k % N) + N) % N;
    spec.base_phase = spec.omega_pow(spec.base_phase_exp);
    if (abs(spec.base_phase - ratio) > eps_work(16))
        fail("PrecisionLoss", "base sheet alignment failed");
    return spec;
}

Real path_clearance(const CurveSpec& spec) {
    return spec.min_spacing * Real("1e-6");
}

int sheet_of(const CurveSpec& spec, const Complex& z, const Complex& s) {
    Complex ratio = s / spec.s0(z);
    Real twopi = 2 * pi_value();
    Real kk = arg(ratio) * spec.N / twopi;
    mpfr_round(kk.backend().data(), kk.backend().data());
    long k = static_cast<long>(kk);
    if (abs(ratio - spec.omega_pow(k)) > Real("1e-6"))
        fail("PrecisionLoss", "s does not match any sheet at this point");
    return static_cast<int>(((k % spec.N) + spec.N) % spec.N);
}

SheetPoint make_point(const CurveSpec& spec, const Complex& z, int sheet) {
    if (sheet < 0 || sheet >= spec.N) fail("InvalidIndex", "sheet out of range");
    SheetPoint p;
    p.z = z;
    p.sheet = sheet;
    p.s = spec.omega_pow(sheet) * spec.s0(z);
    return p;
}

FactorLogs factor_logs_at(const CurveSpec& spec, const Complex& z) {
    FactorLogs st;
    st.z = z;
    st.logs.reserve(spec.lambdas.size());
    for (const auto& l : spec.lambdas) {
        Complex w = z - l;
        Real aw = abs(w);
        if (aw.is_zero()) fail("PathTooClose", "factor log at a branch point");
        st.logs.push_back(Complex(boost::multiprecision::log(aw), arg_cut_down(w)));
    }
    return st;
}

Complex FactorLogs::s(const CurveSpec& spec) const {
    Complex total(0);
    for (const auto& l : logs) total += l;
    return spec.base_phase * exp(total / spec.N);
}

void advance_logs(const CurveSpec& spec, FactorLogs& st, const Complex& z_next) {
    Real clear = path_clearance(spec);
    for (std::size_t j = 0; j < spec.lambdas.size(); ++j) {
        Complex w_new = z_next - spec.lambdas[j];
        Real a_new = abs(w_new);
        if (a_new < clear) fail("PathTooClose", "path within clearance of a branch point");
        Complex w_old = st.z - spec.lambdas[j];
        Complex ratio = w_new / w_old;
        /* principal arg of the ratio is correct when the rotation per step
           stays below pi; callers keep it below pi/2 */
        st.logs[j] = Complex(boost::multiprecision::log(a_new), st.logs[j].im + arg(ratio));
    }
    st.z = z_next;
}

SheetPoint continue_s(const CurveSpec& spec, const std::vector<Complex>& path,
                      const SheetPoint& start) {
    if (path.size() < 2) fail("BadInput", "path needs at least two vertices");
    if (abs(path.front() - start.z) > spec.diameter * Real("1e-20") + eps_work(40))
        fail("BadInput", "path does not start at the given point");

    FactorLogs st = factor_logs_at(spec, start.z);
    Complex ref = st.s(spec);       /* some sheet's value at the start */
    Real clear = path_clearance(spec);

    unsigned long steps = 0;
    const unsigned long max_steps = 4000000;
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
        Complex target = path[seg + 1];
        while (!( (target - st.z).is_zero() )) {
            Real d_min(-1);
            for (const auto& l : spec.lambdas) {
                Real d = abs(st.z - l);
                if (d_min < 0 || d < d_min) d_min = d;
            }
            if (d_min < clear) fail("PathTooClose", "path within clearance of a branch point");
            Complex dz = target - st.z;
            Real len = abs(dz);
            Real cap = d_min * Real(2) / Real(5);
            Complex step_to = target;
            if (len > cap) step_to = st.z + dz * Complex(cap / len);
            advance_logs(spec, st, step_to);
            if (++steps > max_steps)
                fail("PrecisionLoss", "continuation exceeded the step budget");
        }
    }

    /* argument uncertainty grows with the number of arg evaluations */
    Real uncertainty = Real(static_cast<unsigned long>(steps + 1)) *
                       Real(static_cast<int>(spec.lambdas.size())) * eps_work(4);
    if (uncertainty > pi_value() / spec.N)
        fail("PrecisionLoss", "accumulated argument uncertainty too large");

    Complex s_end = start.s * (st.s(spec) / ref);
    SheetPoint out;
    out.z = st.z;
    out.s = s_end;
    out.sheet = sheet_of(spec, out.z, out.s);
    return out;
}

} // namespace zn
