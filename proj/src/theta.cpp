#include "zn/theta.hpp"
#include "zn/error.hpp"

#include <algorithm>

namespace zn {

namespace {

Rat rat_mod1(const Rat& q) {
    Int n = boost::multiprecision::numerator(q);
    Int d = boost::multiprecision::denominator(q);
    Int fl = n / d;
    if (n < 0 && fl * d != n) fl -= 1;
    return q - Rat(fl);
}

Int factorial(int n) {
    Int f(1);
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

} // namespace

std::string Characteristics::to_string() const {
    auto one = [](const Rat& q) {
        std::string s = boost::multiprecision::numerator(q).str();
        if (boost::multiprecision::denominator(q) != 1)
            s += "/" + boost::multiprecision::denominator(q).str();
        return s;
    };
    std::string out = "[";
    for (size_t i = 0; i < delta.size(); ++i) out += (i ? "," : "") + one(delta[i]);
    out += ";";
    for (size_t i = 0; i < epsilon.size(); ++i) out += (i ? "," : "") + one(epsilon[i]);
    return out + "]";
}

CVec characteristic_point(const Characteristics& ch, const CMat& tau) {
    size_t g = tau.size();
    if (ch.delta.size() != g || ch.epsilon.size() != g)
        fail("BadCount", "characteristic length does not match the matrix size");
    Real twopi = 2 * pi_value();
    CVec out(g);
    for (size_t j = 0; j < g; ++j) {
        Real ei = twopi * rat_to_real(ch.epsilon[j]);
        Complex acc(Real(0), ei);
        for (size_t i = 0; i < g; ++i) {
            Real di = rat_to_real(ch.delta[i]);
            acc += di * tau[i][j];
        }
        out[j] = acc;
    }
    return out;
}

void real_characteristics(const CVec& e, const CMat& tau, std::vector<Real>& delta,
                          std::vector<Real>& epsilon) {
    size_t g = tau.size();
    if (e.size() != g) fail("BadCount", "point length does not match the matrix size");
    CMat re_tau(g, CVec(g));
    for (size_t i = 0; i < g; ++i)
        for (size_t j = 0; j < g; ++j) re_tau[i][j] = Complex(tau[i][j].re, Real(0));
    CMat inv = inverse(re_tau);
    delta.assign(g, Real(0));
    epsilon.assign(g, Real(0));
    for (size_t j = 0; j < g; ++j)
        for (size_t i = 0; i < g; ++i) delta[j] += e[i].re * inv[i][j].re;
    Real twopi = 2 * pi_value();
    for (size_t j = 0; j < g; ++j) {
        Real acc = e[j].im;
        for (size_t i = 0; i < g; ++i) acc -= delta[i] * tau[i][j].im;
        epsilon[j] = acc / twopi;
    }
}

ThetaEval riemann_theta(const CVec& z, const CMat& tau, const Characteristics& ch, int order) {
    size_t g = tau.size();
    if (g == 0) fail("BadCount", "empty matrix");
    if (z.size() != g || ch.delta.size() != g || ch.epsilon.size() != g)
        fail("BadCount", "argument lengths do not match the matrix size");

    std::vector<std::vector<Real>> negre;
    negre.assign(g, std::vector<Real>(g));
    for (size_t i = 0; i < g; ++i)
        for (size_t j = 0; j < g; ++j) {
            Real sym = -(tau[i][j].re + tau[j][i].re) / 2;
            negre[i][j] = sym;
        }
    auto ev = symmetric_eigenvalues(negre);
    if (ev.front() <= 0) fail("NotNegativeDefinite", "lattice sum would diverge");

    std::vector<Real> dl(g), ep(g);
    for (size_t i = 0; i < g; ++i) {
        dl[i] = rat_to_real(ch.delta[i]);
        ep[i] = rat_to_real(ch.epsilon[i]);
    }
    Real twopi = 2 * pi_value();
    CVec zeff(g);
    for (size_t i = 0; i < g; ++i) {
        Real sh = twopi * ep[i];
        zeff[i] = z[i] + Complex(Real(0), sh);
    }

    ThetaEval out;
    out.grad.assign(g, Complex(0));
    out.hess.assign(g, CVec(g, Complex(0)));
    Real mass_total(0), prev_mass(-1);
    Real tail_eps = eps_work(8);
    Real floor_eps = eps_work(precision_bits() / 2);
    int settled = 0;

    std::vector<long> mvec(g);
    std::vector<Real> w(g);
    for (long r = 0;; ++r) {
        Real shell_mass(0);
        /* odometer over [-r, r]^g keeping max-norm exactly r */
        std::fill(mvec.begin(), mvec.end(), -r);
        while (true) {
            long mx = 0;
            for (size_t i = 0; i < g; ++i) mx = std::max(mx, std::labs(mvec[i]));
            if (mx == r) {
                for (size_t i = 0; i < g; ++i) w[i] = Real(mvec[i]) + dl[i];
                Complex quad(0);
                for (size_t i = 0; i < g; ++i)
                    for (size_t j = 0; j < g; ++j) {
                        Real ww = w[i] * w[j];
                        quad += tau[i][j] * Complex(ww);
                    }
                Complex expo = quad / Real(2);
                for (size_t i = 0; i < g; ++i) expo += zeff[i] * Complex(w[i]);
                Complex t = exp(expo);
                out.value += t;
                shell_mass += abs(t);
                if (order >= 1)
                    for (size_t i = 0; i < g; ++i) out.grad[i] += Complex(w[i]) * t;
                if (order >= 2)
                    for (size_t i = 0; i < g; ++i)
                        for (size_t j = 0; j < g; ++j) {
                            Real ww = w[i] * w[j];
                            out.hess[i][j] += Complex(ww) * t;
                        }
            }
            size_t k = 0;
            while (k < g && mvec[k] == r) mvec[k++] = -r;
            if (k == g) break;
            ++mvec[k];
        }
        mass_total += shell_mass;
        if (r >= 1) {
            Real scale = abs(out.value) + mass_total * floor_eps;
            bool small = shell_mass <= tail_eps * scale;
            bool decaying = prev_mass >= 0 && shell_mass * 2 <= prev_mass;
            settled = (small && decaying) ? settled + 1 : 0;
            if (settled >= 2) {
                out.radius = r;
                out.tail = shell_mass * 2;
                break;
            }
        }
        prev_mass = shell_mass;
        if (r > 20000) fail("NonConvergent", "lattice shells refuse to settle");
    }

    if (order >= 1) {
        Real fl = mass_total * floor_eps;
        if (abs(out.value) <= fl)
            fail("Underflow", "theta vanishes at the requested point");
        out.dlog.assign(g, Complex(0));
        out.ddlog.assign(g, CVec(g, Complex(0)));
        for (size_t i = 0; i < g; ++i) out.dlog[i] = out.grad[i] / out.value;
        if (order >= 2)
            for (size_t i = 0; i < g; ++i)
                for (size_t j = 0; j < g; ++j)
                    out.ddlog[i][j] = out.hess[i][j] / out.value - out.dlog[i] * out.dlog[j];
    }
    return out;
}

std::vector<CVec> abel_branch_table(const PeriodData& pd) {
    const CurveSpec& spec = pd.spec;
    size_t g = pd.holos.size();
    std::vector<CVec> out(size_t(spec.nm()) + 1, CVec(g, Complex(0)));
    for (int p = 1; p <= spec.nm(); ++p) {
        MultiQuad q = integrate_forms_to_branch(spec, pd.holos, p);
        for (size_t j = 0; j < g; ++j) {
            Complex acc(0);
            for (size_t c = 0; c < g; ++c) acc += pd.sigma[j][c] * q.values[c];
            out[size_t(p)][j] = acc;
        }
    }
    return out;
}

CVec abel_map(const PeriodData& pd, int p) {
    const CurveSpec& spec = pd.spec;
    if (p < 1 || p > spec.nm()) fail("InvalidIndex", "branch index out of range");
    MultiQuad q = integrate_forms_to_branch(spec, pd.holos, p);
    size_t g = pd.holos.size();
    CVec out(g);
    for (size_t j = 0; j < g; ++j) {
        Complex acc(0);
        for (size_t c = 0; c < g; ++c) acc += pd.sigma[j][c] * q.values[c];
        out[j] = acc;
    }
    return out;
}

CVec abel_map(const PeriodData& pd, const SheetPoint& x) {
    const CurveSpec& spec = pd.spec;
    std::vector<Complex> path{spec.z0, x.z};
    MultiQuad q = integrate_forms_polyline(spec, pd.holos, path, 0);
    size_t g = pd.holos.size();
    CVec out(g);
    for (size_t j = 0; j < g; ++j) {
        Complex acc(0);
        for (size_t c = 0; c < g; ++c) acc += pd.sigma[j][c] * q.values[c];
        out[j] = acc;
    }
    return out;
}

CharacteristicResolver::CharacteristicResolver(const PeriodData& pd) : pd_(&pd) {
    if (pd.homo.genus < 1) fail("GenusZero", "no characteristics on a rational curve");
    ubr_ = abel_branch_table(pd);
}

CMat CharacteristicResolver::mu_loop_matrix(const OrderedPartition& part) {
    const CurveSpec& spec = pd_->spec;
    int g = pd_->homo.genus;
    std::vector<DifferentialRef> forms;
    forms.reserve(size_t(spec.nm()));
    for (int p = 1; p <= spec.nm(); ++p) forms.push_back(DifferentialRef::mu(part, p));
    pd_->fill_cache(forms);
    CMat lhs(size_t(spec.nm()), CVec(size_t(g)));
    for (int p = 1; p <= spec.nm(); ++p)
        for (int i = 1; i <= g; ++i) lhs[size_t(p - 1)][size_t(i - 1)] = pd_->a_period(forms[size_t(p - 1)], i);
    return lhs;
}

Real CharacteristicResolver::defect_against(const CMat& lhs, const ThetaEval& th) {
    const CurveSpec& spec = pd_->spec;
    int g = pd_->homo.genus;
    int L = spec.L;
    CMat W(size_t(L), CVec(size_t(g), Complex(0)));
    for (int b = 1; b <= L; ++b) {
        CVec dc = pd_->d_coeff(b);
        for (int i = 0; i < g; ++i) {
            Complex acc(0);
            for (int j = 0; j < g; ++j) acc += dc[size_t(j)] * th.ddlog[size_t(j)][size_t(i)];
            W[size_t(b - 1)][size_t(i)] = acc;
        }
    }
    /* the loop normalization int_{A_j} v_k = 2 pi i delta_jk puts a factor
       2 pi i N^2 in front of the log-derivative sum */
    Real twopi = 2 * pi_value();
    Complex front = Complex(Real(0), twopi) * Real(spec.N * spec.N);
    Real num(0), den(0);
    for (int p = 1; p <= spec.nm(); ++p) {
        Complex lp = spec.lambda(p);
        Complex lpw(1);
        CVec rhs(size_t(g), Complex(0));
        for (int b = 1; b <= L; ++b) {
            for (int i = 0; i < g; ++i) rhs[size_t(i)] += lpw * W[size_t(b - 1)][size_t(i)];
            lpw *= lp;
        }
        for (int i = 0; i < g; ++i) {
            Complex want = front * rhs[size_t(i)];
            Real d = abs(lhs[size_t(p - 1)][size_t(i)] - want);
            Real s = abs(lhs[size_t(p - 1)][size_t(i)]);
            if (d > num) num = d;
            if (s > den) den = s;
        }
    }
    return den > 0 ? Real(num / den) : num;
}

CVec CharacteristicResolver::uhat_of(const OrderedPartition& part) const {
    size_t g = size_t(pd_->homo.genus);
    CVec uhat(g, Complex(0));
    for (int r = 1; r < part.N(); ++r)
        for (int p : part.block(r))
            for (size_t j = 0; j < g; ++j) uhat[j] += Real(r) * ubr_[size_t(p)][j];
    return uhat;
}

bool CharacteristicResolver::grid_round(const CVec& e, Characteristics& ch) const {
    size_t g = size_t(pd_->homo.genus);
    int twoN = 2 * pd_->spec.N;
    std::vector<Real> dl, ep;
    real_characteristics(e, pd_->tau, dl, ep);
    Real grid_gate = Real(twoN) * eps_work(precision_bits() / 2);
    ch.delta.assign(g, Rat(0));
    ch.epsilon.assign(g, Rat(0));
    for (size_t i = 0; i < g; ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            Real scaled = (pass == 0 ? dl[i] : ep[i]) * twoN;
            Real k = round(scaled);
            if (abs(scaled - k) > grid_gate) return false;
            long kl = static_cast<long>(k);
            kl = ((kl % twoN) + twoN) % twoN;
            (pass == 0 ? ch.delta[i] : ch.epsilon[i]) = Rat(kl, twoN);
        }
    }
    return true;
}

/* Even-order log derivatives at 0 cannot tell e from -e.  A second
   partition can: its point inherits the anchor's shift, and only the true
   shift keeps the loop identity alive there. */
size_t CharacteristicResolver::disambiguate(const OrderedPartition& anchor,
                                            const CVec& uhat_anchor,
                                            const std::vector<Characteristics>& winners) {
    const CurveSpec& spec = pd_->spec;
    size_t g = size_t(pd_->homo.genus);
    Real gate = eps_work(precision_bits() / 2);
    CVec zeros(g, Complex(0));
    int probes = 0;
    for (const auto& probe : enumerate_partitions(spec.N, spec.m)) {
        if (probe == anchor) continue;
        if (++probes > 8) break;
        CMat lhs = mu_loop_matrix(probe);
        CVec uh = uhat_of(probe);
        std::vector<bool> pass(winners.size(), false);
        for (size_t w = 0; w < winners.size(); ++w) {
            CVec pt = characteristic_point(winners[w], pd_->tau);
            CVec e(g);
            for (size_t j = 0; j < g; ++j) e[j] = uh[j] + (pt[j] - uhat_anchor[j]);
            Characteristics ch;
            if (!grid_round(e, ch)) continue;
            ThetaEval th;
            try {
                th = riemann_theta(zeros, pd_->tau, ch, 2);
            } catch (const Error& err) {
                if (err.code != "Underflow") throw;
                continue;
            }
            pass[w] = defect_against(lhs, th) < gate;
        }
        if (pass[0] != pass[1]) return pass[0] ? 0 : 1;
        if (!pass[0] && !pass[1])
            fail("NoCandidate", "no shift candidate survives a second partition");
    }
    fail("Ambiguous", "mirror characteristics cannot be separated");
}

const Characteristics& CharacteristicResolver::find(const OrderedPartition& part) {
    auto it = cache_.find(part.to_string());
    if (it != cache_.end()) return it->second;

    const CurveSpec& spec = pd_->spec;
    size_t g = size_t(pd_->homo.genus);
    int twoN = 2 * spec.N;
    CVec uhat = uhat_of(part);

    if (!anchored_) {
        CMat lhs = mu_loop_matrix(part);
        Real gate = eps_work(precision_bits() / 2);
        CVec zeros(g, Complex(0));
        std::vector<Characteristics> winners;
        std::vector<long> digits(2 * g, 0);
        while (true) {
            Characteristics cand;
            cand.delta.resize(g);
            cand.epsilon.resize(g);
            for (size_t i = 0; i < g; ++i) {
                cand.delta[i] = Rat(digits[i], twoN);
                cand.epsilon[i] = Rat(digits[g + i], twoN);
            }
            bool usable = true;
            ThetaEval th;
            try {
                th = riemann_theta(zeros, pd_->tau, cand, 2);
            } catch (const Error& e) {
                if (e.code != "Underflow") throw;
                usable = false;
            }
            if (usable && defect_against(lhs, th) < gate) winners.push_back(cand);
            size_t k = 0;
            while (k < digits.size() && digits[k] == twoN - 1) digits[k++] = 0;
            if (k == digits.size()) break;
            ++digits[k];
        }
        if (winners.empty())
            fail("NoCandidate", "no characteristic satisfies the loop-integral identity");
        if (winners.size() > 2)
            fail("Ambiguous", "several unrelated characteristics satisfy the loop-integral identity");
        size_t pick = 0;
        if (winners.size() == 2) {
            bool mirror = true;
            for (size_t i = 0; i < g; ++i) {
                if (winners[1].delta[i] != rat_mod1(-winners[0].delta[i])) mirror = false;
                if (winners[1].epsilon[i] != rat_mod1(-winners[0].epsilon[i])) mirror = false;
            }
            if (!mirror)
                fail("Ambiguous", "several unrelated characteristics satisfy the loop-integral identity");
            pick = disambiguate(part, uhat, winners);
        }
        CVec pt = characteristic_point(winners[pick], pd_->tau);
        shift_.assign(g, Complex(0));
        for (size_t j = 0; j < g; ++j) shift_[j] = pt[j] - uhat[j];
        anchored_ = true;
        auto ins = cache_.emplace(part.to_string(), winners[pick]);
        return ins.first->second;
    }

    CVec e(g);
    for (size_t j = 0; j < g; ++j) e[j] = uhat[j] + shift_[j];
    Characteristics ch;
    if (!grid_round(e, ch))
        fail("NoCandidate", "propagated characteristic misses the admissible grid");
    auto ins = cache_.emplace(part.to_string(), ch);
    return ins.first->second;
}

Real CharacteristicResolver::loop_identity_defect(const OrderedPartition& part) {
    const Characteristics& ch = find(part);
    size_t g = size_t(pd_->homo.genus);
    CVec zeros(g, Complex(0));
    ThetaEval th = riemann_theta(zeros, pd_->tau, ch, 2);
    CMat lhs = mu_loop_matrix(part);
    return defect_against(lhs, th);
}

Complex lambda_vandermonde(const CurveSpec& spec) {
    Complex out(1);
    for (int i = 1; i <= spec.nm(); ++i)
        for (int j = i + 1; j <= spec.nm(); ++j) out *= spec.lambda(i) - spec.lambda(j);
    return out;
}

Complex block_pair_product(const CurveSpec& spec, const OrderedPartition& part, int i, int j) {
    const auto& bi = part.block(i);
    const auto& bj = part.block(j);
    Complex out(1);
    if (i == j) {
        for (size_t a = 0; a < bi.size(); ++a)
            for (size_t b = a + 1; b < bi.size(); ++b)
                out *= spec.lambda(bi[a]) - spec.lambda(bi[b]);
        return out;
    }
    for (int r : bi)
        for (int s : bj) out *= spec.lambda(r) - spec.lambda(s);
    return out;
}

Complex block_pair_product_all(const CurveSpec& spec, const OrderedPartition& part) {
    Complex out(1);
    for (int i = 1; i <= part.N(); ++i)
        for (int j = i + 1; j <= part.N(); ++j) out *= block_pair_product(spec, part, i, j);
    return out;
}

Complex theta_solution(CharacteristicResolver& res, const OrderedPartition& part,
                       std::vector<int> index_set) {
    const PeriodData& pd = res.periods();
    const CurveSpec& spec = pd.spec;
    int L = spec.L;
    int g = pd.homo.genus;
    if (index_set.empty())
        for (int j = 1; j <= L; ++j) index_set.push_back(j);
    if (int(index_set.size()) != L) fail("BadCount", "index set must pick L loop rows");
    for (size_t a = 0; a < index_set.size(); ++a) {
        if (index_set[a] < 1 || index_set[a] > g) fail("InvalidIndex", "loop row out of range");
        for (size_t b = a + 1; b < index_set.size(); ++b)
            if (index_set[a] == index_set[b]) fail("InvalidIndex", "repeated loop row");
    }

    const Characteristics& ch = res.find(part);
    CVec zeros(size_t(g), Complex(0));
    ThetaEval th;
    try {
        th = riemann_theta(zeros, pd.tau, ch, 2);
    } catch (const Error& e) {
        if (e.code == "Underflow") fail("SingularCharacteristic", "theta constant vanishes");
        throw;
    }

    CMat M(size_t(L), CVec(size_t(L), Complex(0)));
    for (int j = 1; j <= L; ++j) {
        int ij = index_set[size_t(j - 1)];
        for (int k = 1; k <= L; ++k) {
            CVec dc = pd.d_coeff(k);
            Complex acc(0);
            for (int t = 0; t < g; ++t) acc += dc[size_t(t)] * th.ddlog[size_t(ij - 1)][size_t(t)];
            M[size_t(j - 1)][size_t(k - 1)] = acc;
        }
    }
    Complex dt = det(M);
    Real expo = Real(spec.N - 1) / (Real(spec.N) * Real(spec.N));
    Complex pref = pow(lambda_vandermonde(spec), Complex(expo));
    return pref / block_pair_product_all(spec, part) * dt;
}

Real thomae_quotient(CharacteristicResolver& res, const OrderedPartition& part) {
    const PeriodData& pd = res.periods();
    const CurveSpec& spec = pd.spec;
    int N = spec.N;
    const Characteristics& ch = res.find(part);
    CVec zeros(size_t(pd.homo.genus), Complex(0));
    ThetaEval th = riemann_theta(zeros, pd.tau, ch, 0);

    Real thpow = pow(abs(th.value), Real(2 * N));
    Real da = pow(abs(det(pd.A)), Real(N));
    Rat mu = Rat(Int((N - 1) * (2 * N - 1)), Int(6 * N));
    Real prod(1);
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j) {
            Rat ex = Rat(2 * N) * spin_q_pair(N, i, j) + Rat(N) * mu;
            Real base = abs(block_pair_product(spec, part, i, j));
            Real expo = rat_to_real(ex);
            prod *= pow(base, expo);
        }
    return thpow / (da * prod);
}

Real thomae_check(int N, int m, const std::vector<CVec>& lambda_samples,
                  const OrderedPartition& part) {
    if (lambda_samples.size() < 2) fail("BadCount", "need at least two samples to compare");
    Real lo(0), hi(0);
    bool first = true;
    for (const auto& lam : lambda_samples) {
        CurveSpec spec = validate_curve(N, m, lam);
        PeriodData pd = build_period_data(spec);
        CharacteristicResolver res(pd);
        Real q = thomae_quotient(res, part);
        if (first) {
            lo = hi = q;
            first = false;
        } else {
            if (q < lo) lo = q;
            if (q > hi) hi = q;
        }
    }
    if (hi <= 0) fail("NonConvergent", "degenerate quotient");
    return (hi - lo) / hi;
}

Real block_product_quotient(CharacteristicResolver& res, const OrderedPartition& part) {
    const PeriodData& pd = res.periods();
    const CurveSpec& spec = pd.spec;
    int N = spec.N;
    Real num = abs(block_pair_product_all(spec, part));
    Rat ex = Rat(Int(12 * N), factorial(N + 1));
    Real expo = rat_to_real(ex);
    CVec zeros(size_t(pd.homo.genus), Complex(0));
    Real thprod(1);
    for (const auto& sigma : all_permutations(N - 1)) {
        const Characteristics& ch = res.find(part.permuted(sigma));
        ThetaEval th = riemann_theta(zeros, pd.tau, ch, 0);
        thprod *= pow(abs(th.value), expo);
    }
    Real e1 = Real(6) / Real(N + 1);
    Real e2 = Real(3 * (N - 1)) / Real(N + 1);
    Real da = pow(abs(det(pd.A)), e1);
    Real dv = pow(abs(lambda_vandermonde(spec)), e2);
    return num * thprod / (da * dv);
}

std::map<std::string, Complex> smirnov_sl2(CharacteristicResolver& res) {
    const PeriodData& pd = res.periods();
    const CurveSpec& spec = pd.spec;
    if (spec.N != 2) fail("WrongN", "the compact determinant form needs N = 2");
    int g = pd.homo.genus;
    CVec zeros(size_t(g), Complex(0));
    Complex da3 = pow_int(det(pd.A), 3);
    Real expo = Real(-3) / Real(4);
    Complex dpow = pow(lambda_vandermonde(spec), Complex(expo));
    std::map<std::string, Complex> out;
    for (const auto& part : enumerate_partitions(2, spec.m)) {
        const Characteristics& ch = res.find(part);
        ThetaEval th;
        try {
            th = riemann_theta(zeros, pd.tau, ch, 2);
        } catch (const Error& e) {
            if (e.code == "Underflow") fail("SingularCharacteristic", "theta constant vanishes");
            throw;
        }
        Complex val = dpow / da3 * pow_int(th.value, 4) * det(th.ddlog);
        out[part.to_string()] = val;
    }
    return out;
}

} // namespace zn
