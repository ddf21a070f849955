#include "zn/numerics.hpp"

#include <map>
#include <sstream>
#include <utility>

namespace zn {

namespace {
unsigned g_bits = 128;

unsigned digits_for_bits(unsigned bits) {
    /* boost maps decimal digits d to floor(d*1000/301)+2 bits; invert so the
       result carries at least the requested number of bits. */
    unsigned d = ((bits > 2 ? bits - 2 : 1) * 301 + 999) / 1000;
    while (((d * 1000) / 301) + 2 < bits) ++d;
    return d;
}
} // namespace

void set_precision_bits(unsigned bits) {
    if (bits < 24 || bits > 1u << 20)
        throw std::runtime_error("set_precision_bits: unsupported precision");
    g_bits = bits;
    Real::default_precision(digits_for_bits(bits));
    Real probe(0);
    if (mpfr_get_prec(probe.backend().data()) < static_cast<long>(bits))
        throw std::runtime_error("set_precision_bits: backend precision too low");
}

unsigned precision_bits() { return g_bits; }

Real eps_work(unsigned margin) {
    Real e(1);
    long k = static_cast<long>(g_bits) - static_cast<long>(margin);
    if (k < 1) k = 1;
    mpfr_div_2si(e.backend().data(), e.backend().data(), k, MPFR_RNDN);
    return e;
}

Real pi_value() {
    Real p;
    mpfr_const_pi(p.backend().data(), MPFR_RNDN);
    return p;
}

Real rat_to_real(const Rat& q) {
    Real n(boost::multiprecision::numerator(q));
    Real d(boost::multiprecision::denominator(q));
    return n / d;
}

Complex& Complex::operator/=(const Complex& o) {
    Real d = o.re * o.re + o.im * o.im;
    if (d.is_zero()) throw std::runtime_error("complex division by zero");
    Real r = (re * o.re + im * o.im) / d;
    im = (im * o.re - re * o.im) / d;
    re = r;
    return *this;
}

Real abs(const Complex& z) {
    Real h;
    mpfr_hypot(h.backend().data(), z.re.backend().data(), z.im.backend().data(), MPFR_RNDN);
    return h;
}

Real arg(const Complex& z) {
    Real a;
    mpfr_atan2(a.backend().data(), z.im.backend().data(), z.re.backend().data(), MPFR_RNDN);
    return a;
}

Complex conj(const Complex& z) { return Complex(z.re, -z.im); }

Complex sqrt(const Complex& z) {
    if (z.im.is_zero() && z.re >= 0) return Complex(boost::multiprecision::sqrt(z.re), Real(0));
    Real r = abs(z);
    Real u = boost::multiprecision::sqrt((r + z.re) / 2);
    Real v = boost::multiprecision::sqrt((r - z.re) / 2);
    if (z.im < 0) v = -v;
    return Complex(u, v);
}

Complex exp(const Complex& z) {
    Real m = boost::multiprecision::exp(z.re);
    Real c, s;
    mpfr_sin_cos(s.backend().data(), c.backend().data(), z.im.backend().data(), MPFR_RNDN);
    return Complex(m * c, m * s);
}

Complex log(const Complex& z) {
    if (z.is_zero()) throw std::runtime_error("log of zero");
    return Complex(boost::multiprecision::log(abs(z)), arg(z));
}

Complex log_near(const Complex& z, const Real& ref_im) {
    Complex l = log(z);
    Real twopi = 2 * pi_value();
    Real k = (ref_im - l.im) / twopi;
    mpfr_round(k.backend().data(), k.backend().data());
    l.im += k * twopi;
    return l;
}

Complex pow(const Complex& z, const Complex& w) {
    if (z.is_zero()) {
        if (w.is_zero()) return Complex(1);
        return Complex(0);
    }
    return exp(w * log(z));
}

Complex pow_int(Complex z, long n) {
    if (n < 0) return Complex(1) / pow_int(z, -n);
    Complex r(1);
    while (n) {
        if (n & 1) r *= z;
        z *= z;
        n >>= 1;
    }
    return r;
}

Complex root_of_unity(long num, long den) {
    if (den == 0) throw std::runtime_error("root_of_unity: zero denominator");
    Real t = 2 * pi_value() * Real(num) / Real(den);
    return polar(Real(1), t);
}

Complex polar(const Real& r, const Real& theta) {
    Real c, s;
    mpfr_sin_cos(s.backend().data(), c.backend().data(), theta.backend().data(), MPFR_RNDN);
    return Complex(r * c, r * s);
}

std::string to_decimal_string(const Real& x) {
    std::ostringstream os;
    os.precision(static_cast<std::streamsize>(digits_for_bits(g_bits)) + 3);
    os << x;
    return os.str();
}

std::string to_decimal_string(const Complex& z) {
    return to_decimal_string(z.re) + " " + to_decimal_string(z.im);
}

Real real_from_decimal(const std::string& s) { return Real(s); }

namespace {
/* LU with partial pivoting in place; returns permutation sign, or 0 when a
   pivot vanishes to working zero. */
int lu_decompose(CMat& a, std::vector<std::size_t>& perm) {
    const std::size_t n = a.size();
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    int sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        Real best = abs(a[k][k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            Real m = abs(a[i][k]);
            if (m > best) { best = m; piv = i; }
        }
        if (best.is_zero()) return 0;
        if (piv != k) {
            std::swap(a[piv], a[k]);
            std::swap(perm[piv], perm[k]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            Complex f = a[i][k] / a[k][k];
            a[i][k] = f;
            for (std::size_t j = k + 1; j < n; ++j) a[i][j] -= f * a[k][j];
        }
    }
    return sign;
}
} // namespace

Complex det(CMat a) {
    const std::size_t n = a.size();
    if (n == 0) return Complex(1);
    std::vector<std::size_t> perm;
    int sign = lu_decompose(a, perm);
    if (sign == 0) return Complex(0);
    Complex d(sign);
    for (std::size_t k = 0; k < n; ++k) d *= a[k][k];
    return d;
}

CVec solve(CMat a, CVec b) {
    const std::size_t n = a.size();
    if (b.size() != n) throw std::runtime_error("solve: shape mismatch");
    std::vector<std::size_t> perm;
    if (lu_decompose(a, perm) == 0) throw SingularMatrix("solve: singular matrix");
    CVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= a[i][j] * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= a[i][j] * x[j];
        x[i] /= a[i][i];
    }
    return x;
}

CMat inverse(const CMat& a) {
    const std::size_t n = a.size();
    CMat lu = a;
    std::vector<std::size_t> perm;
    if (lu_decompose(lu, perm) == 0) throw SingularMatrix("inverse: singular matrix");
    CMat inv(n, CVec(n));
    for (std::size_t col = 0; col < n; ++col) {
        CVec x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = (perm[i] == col) ? Complex(1) : Complex(0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu[i][j] * x[j];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu[i][j] * x[j];
            x[i] /= lu[i][i];
        }
        for (std::size_t i = 0; i < n; ++i) inv[i][col] = x[i];
    }
    return inv;
}

Real max_abs(const CMat& a) {
    Real m(0);
    for (const auto& row : a)
        for (const auto& z : row) {
            Real v = abs(z);
            if (v > m) m = v;
        }
    return m;
}

std::vector<Real> symmetric_eigenvalues(std::vector<std::vector<Real>> a) {
    const std::size_t n = a.size();
    if (n == 0) return {};
    Real tol = eps_work(8);
    for (int sweep = 0; sweep < 200; ++sweep) {
        Real off(0);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += a[p][q] * a[p][q];
        Real scale(0);
        for (std::size_t p = 0; p < n; ++p)
            scale += boost::multiprecision::abs(a[p][p]);
        if (off <= tol * tol * (1 + scale * scale)) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q].is_zero()) continue;
                Real theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                Real t = 1 / (boost::multiprecision::abs(theta) +
                              boost::multiprecision::sqrt(theta * theta + 1));
                if (theta < 0) t = -t;
                Real c = 1 / boost::multiprecision::sqrt(t * t + 1);
                Real s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    Real akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    Real apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<Real> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

const GLRule& gauss_legendre(unsigned order) {
    static std::map<std::pair<unsigned, unsigned>, GLRule> cache;
    auto key = std::make_pair(order, g_bits);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    GLRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    Real pi = pi_value();
    Real tol = eps_work(4);
    for (unsigned i = 0; i < order; ++i) {
        /* Newton on P_n from the Chebyshev-like initial guess. */
        Real x = boost::multiprecision::cos(pi * (Real(i) + Real(3) / 4) / (Real(order) + Real(1) / 2));
        Real dp(0);
        for (int iter = 0; iter < 200; ++iter) {
            Real p0(1), p1(x);
            for (unsigned k = 2; k <= order; ++k) {
                Real p2 = ((2 * Real(k) - 1) * x * p1 - (Real(k) - 1) * p0) / Real(k);
                p0 = p1;
                p1 = p2;
            }
            dp = Real(order) * (x * p1 - p0) / (x * x - 1);
            Real dx = p1 / dp;
            x -= dx;
            if (boost::multiprecision::abs(dx) < tol) {
                p0 = 1; p1 = x;
                for (unsigned k = 2; k <= order; ++k) {
                    Real p2 = ((2 * Real(k) - 1) * x * p1 - (Real(k) - 1) * p0) / Real(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = Real(order) * (x * p1 - p0) / (x * x - 1);
                break;
            }
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2 / ((1 - x * x) * dp * dp);
    }
    return cache.emplace(key, std::move(rule)).first->second;
}

} // namespace zn
