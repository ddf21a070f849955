#pragma once

#include <boost/multiprecision/mpfr.hpp>
#include <boost/multiprecision/gmp.hpp>
#include <mpfr.h>
#include <stdexcept>
#include <string>
#include <vector>

namespace zn {

using Real = boost::multiprecision::mpfr_float;
using Rat  = boost::multiprecision::mpq_rational;
using Int  = boost::multiprecision::mpz_int;

/* Exact quotient evaluated at the current working precision. */
Real rat_to_real(const Rat& q);

/* Working precision is a process-global setting (single-threaded engine).
   Numbers created after set_precision_bits carry at least that many
   mantissa bits. */
void set_precision_bits(unsigned bits);
unsigned precision_bits();

/* 2^-(precision_bits - margin), the unit used by tolerance contracts. */
Real eps_work(unsigned margin = 0);

Real pi_value();

struct Complex {
    Real re, im;
    Complex() : re(0), im(0) {}
    Complex(const Real& r) : re(r), im(0) {}
    Complex(const Real& r, const Real& i) : re(r), im(i) {}
    Complex(int r) : re(r), im(0) {}
    Complex(double r) : re(r), im(0) {}

    Complex operator-() const { return Complex(-re, -im); }
    Complex& operator+=(const Complex& o) { re += o.re; im += o.im; return *this; }
    Complex& operator-=(const Complex& o) { re -= o.re; im -= o.im; return *this; }
    Complex& operator*=(const Complex& o) {
        Real r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = r;
        return *this;
    }
    Complex& operator/=(const Complex& o);
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
};

inline Complex operator+(Complex a, const Complex& b) { a += b; return a; }
inline Complex operator-(Complex a, const Complex& b) { a -= b; return a; }
inline Complex operator*(Complex a, const Complex& b) { a *= b; return a; }
inline Complex operator/(Complex a, const Complex& b) { a /= b; return a; }
inline Complex operator+(const Real& a, const Complex& b) { return Complex(a) + b; }
inline Complex operator-(const Real& a, const Complex& b) { return Complex(a) - b; }
inline Complex operator*(const Real& a, const Complex& b) { return Complex(a) * b; }
inline Complex operator/(const Real& a, const Complex& b) { return Complex(a) / b; }

Real abs(const Complex& z);
Real arg(const Complex& z);            /* atan2(im, re), in (-pi, pi] */
Complex conj(const Complex& z);
Complex sqrt(const Complex& z);        /* principal branch */
Complex exp(const Complex& z);
Complex log(const Complex& z);         /* principal branch */
/* Branch of log continuous near a reference: principal log shifted by
   2*pi*i*k so the imaginary part lies within pi of ref_im. */
Complex log_near(const Complex& z, const Real& ref_im);
Complex pow(const Complex& z, const Complex& w);   /* exp(w log z), principal */
Complex pow_int(Complex z, long n);
Complex root_of_unity(long num, long den);          /* exp(2 pi i num/den) */
Complex polar(const Real& r, const Real& theta);

std::string to_decimal_string(const Real& x);       /* round-trip at working precision */
std::string to_decimal_string(const Complex& z);    /* "re+imj" style pair via caller */
Real real_from_decimal(const std::string& s);

/* Dense complex linear algebra at working precision, for the small
   matrices this engine needs (g <= 8 or so). Matrices are row-major
   vectors of rows. */
using CMat = std::vector<std::vector<Complex>>;
using CVec = std::vector<Complex>;

Complex det(CMat a);                     /* by value: LU with partial pivoting */
CMat inverse(const CMat& a);             /* throws SingularMatrix */
CVec solve(CMat a, CVec b);
Real max_abs(const CMat& a);

struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/* Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations. */
std::vector<Real> symmetric_eigenvalues(std::vector<std::vector<Real>> a);

/* Gauss-Legendre nodes and weights on [-1,1], computed at the current
   precision and cached per (order, precision). */
struct GLRule {
    std::vector<Real> nodes;
    std::vector<Real> weights;
};
const GLRule& gauss_legendre(unsigned order);

} // namespace zn
