#pragma once

#include "zn/error.hpp"
#include "zn/numerics.hpp"

namespace zn {

/* The curve s^N = f(z) = prod_{j=1}^{Nm} (z - lambda_j), all lambda_j
   distinct. Indices p, j for branch points are 1-based throughout, matching
   the block notation of the solution vectors. */
struct CurveSpec {
    int N = 0;
    int m = 0;
    CVec lambdas;            /* user order; lambda_j = lambdas[j-1] */
    int genus = 0;
    int L = 0;
    unsigned precision_bits = 128;

    Complex z0;              /* base point, Im z0 above every branch point */
    Real min_spacing;        /* minimum pairwise |lambda_i - lambda_j| */
    Real diameter;           /* maximum pairwise distance */

    int nm() const { return N * m; }
    const Complex& lambda(int j) const { return lambdas[static_cast<std::size_t>(j - 1)]; }

    Complex f(const Complex& z) const;
    Complex fprime(const Complex& z) const;
    Complex fprime_at_branch(int p) const;        /* prod_{j != p} (lambda_p - lambda_j) */

    /* Principal-continuation reference value of s on sheet 0. Branch cuts
       run vertically downward from each branch point; normalized so
       s0(z0) is the principal N-th root of f(z0). */
    Complex s0(const Complex& z) const;
    Complex omega_pow(long k) const;              /* exp(2 pi i k / N) */

    /* Fixed N-th root of unity omega^{k0} aligning the cut-ray product with
       the principal root at the base point; k0 is its exponent. */
    Complex base_phase;
    long base_phase_exp = 0;
    Complex s0_raw(const Complex& z) const;
};

struct SheetPoint {
    Complex z;
    int sheet = 0;
    Complex s;
};

CurveSpec validate_curve(int N, int m, const CVec& lambdas,
                         unsigned precision_bits = 0 /* 0: current global */);

/* Nearest sheet label k with s ~ omega^k * s0(z); throws PrecisionLoss when
   the match is poor. */
int sheet_of(const CurveSpec& spec, const Complex& z, const Complex& s);

SheetPoint make_point(const CurveSpec& spec, const Complex& z, int sheet);

/* Analytic continuation of s along a polyline starting at start.z. Tracks
   the argument of every factor (z - lambda_j) continuously; never
   re-evaluates roots. */
SheetPoint continue_s(const CurveSpec& spec, const std::vector<Complex>& path,
                      const SheetPoint& start);

/* Continuation bookkeeping for integrands: per-factor accumulated logs,
   advanced point by point. */
struct FactorLogs {
    Complex z;
    std::vector<Complex> logs;   /* log(z - lambda_j), continued */

    Complex s(const CurveSpec& spec) const;       /* exp((1/N) sum logs) */
};

FactorLogs factor_logs_at(const CurveSpec& spec, const Complex& z);   /* cut-ray branch */
/* Advance to z_next; the step must keep every factor rotation below pi/2,
   callers subdivide. Throws PathTooClose when z_next is within clearance of
   a branch point. */
void advance_logs(const CurveSpec& spec, FactorLogs& st, const Complex& z_next);

Real path_clearance(const CurveSpec& spec);

} // namespace zn
