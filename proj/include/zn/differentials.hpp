#pragma once

#include "zn/curve.hpp"
#include "zn/partition.hpp"

#include <optional>
#include <utility>

namespace zn {

/* References to the differential forms of the engine:
     Holo(a, b)        w^(a)_b         = z^{b-1} dz / s^a
     Mu(L, p)          mu_p^L
     Zeta(L, j)        zeta_j^L
     ExactPart(p)      N d(s^{N-1}/(z - lambda_p))
     SpinF(l, L, +1)   f_l(x, L)       half-form, sqrt(dz) normalization
     SpinF(l, L, -1)   f_{-l}(x, L^-)
     PolyS(c, tag)     c(z) dz / s     explicit coefficients, batched periods
   Evaluation returns coefficients relative to dz (or sqrt(dz)). */
struct DifferentialRef {
    enum Kind { Holo, Mu, Zeta, ExactPart, SpinF, PolyS } kind;
    int a = 0, b = 0;                       /* Holo */
    std::optional<OrderedPartition> part;   /* Mu, Zeta, SpinF */
    int p = 0;                              /* Mu, ExactPart */
    int j = 0;                              /* Zeta */
    int twice_l = 0;                        /* SpinF: l = twice_l / 2 */
    int sign = +1;                          /* SpinF */
    CVec coeffs;                            /* PolyS, ascending powers */
    std::string tag;                        /* PolyS cache identity */

    static DifferentialRef holo(int a, int b);
    static DifferentialRef mu(OrderedPartition part, int p);
    static DifferentialRef zeta(OrderedPartition part, int j);
    static DifferentialRef exact_part(int p);
    static DifferentialRef spin(int twice_l, OrderedPartition part, int sign);
    /* tag must name the coefficient list uniquely within one tower's life */
    static DifferentialRef poly_over_s(CVec coeffs, std::string tag);

    std::string key() const;                /* stable cache key */
};

/* Spin exponent q_l(i): exact rational, periodic in both l and i.
   twice_l must have the parity of N-1. */
Rat spin_q(int N, int twice_l, int i);
/* Sum over l in the half-integer window of size N of q_l(i) q_l(j). */
Rat spin_q_pair(int N, int i, int j);

/* Block polynomials evaluated at a point:
   g_in    = prod over j in block r of (z - lambda_j)
   g_out   = prod over j not in block r
   g_in_excl = g_in without the factor j = p. */
Complex block_poly_in(const CurveSpec& spec, const OrderedPartition& part, int r, const Complex& z);
Complex block_poly_out(const CurveSpec& spec, const OrderedPartition& part, int r, const Complex& z);
Complex block_poly_in_excl(const CurveSpec& spec, const OrderedPartition& part, int r, int p,
                           const Complex& z);

/* Coefficient list (ascending powers) of the zeta_j polynomial multiplying
   dz/s — the full sum over blocks with the Laurent polynomial-part step. */
CVec zeta_polynomial(const CurveSpec& spec, const OrderedPartition& part, int j);

void validate_ref(const CurveSpec& spec, const DifferentialRef& form);

/* Value of the form at x (dz- or sqrt(dz)-coefficient). Spin forms are
   continued from the base point along the pinned path convention. */
Complex eval_form(const CurveSpec& spec, const DifferentialRef& form, const SheetPoint& x);

/* Path from the base point to z, straight but pushed above any branch point
   it would otherwise graze. */
std::vector<Complex> pinned_path(const CurveSpec& spec, const Complex& z_target);

/* Value of the half-form f_l at the branch point Q_p (sqrt(dt)-coefficient,
   t = (z-lambda_p)^{1/N}); 0 when the local exponent is positive. Uses the
   pinned continuation, so products of matched pairs are convention-free. */
Complex spin_value_at_branch(const CurveSpec& spec, int twice_l, const OrderedPartition& part,
                             int sign, int p);

/* The branch of f'(lambda_p)^{1/N} fixed by the pinned continuation of the
   factor logs to lambda_p — the root the branch-value identities refer to. */
Complex fprime_root_continued(const CurveSpec& spec, int p);

/* Defect of the polynomial-combination relation: sum_j zeta_j lambda_p^{L-j}
   minus mu_p minus the exact part, evaluated at one point. */
Complex exact_relation_defect(const CurveSpec& spec, const OrderedPartition& part, int p,
                              const Complex& z, int sheet);

/* Defects of the two branch-product identities at p in block r:
   first:  f_{-(N-1)/2+r}(Q_p, L^-) f_{-(N-1)/2+N-r}(Q_p, L) - N f'(lambda_p)^{1/N} / g_in_excl(lambda_p)
   second: f_{-(N-1)/2+r^-}(x, L) f_{-(N-1)/2+r-1}(x, L^-) - g_in(z)/s
   (the fractional power of f' uses the same continued logs as the spin
   functions, making both defects exactly zero under the pinned paths). */
std::pair<Complex, Complex> eval_spin_product_identities(const CurveSpec& spec,
                                                         const OrderedPartition& part, int p,
                                                         const SheetPoint& x);

/* Algebraic Szego kernel (1/N) sum_l f_l(x,L) f_{-l}(y,L^-) / (z(y)-z(x)). */
Complex szego_algebraic(const CurveSpec& spec, const OrderedPartition& part,
                        const SheetPoint& x, const SheetPoint& y);

/* Same kernel with y at the branch point Q_p (the surviving-term limit). */
Complex szego_at_branch(const CurveSpec& spec, const OrderedPartition& part,
                        const SheetPoint& x, int p);

/* Coefficient of dt (or sqrt(dt)) of the form at Q_p, extracted from
   shrinking circles in the local coordinate with Richardson validation. */
Complex local_value_at_branch(const CurveSpec& spec, int p, const DifferentialRef& form);

/* Parse CLI form strings: "holo:a=1,b=2", "mu:p=4", "zeta:j=2",
   "exact:p=1" (mu/zeta need a partition supplied separately). */
DifferentialRef parse_form(const CurveSpec& spec, const std::string& text,
                           const std::optional<OrderedPartition>& part);

} // namespace zn
