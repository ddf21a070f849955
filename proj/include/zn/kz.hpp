#pragma once

#include "zn/partition.hpp"
#include "zn/periods.hpp"

#include <map>
#include <vector>

namespace zn {

/* One determinant-formula value per ordered partition, with the branch and
   normalization bookkeeping needed to compare solutions across towers.
   cycle_refs are signed: +i is the i-th A cycle, -i the i-th B cycle. */
struct SolutionVector {
    std::vector<OrderedPartition> partitions;   /* lexicographic */
    std::vector<Complex> f;                     /* with the Delta-power prefactor */
    std::vector<Complex> fbar;                  /* prefactor stripped */
    std::vector<Real> error;                    /* absolute first-order bound on fbar */
    std::vector<int> cycle_refs;
    std::vector<int> pset;
    Complex delta;                              /* prod_{i<j} (lambda_i - lambda_j) */
    Complex log_delta;                          /* recorded branch */
    Complex delta_power;                        /* delta^((N-1)/N^2) */
    Real disagreement{0};                       /* pole form vs polynomial form */

    std::size_t index(const OrderedPartition& part) const;
    const Complex& f_of(const OrderedPartition& part) const { return f[index(part)]; }
    const Complex& fbar_of(const OrderedPartition& part) const { return fbar[index(part)]; }

    std::map<std::string, std::size_t> slots;
};

/* Determinant solution on a positive-genus tower. Defaults: cycle_refs =
   (1, .., L) — the A-cycle choice the theta comparison needs — and pset =
   (1, .., L). Every call also assembles the polynomial-numerator variant of
   the determinant from shared monomial periods and records the largest gap
   between the two, relative to the largest component. */
SolutionVector solve_integral(const PeriodData& pd, std::vector<int> cycle_refs = {},
                              std::vector<int> pset = {});

/* Genus-zero curves: the determinant is empty and no loops enter. */
SolutionVector solve_integral(const CurveSpec& spec);

/* Max over partitions of the relative defect of the differential system in
   lambda_p, via Richardson-extrapolated central differences on freshly built
   towers (steps h and h/2; h <= 0 picks 1e-4 times the smallest pairwise
   branch-point distance). Both the bare and the prefactor-stripped form of
   the system are checked. */
Real kz_residual(const CurveSpec& spec, int p, Real h = Real(0));

/* Max over partitions and ordered block pairs (r, t) of
   |fbar_P + sum_l fbar_{P'}|, P' trading the l-th element of block r for the
   last element of block t, normalized by max |fbar|. */
Real singlet_residual(const SolutionVector& sol);

/* Exact counts: weight-zero invariant multiplicity, independent loop
   choices, and their ratio. */
struct DimCounts {
    Int mult;
    Int indep;
    Rat ratio;
};
DimCounts dim_counts(int N, int m);

} // namespace zn
