#pragma once

#include "zn/differentials.hpp"
#include "zn/homology.hpp"

#include <map>

namespace zn {

struct QuadResult {
    Complex value;
    Real error;
};

struct MultiQuad {
    std::vector<Complex> values;
    Real error;
};

/* Integral of several forms along one polyline, sharing the root-branch
   continuation. The starting sheet fixes the branch of s at polyline[0]. */
MultiQuad integrate_forms_polyline(const CurveSpec& spec,
                                   const std::vector<DifferentialRef>& forms,
                                   const std::vector<Complex>& polyline, int start_sheet);

MultiQuad integrate_forms_cycle(const CurveSpec& spec,
                                const std::vector<DifferentialRef>& forms, const Cycle& cycle);

QuadResult integrate_cycle(const CurveSpec& spec, const DifferentialRef& form, const Cycle& cycle);

/* Integral from the base point to the ramification point over branch index p,
   along the standard pinned path, with a u^N endpoint substitution on the
   final approach. Forms must stay integrable there (holomorphic basis). */
MultiQuad integrate_forms_to_branch(const CurveSpec& spec,
                                    const std::vector<DifferentialRef>& forms, int p);

/* Normalized period data on the canonical homology basis. */
struct PeriodData {
    CurveSpec spec;
    IntersectionData homo;
    std::vector<DifferentialRef> holos;   /* flattened basis, a-major */
    CMat A;                               /* A[i][c] over basis cycle i, form c */
    CMat B;
    CMat sigma;                           /* v_j = sum_c sigma[j][c] w_c */
    CMat tau;                             /* tau[i][j], symmetric, Re < 0 */
    bool swapped = false;                 /* orientation fix (A,B) -> (B,-A) */
    IMat arows, brows;                    /* final basis combinations */
    mutable Real quad_error{0};           /* max per-cycle quadrature error seen */

    int holo_index(int a, int b) const;   /* flat index of w^(a)_b */
    std::vector<Complex> d_coeff(int beta) const;   /* weight-derivative row */

    /* cached integrals of one form over the elementary cycles */
    const std::vector<Complex>& elementary(const DifferentialRef& form) const;
    void fill_cache(const std::vector<DifferentialRef>& forms) const;
    Complex a_period(const DifferentialRef& form, int i) const;
    Complex b_period(const DifferentialRef& form, int i) const;

  private:
    mutable std::map<std::string, std::vector<Complex>> cache;
};

PeriodData build_period_data(const CurveSpec& spec);

} // namespace zn
