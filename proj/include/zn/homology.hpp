#pragma once

#include "zn/curve.hpp"

namespace zn {

/* Combinatorial code of an elementary loop: travel between the branch
   points with indices a and b (adjacent in the sorted order used at build
   time), out on one sheet and back one sheet higher. The code survives
   branch-point perturbation; the polyline is regenerated from it. */
struct CycleCode {
    int a = 0;
    int b = 0;
    int k = 0;              /* outgoing nominal sheet, 0..N-2 */
    unsigned jitter = 0;    /* geometry diversification seed */
};

struct Cycle {
    CycleCode code;
    /* geometric pieces with the continued start point of each piece */
    std::vector<std::pair<std::vector<Complex>, SheetPoint>> segments;
    SheetPoint start;

    std::vector<Complex> flat() const;    /* closed concatenated polyline */
};

using IMat = std::vector<std::vector<long long>>;

/* Canonical homology data: the elementary family, its integer intersection
   pairing, and a unimodular change of basis whose first 2g rows are the
   interleaved symplectic basis A_1, B_1, A_2, B_2, ... over the family. */
struct IntersectionData {
    std::vector<Cycle> cycles;
    IMat pairing;
    IMat transform;          /* rows = new basis in elementary coordinates */
    int genus = 0;

    std::vector<long long> a_row(int i) const;   /* A_i combination, i in 1..g */
    std::vector<long long> b_row(int i) const;
};

/* Branch indices sorted by (Re, Im). */
std::vector<int> sorted_branch_order(const CurveSpec& spec);

Cycle make_cycle(const CurveSpec& spec, const CycleCode& code);

/* Same loop started one sheet higher (deck-transformation image). */
Cycle shift_start_sheet(const CurveSpec& spec, const Cycle& cycle, int shift);

/* The (N-1)(Nm-1) elementary loops; throws GenusZero when g = 0. */
std::vector<Cycle> elementary_cycles(const CurveSpec& spec, unsigned jitter = 0);

/* Integer intersection pairing from transversal crossings of the z-plane
   polylines, matched by sheet (continued s values). */
IMat intersection_matrix(const CurveSpec& spec, const std::vector<Cycle>& cycles);

/* Pairing of one extra cycle against a family (one row). */
std::vector<long long> intersection_row(const CurveSpec& spec, const Cycle& extra,
                                        const std::vector<Cycle>& cycles);

/* Integer symplectic reduction; throws RankDeficient unless the pairing has
   rank exactly 2g with unit pivots. */
IntersectionData canonical_basis(const CurveSpec& spec, std::vector<Cycle> cycles,
                                 const IMat& pairing);

/* One-call builder with geometry-retry on degenerate crossings. */
IntersectionData homology_data(const CurveSpec& spec);

} // namespace zn
