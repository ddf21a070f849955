#pragma once

#include "zn/differentials.hpp"
#include "zn/periods.hpp"

#include <map>
#include <string>
#include <vector>

namespace zn {

/* Rational theta characteristics (delta, epsilon); the partition classes use
   denominators dividing 2N. */
struct Characteristics {
    std::vector<Rat> delta, epsilon;

    std::string to_string() const;
    bool operator==(const Characteristics& o) const {
        return delta == o.delta && epsilon == o.epsilon;
    }
    bool operator<(const Characteristics& o) const {
        return delta != o.delta ? delta < o.delta : epsilon < o.epsilon;
    }
};

/* The point e = 2 pi i epsilon + delta tau of C^g. */
CVec characteristic_point(const Characteristics& ch, const CMat& tau);

/* Real characteristics of an arbitrary point, solved through the
   negative-definite real part of tau. */
void real_characteristics(const CVec& e, const CMat& tau, std::vector<Real>& delta,
                          std::vector<Real>& epsilon);

struct ThetaEval {
    Complex value;
    CVec grad;      /* d_i theta */
    CMat hess;      /* d_i d_j theta */
    CVec dlog;      /* d_i log theta */
    CMat ddlog;     /* d_i d_j log theta */
    long radius = 0;
    Real tail{0};   /* bound on the omitted lattice mass */
};

/* Lattice sum over max-norm shells, truncated once the shell mass drops
   geometrically below the contract threshold. order in {0,1,2} selects the
   derivative layers. */
ThetaEval riemann_theta(const CVec& z, const CMat& tau, const Characteristics& ch, int order);

/* Abel images u(Q_p) = int_{z0}^{Q_p} v of the branch points, along the
   pinned paths; u_j = sum_c sigma[j][c] * (holo integrals). */
std::vector<CVec> abel_branch_table(const PeriodData& pd);
CVec abel_map(const PeriodData& pd, int p);
/* Straight-chord Abel map to an ordinary point (guarded by PoleOnPath). */
CVec abel_map(const PeriodData& pd, const SheetPoint& x);

/* Resolves the characteristics attached to ordered partitions.  The first
   request runs a grid search over (delta, epsilon) in (1/2N)Z^{2g} anchored
   by the loop-integral identity for mu forms; the winning shift then turns
   every other partition into a rounding. */
class CharacteristicResolver {
public:
    explicit CharacteristicResolver(const PeriodData& pd);

    const PeriodData& periods() const { return *pd_; }
    const Characteristics& find(const OrderedPartition& part);

    /* max_{p,i} relative defect of
       int_{A_i} mu_p = N^2 sum_b lambda_p^{b-1} D_b d_i log theta[e](0). */
    Real loop_identity_defect(const OrderedPartition& part);

private:
    CMat mu_loop_matrix(const OrderedPartition& part);    /* p x i table of LHS */
    Real defect_against(const CMat& lhs, const ThetaEval& th);
    CVec uhat_of(const OrderedPartition& part) const;     /* weighted branch images */
    bool grid_round(const CVec& e, Characteristics& ch) const;
    size_t disambiguate(const OrderedPartition& anchor, const CVec& uhat_anchor,
                        const std::vector<Characteristics>& winners);

    const PeriodData* pd_;
    std::vector<CVec> ubr_;       /* 1-based: ubr_[p] = u(Q_p) */
    bool anchored_ = false;
    CVec shift_;
    std::map<std::string, Characteristics> cache_;
};

/* Prefactor pieces shared with the solver formulas. */
Complex lambda_vandermonde(const CurveSpec& spec);               /* prod_{i<j} (l_i - l_j) */
Complex block_pair_product(const CurveSpec& spec, const OrderedPartition& part,
                           int i, int j);                        /* (Lambda_i Lambda_j) */
Complex block_pair_product_all(const CurveSpec& spec, const OrderedPartition& part);

/* Determinant formula built from theta log-derivatives:
   Delta^{(N-1)/N^2} / prod_{i<j}(Lambda_i Lambda_j)
     * det(d_{i_j} D_k log theta[e](0)), default index set 1..L. */
Complex theta_solution(CharacteristicResolver& res, const OrderedPartition& part,
                       std::vector<int> index_set = {});

/* |theta[e](0)|^{2N} / (|det A|^N prod_{i<=j} |Lambda_i Lambda_j|^{2N q(i,j)+N mu})
   for one lambda configuration; the quotient is the lambda-independent
   Thomae constant. */
Real thomae_quotient(CharacteristicResolver& res, const OrderedPartition& part);

/* Max relative spread of the Thomae quotient across lambda samples; builds
   the full tower (curve, loops, periods, resolver) per sample. */
Real thomae_check(int N, int m, const std::vector<CVec>& lambda_samples,
                  const OrderedPartition& part);

/* |prod_{i<j}(Lambda_i Lambda_j)| * prod_{sigma in S_{N-1}}
   |theta[e_{Lambda^sigma}](0)|^{12N/(N+1)!}
   / (|det A|^{6/(N+1)} |Delta|^{3(N-1)/(N+1)}) — lambda-independent. */
Real block_product_quotient(CharacteristicResolver& res, const OrderedPartition& part);

/* (det A)^{-3} Delta^{-3/4} theta[e](0)^4 det(dd log theta[e](0)) per
   partition, keyed by the partition's print form; N must be 2. */
std::map<std::string, Complex> smirnov_sl2(CharacteristicResolver& res);

} // namespace zn
