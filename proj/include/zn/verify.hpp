#pragma once

#include <zn/numerics.hpp>
#include <zn/partition.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace zn {

/* Exact verification of the algebraic relations satisfied by the
 * pole-attached forms, the polynomial tail forms, the spin exponent
 * tables and the rational residue sums.  Each relation is reduced to an
 * identity of rational functions of (z, lambda_1..lambda_Nm) graded by
 * the power of s it sits over, then evaluated at random rational points
 * with exact arithmetic.  A relation passes only if every graded
 * coefficient is exactly zero in every trial.
 *
 * Relations that hold only up to total differentials are handled by
 * replacing each pole-attached form with its polynomial-tail
 * representative: the two differ by d(s^{N-1}/(z - lambda_p)) terms,
 * and no nonzero form of that kind is a polynomial of degree <= Nm-2
 * over s, so the substitution is faithful.
 */

/* thrown by exact division when a sampled denominator vanishes;
 * the trial loop redraws the point */
struct SampleHit {};

/* a rational value carrying its derivative with respect to one tracked
 * branch point */
struct DualQ {
  Rat v;
  Rat d;
  DualQ() : v(0), d(0) {}
  DualQ(int x) : v(x), d(0) {}
  DualQ(long x) : v(x), d(0) {}
  DualQ(const Rat& x) : v(x), d(0) {}
  DualQ(Rat x, Rat dx) : v(std::move(x)), d(std::move(dx)) {}
};

DualQ operator+(const DualQ& a, const DualQ& b);
DualQ operator-(const DualQ& a, const DualQ& b);
DualQ operator-(const DualQ& a);
DualQ operator*(const DualQ& a, const DualQ& b);
DualQ operator/(const DualQ& a, const DualQ& b);
DualQ& operator+=(DualQ& a, const DualQ& b);
DualQ& operator-=(DualQ& a, const DualQ& b);
DualQ& operator*=(DualQ& a, const DualQ& b);
DualQ dpow(const DualQ& a, long e);

/* one random rational evaluation point */
struct Sample {
  int N = 0, m = 0;
  std::vector<Rat> lambda; /* branch point values, entry j-1 for index j */
  Rat z;
  std::vector<Rat> aux; /* spare random values for interpolation cases */
  int dvar = 0;         /* branch point tracked by the derivative slot, 0 = none */

  DualQ lam(int j) const;
  DualQ zz() const;
};

/* sum over k of c[k] dz/s^k plus a ledger of d(s^{N-1}/(z-lambda_p))
 * coefficients kept outside the graded part */
struct FormExpr {
  int N = 0;
  std::vector<DualQ> c;         /* grade k multiplies dz/s^k, k = 0..N-1 */
  std::map<int, DualQ> exact_c; /* p -> coefficient of d(s^{N-1}/(z-lambda_p)) */
  bool dspent = false;          /* a formal derivative has been applied */

  explicit FormExpr(int n = 0);
  void add(int k, const DualQ& x);
  FormExpr& operator+=(const FormExpr& o);
  FormExpr& operator-=(const FormExpr& o);
  FormExpr scaled(const DualQ& x) const;

  /* formal derivative along branch point p; p must be the sample's
   * tracked variable and the expression must carry no exact-part terms */
  FormExpr dlambda(const Sample& sp, int p) const;

  /* expand every exact-part term into its grade-1 coefficient */
  void substitute_exact(const Sample& sp);

  /* the graded part vanishes identically at this point */
  bool values_zero() const;
  std::string describe_nonzero() const;
};

struct IdentityCase {
  std::string id;
  int N = 0;
  int m = 0;
  std::vector<std::vector<int>> blocks; /* empty = consecutive blocks */
  std::vector<int> indices;             /* meaning fixed per id, see registry */
  int trials = 100;
  std::uint64_t seed = 1;
  int mutation = 0; /* 0 = faithful, k = add one to the k-th registered coefficient */
};

struct Verdict {
  bool pass = false;
  int trials_run = 0;
  std::string witness; /* empty on pass */
};

/* registered relation names */
std::vector<std::string> identity_ids();

/* admissible index tuples for one relation at a given shape; empty when
 * the shape leaves no valid instance */
std::vector<std::vector<int>> admissible_indices(const std::string& id, int N, int m);

/* number of coefficients the builder registers for mutation (depends on
 * the case's shape and indices, not on the evaluation point) */
int mutation_count(const IdentityCase& c);

/* difference of the two sides of the relation, evaluated at the point */
FormExpr build_identity(const IdentityCase& c, const Sample& sp);

/* random rational point with distinct branch values; throws on request
 * for shapes the case cannot use */
Sample draw_sample(const IdentityCase& c, std::uint64_t trial_seed);

/* randomized exact check: pass iff every graded coefficient is exactly
 * zero in every trial */
Verdict test_identity(const IdentityCase& c);

struct SuiteRow {
  std::string id;
  std::string params;
  bool pass = false;
  int trials = 0;
};

struct SuiteReport {
  int N = 0, m = 0;
  std::vector<SuiteRow> rows;
  bool all_pass = true;
};

/* run the derivation-step relations over every admissible index tuple */
SuiteReport verify_appendix_suite(int N, int m, int trials, std::uint64_t seed);

} // namespace zn
