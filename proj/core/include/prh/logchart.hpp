#pragma once

#include <gmpxx.h>

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prh/padic.hpp"

namespace prh {

using ExpVec = std::vector<long long>;

// <e_1..e_k | u = v, ...>
struct FGMonoid {
  int gens = 0;
  std::vector<std::pair<ExpVec, ExpVec>> relations;
};

struct MonoidMap {
  FGMonoid source, target;
  std::vector<ExpVec> images;  // image of each source generator, in target generators
};

struct ChartDescriptor {
  int d = 1;
  int r = 0;
  Rational a{1};
};

// ---- integer lattices

using IntVec = std::vector<mpz_class>;
using IntMat = std::vector<IntVec>;

// P A Q = D with P, Q unimodular and d_1 | d_2 | ...
struct SmithForm {
  IntMat D, P, Q, Qinv;
  int rank = 0;
  std::vector<mpz_class> divisors;
};
SmithForm smith_form(const IntMat& A, int cols);
bool in_row_lattice(const IntMat& gens, int cols, const IntVec& v);
// basis (as rows) of {x : A x = 0}
IntMat integer_kernel(const IntMat& A, int cols);

// ---- binomial ideals

// x^a - x^b with x^a the leading term, or the monomial x^a
struct Binomial {
  std::vector<int> a, b;
  bool monomial = false;
};

// Block degree-reverse-lexicographic order; variables of earlier blocks dominate.
struct TermOrder {
  std::vector<int> block_sizes;
  bool less(const std::vector<int>& x, const std::vector<int>& y) const;
};

class BinomialBasis {
 public:
  BinomialBasis(std::vector<Binomial> gens, TermOrder order);
  const std::vector<Binomial>& basis() const { return g_; }
  // normal form of x^m; nullopt when it reduces to zero
  std::optional<std::vector<int>> normal_form(std::vector<int> m) const;
  bool contains(const Binomial& f) const;

 private:
  std::optional<Binomial> reduce(const std::vector<int>* m, const std::vector<int>* n) const;
  TermOrder order_;
  std::vector<Binomial> g_;
};

// ---- monoids

struct GroupCompletion {
  int free_rank = 0;
  std::vector<std::string> torsion;  // invariant factors > 1
};
GroupCompletion group_completion(const FGMonoid& m);
bool is_integral(const FGMonoid& m);
bool is_saturated(const FGMonoid& m);
// x in Z^k names an element of gp(M); requires M integral
bool monoid_contains(const FGMonoid& m, const ExpVec& x);

struct Exactification {
  FGMonoid mprime;                  // presentation on the generators below
  std::vector<ExpVec> generators;   // M' generators as elements of Z^k (mod the relations of M)
  std::vector<ExpVec> kernel;       // basis of G = ker(alpha^gp), lifted to Z^k
  bool factorization = false;       // M -> M' -> target composes to alpha, images land in the target
  bool preimage_in_box = false;     // every x in the box with alpha(x) in the target lies in M'
  bool units_certificate = false;   // alpha^{-1}(target units) = units of M'
  bool gp_equal = false;            // gp(M') = gp(M)
  bool idempotent = false;          // exactifying M' -> target adds nothing
  int box = 0;
  bool ok() const { return factorization && preimage_in_box && units_certificate && gp_equal && idempotent; }
};
Exactification exactify(const MonoidMap& f, int box = 2);

// <e_0..e_r, f | e_0 + ... + e_r = f> and its map to N (e_i -> 1, f -> r + 1)
FGMonoid semistable_skeleton(int r);
MonoidMap skeleton_map(int r);

struct OmegaLog {
  int d = 0, r = 0;
  std::vector<std::string> symbols;  // dlog T_0 .. dlog T_d
  std::vector<int> relation;         // coefficients of sum_{i<=r} dlog T_i = 0
  std::vector<int> basis;            // indices kept after dropping dlog T_0
  std::vector<int> t0_expression;    // dlog T_0 in the basis
};
OmegaLog omega_log_basis(const ChartDescriptor& c);

nlohmann::json monoid_to_json(const FGMonoid& m);
FGMonoid monoid_from_json(const nlohmann::json& j);
ChartDescriptor chart_from_json(const nlohmann::json& j);
nlohmann::json omega_to_json(const OmegaLog& o);
nlohmann::json exactification_to_json(const Exactification& e);

}  // namespace prh
