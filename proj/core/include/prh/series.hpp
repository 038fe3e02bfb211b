#pragma once

#include <climits>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "prh/padic.hpp"

namespace prh {

// Element of B_n = F[[t]]/t^n.
class Series {
 public:
  Series() = default;
  Series(Ctx ctx, int n);
  static Series constant(Ctx ctx, int n, const PAdicScalar& c);
  static Series from_int(Ctx ctx, int n, long long k) { return constant(ctx, n, PAdicScalar::from_int(ctx, k)); }

  Ctx ctx() const { return ctx_; }
  int n() const { return static_cast<int>(c_.size()); }
  const PAdicScalar& operator[](int k) const { return c_[k]; }
  PAdicScalar& operator[](int k) { return c_[k]; }

  Series operator+(const Series& o) const;
  Series operator-(const Series& o) const;
  Series operator-() const;
  Series operator*(const Series& o) const;
  Series& operator+=(const Series& o) { return *this = *this + o; }
  Series& operator-=(const Series& o) { return *this = *this - o; }
  Series scale(const PAdicScalar& s) const;
  Series mul_int(long long k) const;

  bool is_zero() const;
  // first coefficient that is nonzero at its precision; n() when none. Coefficients
  // skipped as zero lower *decided* to their absolute precision (pi-units).
  int t_order(long long* decided = nullptr) const;
  // minimum pi-valuation over coefficients (lower bounds for inexact zeros)
  long long gauss_w() const;
  long long abs_precision() const;

  Series inverse() const;
  Series shift_down(int k) const;
  Series shift_up(int k) const;
  Series truncate(int m) const;
  Series cap_abs(long long abs_pi) const;
  bool equals(const Series& o) const { return (*this - o).is_zero(); }

 private:
  Ctx ctx_ = nullptr;
  std::vector<PAdicScalar> c_;
};

// b / a where t_order(b) >= t_order(a) = k; the quotient is canonical modulo t^{n-k}
// with its top k coefficients set to zero.
Series div_exact(const Series& b, const Series& a);

// B_n with u = zeta_p - 1 (constant), xi_K = t/u, rho_K = t/xi_K mod t.
class ModelRing {
 public:
  ModelRing(Ctx ctx, int n);
  Ctx ctx() const { return ctx_; }
  int n() const { return n_; }
  Series zero() const { return Series(ctx_, n_); }
  Series one() const { return Series::from_int(ctx_, n_, 1); }
  Series constant(const PAdicScalar& c) const { return Series::constant(ctx_, n_, c); }
  Series from_int(long long k) const { return Series::from_int(ctx_, n_, k); }
  Series t() const;
  const Series& u() const { return u_; }
  const Series& xi() const { return xi_; }
  PAdicScalar rho() const;
  // constant of the Gamma-action: u * t / xi_K
  Series gamma_constant() const;

 private:
  Ctx ctx_;
  int n_;
  Series u_, xi_;
};

// Process-wide interned model rings, keyed by field context and t-order.
const ModelRing* model_ring(Ctx ctx, int n);

struct TwistIndex {
  int k = 0;
  TwistIndex operator+(TwistIndex o) const { return {k + o.k}; }
};

using MultiIndex = std::vector<int>;

// Multi-indices of N^d with |J| <= D, ordered by degree then reverse-lexicographically.
std::vector<MultiIndex> monomials_upto(int d, int D);
int degree(const MultiIndex& J);

enum class PDBasis { divided, ordinary };

inline constexpr int kExactDegree = INT_MAX;

// sum_J c_J W^{[J]} (divided) or sum_J c_J V^J (ordinary), truncated above degree D.
// reliable(): the element is correct modulo terms of degree > reliable().
class PDElement {
 public:
  PDElement() = default;
  PDElement(const ModelRing* ring, int d, int D, PDBasis basis = PDBasis::divided);
  static PDElement constant(const ModelRing* ring, int d, int D, const Series& c, PDBasis basis = PDBasis::divided);
  static PDElement variable(const ModelRing* ring, int d, int D, int i, PDBasis basis = PDBasis::divided);
  static PDElement monomial(const ModelRing* ring, int d, int D, const MultiIndex& J, const Series& c,
                            PDBasis basis = PDBasis::divided);

  const ModelRing* ring() const { return ring_; }
  int dim() const { return d_; }
  int cap() const { return D_; }
  PDBasis basis() const { return basis_; }
  int reliable() const { return reliable_; }
  void set_reliable(int r) { reliable_ = r; }
  const std::map<MultiIndex, Series>& terms() const { return terms_; }
  Series coeff(const MultiIndex& J) const;
  void add_term(const MultiIndex& J, const Series& c);

  PDElement operator+(const PDElement& o) const;
  PDElement operator-(const PDElement& o) const;
  PDElement operator-() const;
  PDElement scale(const Series& s) const;
  bool is_zero() const;
  // equality of the parts of degree <= min(reliable) at guaranteed precision
  bool equals(const PDElement& o) const;
  int max_degree() const;

 private:
  const ModelRing* ring_ = nullptr;
  int d_ = 0, D_ = 0;
  PDBasis basis_ = PDBasis::divided;
  int reliable_ = kExactDegree;
  std::map<MultiIndex, Series> terms_;
};

struct Form {
  std::vector<PDElement> comps;  // coefficient of dlog T_i / xi_K
  TwistIndex twist{-1};
};

PDElement pd_multiply(const PDElement& a, const PDElement& b);
// divided power gamma_k(x) of an element with zero constant term
PDElement pd_gamma(const PDElement& x, int k);
Form pd_connection(const PDElement& a);
Form pd_connection_U(const PDElement& a);
PDElement partial(const PDElement& a, int i);

enum class CoordDirection { U_to_W, W_to_U };
PDElement coordinate_change_UW(const PDElement& a, CoordDirection dir);

enum class RelationKind { linear, multiplicative };
PDElement eliminate_w0(const PDElement& a, RelationKind kind, int r);

PDElement gamma_shift(const PDElement& a, int i, long long exponent);

nlohmann::json pd_to_json(const PDElement& a);
PDElement pd_from_json(const ModelRing* ring, const nlohmann::json& j);
nlohmann::json series_to_json(const Series& s);
Series series_from_json(Ctx ctx, int n, const nlohmann::json& j);

}  // namespace prh
