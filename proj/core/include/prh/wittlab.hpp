#pragma once

#include <gmpxx.h>

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <random>
#include <string>
#include <vector>

#include "prh/errors.hpp"

namespace prh {

// Sparse element of a base ring. Monomial bases key terms by exponent vectors
// scaled by p^e; finite fields key by the power of the generator.
struct BaseElem {
  std::map<std::vector<long long>, mpz_class> terms;
};

enum class BaseKind { finite_field, perfect_monomial };

class PerfectBase {
 public:
  static PerfectBase finite_field(int p, int k);
  static PerfectBase perfect_monomial(int p, std::vector<std::string> vars, int max_den_exp);

  int p() const { return p_; }
  BaseKind kind() const { return kind_; }
  // characteristic-0 lift with the same monomials and integer coefficients
  bool lifted() const { return lifted_; }
  PerfectBase lift() const;
  PerfectBase reduction() const;
  int den_exp() const { return e_; }
  int degree() const { return k_; }
  const std::vector<std::string>& variables() const { return vars_; }
  const std::vector<long long>& modulus() const { return f_; }
  bool same(const PerfectBase& o) const;

  BaseElem zero() const { return {}; }
  BaseElem one() const { return from_int(1); }
  BaseElem from_int(long long n) const;
  // x_i for monomial bases, the generator alpha for finite fields
  BaseElem variable(int i) const;
  BaseElem add(const BaseElem& a, const BaseElem& b) const;
  BaseElem sub(const BaseElem& a, const BaseElem& b) const;
  BaseElem neg(const BaseElem& a) const;
  BaseElem mul(const BaseElem& a, const BaseElem& b) const;
  BaseElem scale(const BaseElem& a, const mpz_class& c) const;
  BaseElem pow(const BaseElem& a, unsigned long k) const;
  BaseElem frob(const BaseElem& a) const;
  BaseElem root(const BaseElem& a) const;
  BaseElem reduce(BaseElem a) const;
  bool equals(const BaseElem& a, const BaseElem& b) const { return sub(a, b).terms.empty(); }
  std::string str(const BaseElem& a) const;
  BaseElem random(std::mt19937_64& rng, int terms, int max_num) const;

 private:
  int p_ = 2;
  BaseKind kind_ = BaseKind::perfect_monomial;
  bool lifted_ = false;
  int e_ = 0;
  int k_ = 1;
  long long scale_ = 1;  // p^e
  std::vector<std::string> vars_;
  std::vector<long long> f_;  // monic modulus of F_q over F_p, low degree first
};

class WittVector {
 public:
  WittVector() = default;
  WittVector(const PerfectBase& base, std::vector<BaseElem> comps);
  const PerfectBase& base() const { return base_; }
  int length() const { return static_cast<int>(c_.size()); }
  const BaseElem& operator[](int i) const { return c_[i]; }
  const std::vector<BaseElem>& components() const { return c_; }
  bool equals(const WittVector& o) const;

 private:
  PerfectBase base_;
  std::vector<BaseElem> c_;
};

inline constexpr int kMaxWittLength = 4;

WittVector teichmueller(const PerfectBase& base, const BaseElem& x, int m);
WittVector witt_zero(const PerfectBase& base, int m);
WittVector witt_from_int(const PerfectBase& base, int m, long long n);
WittVector witt_sum(const WittVector& a, const WittVector& b);
WittVector witt_product(const WittVector& a, const WittVector& b);
WittVector witt_neg(const WittVector& a);
WittVector witt_sub(const WittVector& a, const WittVector& b);

enum class Shift { phi, V };
WittVector frobenius_shift(const WittVector& a, Shift which);

// ghost components w_j = sum_{i<=j} p^i a_i^{p^{j-i}}; needs a lifted base
std::vector<BaseElem> ghost(const WittVector& a);

// Universal integer polynomials in X_0..X_{m-1}, Y_0..Y_{m-1} (negation uses X only).
using IntPoly = std::map<std::vector<int>, mpz_class>;
enum class WittOp { sum, product, negation };
const std::vector<IntPoly>& universal_polynomials(int p, int m, WittOp op);

struct TeichDifference {
  std::vector<BaseElem> P;          // [X] - [Y] = sum [P_n] p^n
  std::vector<BaseElem> quotients;  // P_n / (X^{1/p^n} - Y^{1/p^n}) when divisible
  std::vector<bool> divisible;
};
TeichDifference teich_difference_expansion(const PerfectBase& base, int m);

nlohmann::json witt_to_json(const WittVector& a);

}  // namespace prh
