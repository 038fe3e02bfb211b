#pragma once

#include <array>
#include <boost/rational.hpp>
#include <cstdint>
#include <limits>
#include <nlohmann/json_fwd.hpp>
#include <random>
#include <string>
#include <vector>

#include "prh/errors.hpp"

namespace prh {

using Rational = boost::rational<long long>;

std::string rational_str(const Rational& r);
Rational parse_rational(const std::string& s);

struct FieldConfig {
  int p = 3;
  int precision_N = 8;
  int cyclotomic_depth = 1;
  Rational different_valuation{0};
};

// Structure constants of F = Q_p(zeta_p) in the basis 1, pi, ..., pi^{p-2},
// pi = zeta_p - 1. Contexts are interned and live for the whole process.
class FieldContext {
 public:
  static const FieldContext* get(const FieldConfig& cfg);

  const FieldConfig& config() const { return cfg_; }
  int p() const { return cfg_.p; }
  int e() const { return cfg_.p - 1; }
  int N() const { return cfg_.precision_N; }
  long long max_rel() const { return static_cast<long long>(N()) * e(); }
  long long pow(int k) const;
  // pi^{p-1} = sum red[k] pi^k
  const std::vector<long long>& reduction() const { return red_; }
  // p / pi = sum q[k] pi^k
  const std::vector<long long>& p_over_pi() const { return q_; }
  // valuation of rho_K in pi-units
  long long rho_pi_valuation() const { return rho_w_; }

 private:
  explicit FieldContext(const FieldConfig& cfg);
  FieldConfig cfg_;
  std::vector<long long> pow_;
  std::vector<long long> red_;
  std::vector<long long> q_;
  long long rho_w_ = 1;
};

using Ctx = const FieldContext*;

inline constexpr long long kInfVal = std::numeric_limits<long long>::max() / 4;

struct Valuation {
  bool infinite = false;
  bool lower_bound = false;  // inexact zero: only a lower bound is known
  Rational value{0};
  std::string str() const;
};

// pi^w * (c_0 + c_1 pi + ... + c_{p-2} pi^{p-2}), known modulo pi^{w + r}.
// Precision is tracked in pi-units; guaranteed() reports whole powers of p.
class PAdicScalar {
 public:
  static constexpr int kMaxUnitLen = 10;
  using Coeffs = std::array<long long, kMaxUnitLen>;

  PAdicScalar() = default;

  static PAdicScalar zero(Ctx ctx);
  static PAdicScalar zero_to(Ctx ctx, long long abs_pi);
  static PAdicScalar one(Ctx ctx) { return from_int(ctx, 1); }
  static PAdicScalar from_int(Ctx ctx, long long n);
  static PAdicScalar from_rational(Ctx ctx, long long num, long long den);
  static PAdicScalar pi(Ctx ctx);
  static PAdicScalar zeta(Ctx ctx);
  static PAdicScalar rho(Ctx ctx);
  // exact integral combination pi^shift * sum c[k] pi^k, k < p-1 after folding
  static PAdicScalar from_pi_coeffs(Ctx ctx, const std::vector<long long>& c, long long shift = 0);
  // unit part given modulo pi^rel, valuation w
  static PAdicScalar from_unit(Ctx ctx, long long w, const Coeffs& unit, long long rel);

  Ctx ctx() const { return ctx_; }
  bool is_exact_zero() const { return inf_; }
  bool is_zero() const { return inf_ || r_ == 0; }
  long long w() const { return inf_ ? kInfVal : w_; }
  long long rel() const { return inf_ ? kInfVal : r_; }
  long long abs_precision() const { return inf_ ? kInfVal : w_ + r_; }
  int guaranteed() const;
  const Coeffs& unit() const { return c_; }
  Valuation valuation() const;

  PAdicScalar operator-() const;
  PAdicScalar operator+(const PAdicScalar& o) const;
  PAdicScalar operator-(const PAdicScalar& o) const;
  PAdicScalar operator*(const PAdicScalar& o) const;
  PAdicScalar operator/(const PAdicScalar& o) const;
  PAdicScalar& operator+=(const PAdicScalar& o) { return *this = *this + o; }
  PAdicScalar& operator-=(const PAdicScalar& o) { return *this = *this - o; }
  PAdicScalar& operator*=(const PAdicScalar& o) { return *this = *this * o; }
  PAdicScalar inverse() const;
  PAdicScalar mul_int(long long k) const;
  PAdicScalar div_int(long long k) const;
  PAdicScalar pow(unsigned k) const;
  PAdicScalar cap_abs(long long abs_pi) const;
  // residue class in F_p of a valuation-0 element
  long long residue() const;

  bool equals(const PAdicScalar& o) const { return (*this - o).is_zero(); }
  std::string str() const;

 private:
  friend PAdicScalar normalize_scalar(Ctx, Coeffs, long long, long long);
  Ctx ctx_ = nullptr;
  bool inf_ = true;
  long long w_ = 0;
  long long r_ = 0;
  Coeffs c_{};
};

enum class ArithOp { add, mul, inv };
PAdicScalar scalar_arith(const PAdicScalar& a, const PAdicScalar& b, ArithOp op);
Valuation valuation_of(const PAdicScalar& a);
PAdicScalar padic_exp(const PAdicScalar& x);
PAdicScalar padic_log(const PAdicScalar& x);

// Smallest pi-valuation lower bound L such that all terms x^k/k!, k >= K,
// have valuation >= target, given v(x) >= w_x (pi-units).
int exp_truncation(Ctx ctx, long long w_x, long long target);
int log_truncation(Ctx ctx, long long w_y, long long target);

PAdicScalar random_scalar(Ctx ctx, std::mt19937_64& rng, long long min_w, long long spread);

nlohmann::json scalar_to_json(const PAdicScalar& a);
PAdicScalar scalar_from_json(Ctx ctx, const nlohmann::json& j);

}  // namespace prh
