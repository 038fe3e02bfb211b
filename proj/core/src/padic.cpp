#include "prh/padic.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <tuple>

namespace prh {

std::string rational_str(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational parse_rational(const std::string& s) {
  try {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(s));
    long long den = std::stoll(s.substr(slash + 1));
    if (den == 0) throw InputError("zero denominator in rational '" + s + "'");
    return Rational(std::stoll(s.substr(0, slash)), den);
  } catch (const std::logic_error&) {
    throw InputError("malformed rational '" + s + "'");
  }
}

std::string Valuation::str() const {
  if (infinite) return "inf";
  return (lower_bound ? ">=" : "") + rational_str(value);
}

namespace {

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

long long md(__int128 x, long long m) {
  __int128 r = x % m;
  if (r < 0) r += m;
  return static_cast<long long>(r);
}

int vp(long long x, int p) {
  if (x == 0) return 1 << 20;
  int v = 0;
  while (x % p == 0) {
    x /= p;
    ++v;
  }
  return v;
}

using Coeffs = PAdicScalar::Coeffs;

// Working modulus for intermediate computations; all knowledge moduli divide it.
long long work_mod(Ctx ctx) { return ctx->pow(ctx->N() + 3); }

void reduce_ideal(Ctx ctx, Coeffs& c, long long r) {
  int e = ctx->e();
  if (r <= 0) {
    c.fill(0);
    return;
  }
  long long q = r / e, s = r % e;
  for (int k = 0; k < e; ++k) {
    long long m = ctx->pow(static_cast<int>(k < s ? q + 1 : q));
    c[k] = md(c[k], m);
  }
  for (int k = e; k < PAdicScalar::kMaxUnitLen; ++k) c[k] = 0;
}

long long pi_val(Ctx ctx, const Coeffs& c) {
  long long v = kInfVal;
  for (int k = 0; k < ctx->e(); ++k)
    if (c[k] != 0) v = std::min<long long>(v, static_cast<long long>(ctx->e()) * vp(c[k], ctx->p()) + k);
  return v;
}

void mul_pi(Ctx ctx, Coeffs& c, long long M) {
  int e = ctx->e();
  long long top = c[e - 1];
  for (int k = e - 1; k >= 1; --k) c[k] = c[k - 1];
  c[0] = 0;
  const auto& red = ctx->reduction();
  for (int k = 0; k < e; ++k) c[k] = md(static_cast<__int128>(c[k]) + static_cast<__int128>(top) * red[k], M);
}

void div_pi(Ctx ctx, Coeffs& c) {
  int e = ctx->e();
  long long M = work_mod(ctx);
  long long h = c[0] / ctx->p();
  const auto& q = ctx->p_over_pi();
  Coeffs out{};
  for (int k = 0; k < e; ++k) {
    __int128 v = (k + 1 < e ? c[k + 1] : 0);
    v += static_cast<__int128>(h) * q[k];
    out[k] = md(v, M);
  }
  c = out;
}

Coeffs mul_units(Ctx ctx, const Coeffs& a, const Coeffs& b, long long M) {
  int e = ctx->e();
  std::array<__int128, 2 * PAdicScalar::kMaxUnitLen> prod{};
  for (int i = 0; i < e; ++i) {
    if (a[i] == 0) continue;
    for (int j = 0; j < e; ++j) prod[i + j] = md(prod[i + j] + static_cast<__int128>(a[i]) * b[j], M);
  }
  const auto& red = ctx->reduction();
  for (int j = 2 * e - 2; j >= e; --j) {
    __int128 t = prod[j];
    prod[j] = 0;
    if (t == 0) continue;
    for (int k = 0; k < e; ++k) prod[j - e + k] = md(prod[j - e + k] + t * red[k], M);
  }
  Coeffs out{};
  for (int k = 0; k < e; ++k) out[k] = static_cast<long long>(prod[k]);
  return out;
}

long long inv_mod(long long a, long long m) {
  __int128 t = 0, nt = 1, r = m, nr = md(a, m);
  while (nr != 0) {
    __int128 qq = r / nr;
    std::tie(t, nt) = std::make_tuple(nt, t - qq * nt);
    std::tie(r, nr) = std::make_tuple(nr, r - qq * nr);
  }
  if (r != 1) throw PrecisionExhausted("residue not invertible");
  return md(t, m);
}

void check_same(Ctx a, Ctx b) {
  if (a != b) throw ConfigMismatch("scalars from different field configurations");
}

}  // namespace

PAdicScalar normalize_scalar(Ctx ctx, Coeffs c, long long w0, long long A) {
  if (A <= 0) return PAdicScalar::zero_to(ctx, w0 + std::max<long long>(A, 0));
  reduce_ideal(ctx, c, A);
  long long v = pi_val(ctx, c);
  if (v >= A) return PAdicScalar::zero_to(ctx, w0 + A);
  for (long long i = 0; i < v; ++i) {
    div_pi(ctx, c);
    reduce_ideal(ctx, c, A - i - 1);
  }
  long long r = std::min(A - v, ctx->max_rel());
  reduce_ideal(ctx, c, r);
  PAdicScalar out;
  out.ctx_ = ctx;
  out.inf_ = false;
  out.w_ = w0 + v;
  out.r_ = r;
  out.c_ = c;
  return out;
}

FieldContext::FieldContext(const FieldConfig& cfg) : cfg_(cfg) {
  if (!is_prime(cfg.p)) throw ConfigMismatch("p = " + std::to_string(cfg.p) + " is not prime");
  if (cfg.p - 1 > PAdicScalar::kMaxUnitLen) throw SizeLimit("p too large for the unit representation");
  if (cfg.precision_N < 1) throw ConfigMismatch("precision_N must be positive");
  if (cfg.cyclotomic_depth != 1) throw ConfigMismatch("only cyclotomic_depth = 1 is implemented");
  if (cfg.different_valuation < 0) throw ConfigMismatch("different_valuation must be >= 0");
  pow_.push_back(1);
  while (pow_.back() < (1LL << 62) / cfg.p) pow_.push_back(pow_.back() * cfg.p);
  if (static_cast<int>(pow_.size()) <= cfg.precision_N + 3)
    throw SizeLimit("p^(N+3) exceeds the 62-bit coefficient budget");
  int e = cfg.p - 1;
  red_.assign(e, 0);
  for (int k = 1; k <= cfg.p - 1; ++k) red_[k - 1] = -binom(cfg.p, k);
  q_.assign(e, 0);
  q_[e - 1] -= 1;
  for (int k = 2; k <= cfg.p - 1; ++k) q_[k - 2] -= binom(cfg.p, k);
  Rational rw = Rational(1) + cfg.different_valuation * e;
  if (rw.denominator() != 1) throw ConfigMismatch("different_valuation outside (1/(p-1))Z");
  rho_w_ = rw.numerator();
}

long long FieldContext::pow(int k) const {
  if (k < 0 || k >= static_cast<int>(pow_.size())) throw SizeLimit("p-power out of range");
  return pow_[k];
}

const FieldContext* FieldContext::get(const FieldConfig& cfg) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, long long, long long>, std::unique_ptr<FieldContext>> table;
  auto key = std::make_tuple(cfg.p, cfg.precision_N, cfg.cyclotomic_depth, cfg.different_valuation.numerator(),
                             cfg.different_valuation.denominator());
  std::lock_guard<std::mutex> lock(mu);
  auto it = table.find(key);
  if (it != table.end()) return it->second.get();
  auto ctx = std::unique_ptr<FieldContext>(new FieldContext(cfg));
  auto* raw = ctx.get();
  table.emplace(key, std::move(ctx));
  return raw;
}

PAdicScalar PAdicScalar::zero(Ctx ctx) {
  PAdicScalar z;
  z.ctx_ = ctx;
  return z;
}

PAdicScalar PAdicScalar::zero_to(Ctx ctx, long long abs_pi) {
  PAdicScalar z;
  z.ctx_ = ctx;
  z.inf_ = false;
  z.w_ = abs_pi;
  z.r_ = 0;
  return z;
}

PAdicScalar PAdicScalar::from_unit(Ctx ctx, long long w, const Coeffs& unit, long long rel) {
  return normalize_scalar(ctx, unit, w, std::min(rel, ctx->max_rel()));
}

PAdicScalar PAdicScalar::from_pi_coeffs(Ctx ctx, const std::vector<long long>& c, long long shift) {
  int e = ctx->e();
  if (static_cast<int>(c.size()) > e) throw PreconditionFailed("coefficient vector longer than p-1");
  int a = 1 << 20;
  for (long long x : c)
    if (x != 0) a = std::min(a, vp(x, ctx->p()));
  if (a == (1 << 20)) return zero(ctx);
  Coeffs x{};
  long long pa = 1;
  for (int i = 0; i < a; ++i) pa *= ctx->p();
  for (size_t k = 0; k < c.size(); ++k) x[k] = c[k] / pa;
  long long v = pi_val(ctx, x);
  PAdicScalar out = normalize_scalar(ctx, x, shift, v + ctx->max_rel());
  if (a > 0) {
    Coeffs pc{};
    pc[0] = ctx->p();
    PAdicScalar P = normalize_scalar(ctx, pc, 0, e + ctx->max_rel());
    out = out * P.pow(a);
  }
  return out;
}

PAdicScalar PAdicScalar::from_int(Ctx ctx, long long n) { return from_pi_coeffs(ctx, {n}); }

PAdicScalar PAdicScalar::from_rational(Ctx ctx, long long num, long long den) {
  if (den == 0) throw PreconditionFailed("zero denominator");
  return from_int(ctx, num) / from_int(ctx, den);
}

PAdicScalar PAdicScalar::pi(Ctx ctx) {
  if (ctx->e() == 1) return from_int(ctx, -2);
  return from_pi_coeffs(ctx, {0, 1});
}

PAdicScalar PAdicScalar::zeta(Ctx ctx) { return one(ctx) + pi(ctx); }

PAdicScalar PAdicScalar::rho(Ctx ctx) { return pi(ctx).pow(static_cast<unsigned>(ctx->rho_pi_valuation())); }

int PAdicScalar::guaranteed() const {
  if (inf_) return ctx_ ? ctx_->N() : 0;
  return static_cast<int>(r_ / ctx_->e());
}

Valuation PAdicScalar::valuation() const {
  Valuation v;
  if (inf_) {
    v.infinite = true;
    return v;
  }
  v.value = Rational(w_, ctx_->e());
  v.lower_bound = (r_ == 0);
  return v;
}

PAdicScalar PAdicScalar::operator-() const {
  if (is_zero()) return *this;
  Coeffs c = c_;
  for (int k = 0; k < ctx_->e(); ++k) c[k] = -c[k];
  reduce_ideal(ctx_, c, r_);
  PAdicScalar out = *this;
  out.c_ = c;
  return out;
}

PAdicScalar PAdicScalar::operator+(const PAdicScalar& o) const {
  check_same(ctx_, o.ctx_);
  if (inf_) return o;
  if (o.inf_) return *this;
  const PAdicScalar& x = (w_ <= o.w_) ? *this : o;
  const PAdicScalar& y = (w_ <= o.w_) ? o : *this;
  long long A = std::min(x.abs_precision(), y.abs_precision()) - x.w_;
  Coeffs c = x.c_;
  long long delta = y.w_ - x.w_;
  if (y.r_ > 0 && delta < A) {
    long long M = ctx_->pow(static_cast<int>(A / ctx_->e() + 1));
    Coeffs t = y.c_;
    for (long long i = 0; i < delta; ++i) mul_pi(ctx_, t, M);
    for (int k = 0; k < ctx_->e(); ++k) c[k] = md(static_cast<__int128>(c[k]) + t[k], M);
  }
  return normalize_scalar(ctx_, c, x.w_, A);
}

PAdicScalar PAdicScalar::operator-(const PAdicScalar& o) const { return *this + (-o); }

PAdicScalar PAdicScalar::operator*(const PAdicScalar& o) const {
  check_same(ctx_, o.ctx_);
  if (inf_ || o.inf_) return zero(ctx_);
  long long w = w_ + o.w_;
  long long r = std::min(r_, o.r_);
  if (r == 0) return zero_to(ctx_, w);
  long long M = ctx_->pow(static_cast<int>(r / ctx_->e() + 1));
  Coeffs c = mul_units(ctx_, c_, o.c_, M);
  reduce_ideal(ctx_, c, r);
  PAdicScalar out;
  out.ctx_ = ctx_;
  out.inf_ = false;
  out.w_ = w;
  out.r_ = r;
  out.c_ = c;
  return out;
}

PAdicScalar PAdicScalar::inverse() const {
  if (is_zero()) throw PrecisionExhausted("inverting an element indistinguishable from zero: " + str());
  long long M = ctx_->pow(static_cast<int>(r_ / ctx_->e() + 1));
  Coeffs x{};
  x[0] = inv_mod(c_[0], M);
  for (long long prec = 1; prec < r_; prec *= 2) {
    Coeffs ux = mul_units(ctx_, c_, x, M);
    for (int k = 0; k < ctx_->e(); ++k) ux[k] = md(-static_cast<__int128>(ux[k]), M);
    ux[0] = md(static_cast<__int128>(ux[0]) + 2, M);
    x = mul_units(ctx_, x, ux, M);
  }
  reduce_ideal(ctx_, x, r_);
  PAdicScalar out;
  out.ctx_ = ctx_;
  out.inf_ = false;
  out.w_ = -w_;
  out.r_ = r_;
  out.c_ = x;
  return out;
}

PAdicScalar PAdicScalar::operator/(const PAdicScalar& o) const {
  check_same(ctx_, o.ctx_);
  PAdicScalar inv = o.inverse();
  return *this * inv;
}

PAdicScalar PAdicScalar::mul_int(long long k) const { return *this * from_int(ctx_, k); }
PAdicScalar PAdicScalar::div_int(long long k) const { return *this / from_int(ctx_, k); }

PAdicScalar PAdicScalar::pow(unsigned k) const {
  PAdicScalar result = one(ctx_);
  PAdicScalar base = *this;
  while (k) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return result;
}

PAdicScalar PAdicScalar::cap_abs(long long abs_pi) const {
  if (abs_precision() <= abs_pi) return *this;
  if (inf_ || abs_pi <= w_) return zero_to(ctx_, abs_pi);
  PAdicScalar out = *this;
  out.r_ = abs_pi - w_;
  reduce_ideal(ctx_, out.c_, out.r_);
  return out;
}

long long PAdicScalar::residue() const {
  if (inf_) return 0;
  if (w_ > 0) return 0;
  if (w_ < 0) throw PreconditionFailed("residue of a non-integral element");
  if (r_ == 0) throw PrecisionExhausted("residue of an inexact zero at valuation 0");
  return c_[0] % ctx_->p();
}

std::string PAdicScalar::str() const {
  if (!ctx_) return "<null>";
  if (inf_) return "0";
  std::ostringstream os;
  if (r_ == 0) {
    os << "O(p^" << rational_str(Rational(w_, ctx_->e())) << ")";
    return os.str();
  }
  os << "p^" << rational_str(Rational(w_, ctx_->e())) << "*(";
  for (int k = 0; k < ctx_->e(); ++k) os << (k ? "," : "") << c_[k];
  os << ")+O(p^" << rational_str(Rational(w_ + r_, ctx_->e())) << ")";
  return os.str();
}

PAdicScalar scalar_arith(const PAdicScalar& a, const PAdicScalar& b, ArithOp op) {
  switch (op) {
    case ArithOp::add:
      return a + b;
    case ArithOp::mul:
      return a * b;
    case ArithOp::inv:
      return a.inverse();
  }
  throw PreconditionFailed("unknown op");
}

Valuation valuation_of(const PAdicScalar& a) { return a.valuation(); }

int exp_truncation(Ctx ctx, long long w_x, long long target) {
  (void)ctx;
  if (w_x <= 1) throw DivergentSeries("exponential needs valuation > 1/(p-1)");
  long long k = 1;
  while (k * (w_x - 1) + 1 < target) ++k;
  return static_cast<int>(k);
}

int log_truncation(Ctx ctx, long long w_y, long long target) {
  if (w_y <= 0) throw DivergentSeries("logarithm needs valuation(x-1) > 0");
  double lp = std::log(static_cast<double>(ctx->p()));
  long long k = static_cast<long long>(std::ceil(ctx->e() / (static_cast<double>(w_y) * lp))) + 1;
  auto g = [&](long long kk) { return static_cast<double>(kk * w_y) - ctx->e() * std::log(static_cast<double>(kk)) / lp; };
  while (g(k) < static_cast<double>(target) + 1e-9) ++k;
  return static_cast<int>(k);
}

PAdicScalar padic_exp(const PAdicScalar& x) {
  Ctx ctx = x.ctx();
  if (x.is_exact_zero()) return PAdicScalar::one(ctx);
  if (x.w() <= 1) {
    if (x.is_zero()) throw PrecisionExhausted("cannot certify convergence of exp for " + x.str());
    throw DivergentSeries("exp diverges: valuation " + x.valuation().str() + " <= 1/(p-1)");
  }
  long long T = std::min(x.abs_precision(), ctx->max_rel());
  int K = exp_truncation(ctx, x.w(), T);
  PAdicScalar sum = PAdicScalar::one(ctx), term = PAdicScalar::one(ctx);
  for (int k = 1; k < K; ++k) {
    term = (term * x).div_int(k);
    sum += term;
  }
  return sum.cap_abs(T);
}

PAdicScalar padic_log(const PAdicScalar& x) {
  Ctx ctx = x.ctx();
  PAdicScalar y = x - PAdicScalar::one(ctx);
  if (y.is_exact_zero()) return PAdicScalar::zero(ctx);
  if (y.w() <= 0) {
    if (y.is_zero()) throw PrecisionExhausted("cannot certify convergence of log for " + x.str());
    throw DivergentSeries("log diverges: valuation(x-1) " + y.valuation().str() + " <= 0");
  }
  long long T = y.abs_precision();
  int K = log_truncation(ctx, y.w(), T);
  PAdicScalar sum = PAdicScalar::zero(ctx), pw = y;
  for (int k = 1; k < K; ++k) {
    PAdicScalar term = pw.div_int(k);
    sum = (k % 2) ? sum + term : sum - term;
    pw = pw * y;
  }
  return sum.cap_abs(T);
}

PAdicScalar random_scalar(Ctx ctx, std::mt19937_64& rng, long long min_w, long long spread) {
  long long w = min_w + static_cast<long long>(rng() % static_cast<unsigned long long>(spread + 1));
  Coeffs c{};
  long long M = ctx->pow(ctx->N());
  for (int k = 0; k < ctx->e(); ++k) c[k] = static_cast<long long>(rng() % static_cast<unsigned long long>(M));
  if (c[0] % ctx->p() == 0) c[0] += 1 + static_cast<long long>(rng() % static_cast<unsigned long long>(ctx->p() - 1));
  return PAdicScalar::from_unit(ctx, w, c, ctx->max_rel());
}

nlohmann::json scalar_to_json(const PAdicScalar& a) {
  nlohmann::json j;
  if (a.is_exact_zero()) {
    j["val"] = "inf";
    j["unit"] = nlohmann::json::array();
    j["prec"] = 0;
    return j;
  }
  Ctx ctx = a.ctx();
  j["val"] = rational_str(Rational(a.w(), ctx->e()));
  int g = a.guaranteed();
  j["prec"] = g;
  nlohmann::json unit = nlohmann::json::array();
  if (g > 0) {
    long long M = ctx->pow(g);
    for (int k = 0; k < ctx->e(); ++k) unit.push_back(std::to_string(a.unit()[k] % M));
  }
  j["unit"] = unit;
  return j;
}

PAdicScalar scalar_from_json(Ctx ctx, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("val") || !j.contains("unit") || !j.contains("prec"))
    throw InputError("scalar literal needs val, unit, prec: " + j.dump());
  std::string val = j.at("val").get<std::string>();
  if (val == "inf") return PAdicScalar::zero(ctx);
  Rational v = parse_rational(val);
  Rational wv = v * ctx->e();
  if (wv.denominator() != 1) throw InputError("valuation " + val + " outside (1/(p-1))Z");
  int g = j.at("prec").get<int>();
  if (g < 0) throw InputError("negative precision");
  g = std::min(g, ctx->N());
  if (g == 0) return PAdicScalar::zero_to(ctx, wv.numerator());
  const auto& unit = j.at("unit");
  if (!unit.is_array() || static_cast<int>(unit.size()) != ctx->e())
    throw InputError("unit part must have p-1 entries: " + j.dump());
  PAdicScalar::Coeffs c{};
  for (int k = 0; k < ctx->e(); ++k) {
    try {
      c[k] = std::stoll(unit[k].get<std::string>());
    } catch (const std::exception&) {
      throw InputError("unit coefficient is not a decimal string: " + unit[k].dump());
    }
  }
  if (md(c[0], ctx->p()) == 0) throw InputError("unit part has non-unit constant term");
  return PAdicScalar::from_unit(ctx, wv.numerator(), c, static_cast<long long>(g) * ctx->e());
}

}  // namespace prh
