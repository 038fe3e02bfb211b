#include "prh/wittlab.hpp"

#include <algorithm>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

namespace prh {

namespace {

mpz_class mod_p(const mpz_class& c, int p) {
  mpz_class r = c % p;
  if (r < 0) r += p;
  return r;
}

bool irreducible_mod_p(const std::vector<long long>& f, int p) {
  // trial division by every monic polynomial of degree 1..deg/2
  int k = static_cast<int>(f.size()) - 1;
  for (int d = 1; d <= k / 2; ++d) {
    long long count = 1;
    for (int i = 0; i < d; ++i) count *= p;
    for (long long code = 0; code < count; ++code) {
      std::vector<long long> g(static_cast<size_t>(d + 1), 0);
      long long c = code;
      for (int i = 0; i < d; ++i) {
        g[i] = c % p;
        c /= p;
      }
      g[d] = 1;
      std::vector<long long> r = f;
      for (int top = k; top >= d; --top) {
        long long q = ((r[top] % p) + p) % p;
        if (!q) continue;
        for (int i = 0; i <= d; ++i) r[top - d + i] = ((r[top - d + i] - q * g[i]) % p + p) % p;
      }
      bool zero = true;
      for (int i = 0; i < d; ++i)
        if (r[i] % p) zero = false;
      if (zero) return false;
    }
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- bases

PerfectBase PerfectBase::finite_field(int p, int k) {
  if (p < 2 || k < 1) throw ConfigMismatch("finite field needs p >= 2 and k >= 1");
  PerfectBase b;
  b.p_ = p;
  b.kind_ = BaseKind::finite_field;
  b.k_ = k;
  b.vars_ = {"a"};
  long long count = 1;
  for (int i = 0; i < k; ++i) count *= p;
  for (long long code = 0; code < count; ++code) {
    std::vector<long long> f(static_cast<size_t>(k + 1), 0);
    long long c = code;
    for (int i = 0; i < k; ++i) {
      f[i] = c % p;
      c /= p;
    }
    f[k] = 1;
    if (k == 1 && f[0] == 0) continue;
    if (irreducible_mod_p(f, p)) {
      b.f_ = f;
      return b;
    }
  }
  throw PreconditionFailed("no irreducible polynomial found");
}

PerfectBase PerfectBase::perfect_monomial(int p, std::vector<std::string> vars, int max_den_exp) {
  if (p < 2 || max_den_exp < 0 || vars.empty()) throw ConfigMismatch("monomial base needs p >= 2 and variables");
  PerfectBase b;
  b.p_ = p;
  b.kind_ = BaseKind::perfect_monomial;
  b.e_ = max_den_exp;
  b.vars_ = std::move(vars);
  for (int i = 0; i < max_den_exp; ++i) b.scale_ *= p;
  return b;
}

PerfectBase PerfectBase::lift() const {
  if (kind_ != BaseKind::perfect_monomial) throw ConfigMismatch("only monomial bases have a characteristic-0 lift");
  PerfectBase b = *this;
  b.lifted_ = true;
  return b;
}

PerfectBase PerfectBase::reduction() const {
  PerfectBase b = *this;
  b.lifted_ = false;
  return b;
}

bool PerfectBase::same(const PerfectBase& o) const {
  return p_ == o.p_ && kind_ == o.kind_ && lifted_ == o.lifted_ && e_ == o.e_ && k_ == o.k_ && vars_ == o.vars_ &&
         f_ == o.f_;
}

BaseElem PerfectBase::from_int(long long n) const {
  BaseElem a;
  std::vector<long long> key(kind_ == BaseKind::finite_field ? 1 : vars_.size(), 0);
  a.terms[key] = static_cast<long>(n);
  return reduce(a);
}

BaseElem PerfectBase::variable(int i) const {
  BaseElem a;
  if (kind_ == BaseKind::finite_field) {
    a.terms[{1}] = 1;
  } else {
    if (i < 0 || i >= static_cast<int>(vars_.size())) throw ConfigMismatch("no such variable");
    std::vector<long long> key(vars_.size(), 0);
    key[i] = scale_;
    a.terms[key] = 1;
  }
  return reduce(a);
}

BaseElem PerfectBase::reduce(BaseElem a) const {
  if (kind_ == BaseKind::finite_field) {
    // alpha^k = -(f_0 + ... + f_{k-1} alpha^{k-1})
    while (!a.terms.empty()) {
      auto it = std::prev(a.terms.end());
      long long j = it->first[0];
      if (j < k_) break;
      mpz_class c = it->second;
      a.terms.erase(it);
      for (int i = 0; i < k_; ++i)
        if (f_[i]) a.terms[{j - k_ + i}] -= c * static_cast<long>(f_[i]);
    }
  }
  for (auto it = a.terms.begin(); it != a.terms.end();) {
    if (!lifted_) it->second = mod_p(it->second, p_);
    if (it->second == 0)
      it = a.terms.erase(it);
    else
      ++it;
  }
  return a;
}

BaseElem PerfectBase::add(const BaseElem& a, const BaseElem& b) const {
  BaseElem c = a;
  for (const auto& [k, v] : b.terms) c.terms[k] += v;
  return reduce(c);
}

BaseElem PerfectBase::neg(const BaseElem& a) const {
  BaseElem c = a;
  for (auto& [k, v] : c.terms) v = -v;
  return reduce(c);
}

BaseElem PerfectBase::sub(const BaseElem& a, const BaseElem& b) const { return add(a, neg(b)); }

BaseElem PerfectBase::scale(const BaseElem& a, const mpz_class& s) const {
  BaseElem c = a;
  for (auto& [k, v] : c.terms) v *= s;
  return reduce(c);
}

BaseElem PerfectBase::mul(const BaseElem& a, const BaseElem& b) const {
  BaseElem c;
  for (const auto& [ka, va] : a.terms)
    for (const auto& [kb, vb] : b.terms) {
      std::vector<long long> k(ka.size());
      for (size_t i = 0; i < k.size(); ++i) k[i] = ka[i] + kb[i];
      c.terms[k] += va * vb;
    }
  return reduce(c);
}

BaseElem PerfectBase::pow(const BaseElem& a, unsigned long k) const {
  BaseElem r = one(), b = a;
  while (k) {
    if (k & 1) r = mul(r, b);
    k >>= 1;
    if (k) b = mul(b, b);
  }
  return r;
}

BaseElem PerfectBase::frob(const BaseElem& a) const {
  if (lifted_) throw ConfigMismatch("Frobenius x -> x^p is a ring map only in characteristic p");
  if (kind_ == BaseKind::finite_field) return pow(a, static_cast<unsigned long>(p_));
  BaseElem c;
  for (const auto& [k, v] : a.terms) {
    std::vector<long long> kk = k;
    for (auto& x : kk) x *= p_;
    c.terms[kk] = v;
  }
  return reduce(c);
}

BaseElem PerfectBase::root(const BaseElem& a) const {
  if (lifted_) throw ConfigMismatch("p-th roots are taken in characteristic p");
  if (kind_ == BaseKind::finite_field) {
    unsigned long e = 1;
    for (int i = 1; i < k_; ++i) e *= static_cast<unsigned long>(p_);
    return k_ == 1 ? a : pow(a, e);
  }
  BaseElem c;
  for (const auto& [k, v] : a.terms) {
    std::vector<long long> kk = k;
    for (auto& x : kk) {
      if (x % p_) throw ConfigMismatch("p-th root needs a larger denominator exponent");
      x /= p_;
    }
    c.terms[kk] = v;
  }
  return reduce(c);
}

std::string PerfectBase::str(const BaseElem& a) const {
  if (a.terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto it = a.terms.rbegin(); it != a.terms.rend(); ++it) {
    const auto& [k, v] = *it;
    if (!first) os << " + ";
    first = false;
    std::vector<std::string> factors;
    if (kind_ == BaseKind::finite_field) {
      if (k[0] == 1) factors.push_back("a");
      else if (k[0] > 1) factors.push_back("a^" + std::to_string(k[0]));
    } else {
      for (size_t i = 0; i < k.size(); ++i) {
        if (!k[i]) continue;
        long long num = k[i], den = scale_;
        long long g = std::gcd(num, den);
        num /= g;
        den /= g;
        if (num == 1 && den == 1) factors.push_back(vars_[i]);
        else if (den == 1) factors.push_back(vars_[i] + "^" + std::to_string(num));
        else factors.push_back(vars_[i] + "^(" + std::to_string(num) + "/" + std::to_string(den) + ")");
      }
    }
    if (factors.empty() || v != 1) factors.insert(factors.begin(), v.get_str());
    for (size_t i = 0; i < factors.size(); ++i) os << (i ? "*" : "") << factors[i];
  }
  return os.str();
}

BaseElem PerfectBase::random(std::mt19937_64& rng, int terms, int max_num) const {
  BaseElem a;
  if (kind_ == BaseKind::finite_field) {
    for (int j = 0; j < k_; ++j) a.terms[{j}] = static_cast<long>(rng() % static_cast<unsigned>(p_));
    return reduce(a);
  }
  for (int t = 0; t < terms; ++t) {
    std::vector<long long> key(vars_.size());
    for (auto& x : key) x = static_cast<long long>(rng() % static_cast<unsigned long long>(max_num * scale_ + 1));
    a.terms[key] += static_cast<long>(1 + rng() % static_cast<unsigned>(p_ - 1 > 0 ? p_ - 1 : 1));
  }
  return reduce(a);
}

// ---------------------------------------------------------------- universal polynomials

namespace {

constexpr int kVars = 2 * kMaxWittLength;
constexpr size_t kTermLimit = 400000;

using QPoly = std::map<std::vector<int>, mpq_class>;

QPoly q_add(const QPoly& a, const QPoly& b, const mpq_class& fb = 1) {
  QPoly c = a;
  for (const auto& [k, v] : b) {
    mpq_class& x = c[k];
    x += fb * v;
    if (x == 0) c.erase(k);
  }
  return c;
}

QPoly q_mul(const QPoly& a, const QPoly& b) {
  QPoly c;
  for (const auto& [ka, va] : a)
    for (const auto& [kb, vb] : b) {
      std::vector<int> k(kVars);
      for (int i = 0; i < kVars; ++i) k[i] = ka[i] + kb[i];
      c[k] += va * vb;
    }
  for (auto it = c.begin(); it != c.end();)
    it = it->second == 0 ? c.erase(it) : std::next(it);
  if (c.size() > kTermLimit) throw SizeLimit("universal Witt polynomial exceeds the term limit");
  return c;
}

QPoly q_pow(const QPoly& a, long long k) {
  QPoly r{{std::vector<int>(kVars, 0), 1}}, b = a;
  while (k) {
    if (k & 1) r = q_mul(r, b);
    k >>= 1;
    if (k) b = q_mul(b, b);
  }
  return r;
}

QPoly q_var(int i, long long e = 1) {
  std::vector<int> k(kVars, 0);
  k[i] = static_cast<int>(e);
  return {{k, 1}};
}

long ipow(long b, int e) {
  long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

QPoly ghost_poly(int p, int n, int offset) {
  QPoly w;
  for (int i = 0; i <= n; ++i) w = q_add(w, q_var(offset + i, ipow(p, n - i)), mpq_class(ipow(p, i)));
  return w;
}

struct Cache {
  std::mutex mu;
  std::map<std::pair<int, int>, std::vector<IntPoly>> polys;
  std::map<std::pair<int, int>, std::vector<QPoly>> rational;
};

Cache& cache() {
  static Cache c;
  return c;
}

}  // namespace

const std::vector<IntPoly>& universal_polynomials(int p, int m, WittOp op) {
  if (m > kMaxWittLength) throw SizeLimit("Witt length is capped at 4");
  Cache& c = cache();
  std::lock_guard<std::mutex> lock(c.mu);
  auto key = std::make_pair(p, static_cast<int>(op));
  auto& ints = c.polys[key];
  auto& rats = c.rational[key];
  while (static_cast<int>(rats.size()) < m) {
    int n = static_cast<int>(rats.size());
    QPoly target;
    if (op == WittOp::sum) target = q_add(ghost_poly(p, n, 0), ghost_poly(p, n, kMaxWittLength));
    else if (op == WittOp::product) target = q_mul(ghost_poly(p, n, 0), ghost_poly(p, n, kMaxWittLength));
    else target = q_add(QPoly{}, ghost_poly(p, n, 0), -1);
    for (int i = 0; i < n; ++i) target = q_add(target, q_pow(rats[i], ipow(p, n - i)), -mpq_class(ipow(p, i)));
    mpq_class inv(1, ipow(p, n));
    for (auto& [k, v] : target) v *= inv;
    IntPoly ip;
    for (const auto& [k, v] : target) {
      if (v.get_den() != 1) throw PreconditionFailed("universal Witt polynomial is not integral");
      ip[k] = v.get_num();
    }
    rats.push_back(std::move(target));
    ints.push_back(std::move(ip));
  }
  return ints;
}

// ---------------------------------------------------------------- Witt vectors

WittVector::WittVector(const PerfectBase& base, std::vector<BaseElem> comps) : base_(base), c_(std::move(comps)) {
  if (c_.empty()) throw ConfigMismatch("Witt vectors need length >= 1");
  if (length() > kMaxWittLength) throw SizeLimit("Witt length is capped at 4");
  for (auto& x : c_) x = base_.reduce(x);
}

bool WittVector::equals(const WittVector& o) const {
  if (!base_.same(o.base_) || length() != o.length()) return false;
  for (int i = 0; i < length(); ++i)
    if (!base_.equals(c_[i], o.c_[i])) return false;
  return true;
}

WittVector teichmueller(const PerfectBase& base, const BaseElem& x, int m) {
  std::vector<BaseElem> c(static_cast<size_t>(std::max(m, 1)), base.zero());
  c[0] = x;
  return WittVector(base, c);
}

WittVector witt_zero(const PerfectBase& base, int m) { return teichmueller(base, base.zero(), m); }

namespace {

void check_compatible(const WittVector& a, const WittVector& b) {
  if (!a.base().same(b.base())) throw ConfigMismatch("Witt vectors over different bases");
  if (a.length() != b.length()) throw ConfigMismatch("Witt vectors of different lengths");
}

// evaluate universal polynomials at X = a, Y = b
WittVector evaluate(const std::vector<IntPoly>& polys, const WittVector& a, const WittVector* b) {
  const PerfectBase& B = a.base();
  int m = a.length();
  std::map<std::pair<int, int>, BaseElem> powers;
  auto power = [&](int var, int e) -> const BaseElem& {
    auto key = std::make_pair(var, e);
    auto it = powers.find(key);
    if (it != powers.end()) return it->second;
    const BaseElem& x = var < kMaxWittLength ? a[var] : (*b)[var - kMaxWittLength];
    return powers.emplace(key, B.pow(x, static_cast<unsigned long>(e))).first->second;
  };
  std::vector<BaseElem> out;
  for (int n = 0; n < m; ++n) {
    BaseElem acc;
    for (const auto& [k, c] : polys[n]) {
      mpz_class coef = B.lifted() ? c : mod_p(c, B.p());
      if (coef == 0) continue;
      BaseElem term = B.from_int(1);
      term.terms.begin()->second = coef;
      for (int v = 0; v < kVars; ++v)
        if (k[v]) term = B.mul(term, power(v, k[v]));
      for (const auto& [tk, tv] : term.terms) acc.terms[tk] += tv;
    }
    out.push_back(B.reduce(acc));
  }
  return WittVector(B, out);
}

}  // namespace

WittVector witt_sum(const WittVector& a, const WittVector& b) {
  check_compatible(a, b);
  return evaluate(universal_polynomials(a.base().p(), a.length(), WittOp::sum), a, &b);
}

WittVector witt_product(const WittVector& a, const WittVector& b) {
  check_compatible(a, b);
  return evaluate(universal_polynomials(a.base().p(), a.length(), WittOp::product), a, &b);
}

WittVector witt_neg(const WittVector& a) {
  return evaluate(universal_polynomials(a.base().p(), a.length(), WittOp::negation), a, nullptr);
}

WittVector witt_sub(const WittVector& a, const WittVector& b) { return witt_sum(a, witt_neg(b)); }

WittVector witt_from_int(const PerfectBase& base, int m, long long n) {
  WittVector one = teichmueller(base, base.one(), m), acc = witt_zero(base, m);
  unsigned long long k = static_cast<unsigned long long>(n < 0 ? -n : n);
  WittVector pw = one;
  while (k) {
    if (k & 1) acc = witt_sum(acc, pw);
    k >>= 1;
    if (k) pw = witt_sum(pw, pw);
  }
  return n < 0 ? witt_neg(acc) : acc;
}

WittVector frobenius_shift(const WittVector& a, Shift which) {
  const PerfectBase& B = a.base();
  std::vector<BaseElem> c;
  if (which == Shift::phi) {
    for (const auto& x : a.components()) c.push_back(B.frob(x));
  } else {
    c.push_back(B.zero());
    for (int i = 0; i + 1 < a.length(); ++i) c.push_back(a[i]);
  }
  return WittVector(B, c);
}

std::vector<BaseElem> ghost(const WittVector& a) {
  const PerfectBase& B = a.base();
  if (!B.lifted()) throw ConfigMismatch("ghost components need a characteristic-0 lift");
  std::vector<BaseElem> w;
  for (int j = 0; j < a.length(); ++j) {
    BaseElem acc;
    mpz_class pi = 1;
    for (int i = 0; i <= j; ++i) {
      unsigned long e = 1;
      for (int s = 0; s < j - i; ++s) e *= static_cast<unsigned long>(B.p());
      acc = B.add(acc, B.scale(B.pow(a[i], e), pi));
      pi *= B.p();
    }
    w.push_back(acc);
  }
  return w;
}

// ---------------------------------------------------------------- Teichmueller differences

TeichDifference teich_difference_expansion(const PerfectBase& base0, int m) {
  if (base0.kind() != BaseKind::perfect_monomial || base0.variables().size() < 2)
    throw ConfigMismatch("need a monomial base in two variables X, Y");
  if (base0.den_exp() < m - 1) throw ConfigMismatch("denominator exponent must be at least m - 1");
  PerfectBase B = base0.reduction();
  int p = B.p();
  WittVector d = witt_sub(teichmueller(B, B.variable(0), m), teichmueller(B, B.variable(1), m));
  long long scale = 1;
  for (int i = 0; i < B.den_exp(); ++i) scale *= p;
  TeichDifference out;
  long long pn = 1;
  for (int n = 0; n < m; ++n, pn *= p) {
    BaseElem P = d[n];
    for (int i = 0; i < n; ++i) P = B.root(P);
    out.P.push_back(P);
    // divide by u - v in F_p[u, v], u = X^{1/p^n}, v = Y^{1/p^n}
    std::map<std::pair<long long, long long>, mpz_class> rem, quo;
    for (const auto& [k, c] : P.terms) {
      for (size_t i = 2; i < k.size(); ++i)
        if (k[i]) throw PreconditionFailed("unexpected variable in the Teichmueller difference");
      if ((k[0] * pn) % scale || (k[1] * pn) % scale) throw PreconditionFailed("exponent outside 1/p^n Z");
      rem[{k[0] * pn / scale, k[1] * pn / scale}] = c;
    }
    while (!rem.empty()) {
      auto it = std::prev(rem.end());
      if (it->first.first == 0) break;
      auto [a, b] = it->first;
      mpz_class c = it->second;
      rem.erase(it);
      quo[{a - 1, b}] = mod_p(quo[{a - 1, b}] + c, p);
      mpz_class& nxt = rem[{a - 1, b + 1}];
      nxt = mod_p(nxt + c, p);
      if (nxt == 0) rem.erase({a - 1, b + 1});
    }
    bool divisible = true;
    for (const auto& [k, c] : rem)
      if (mod_p(c, p) != 0) divisible = false;
    out.divisible.push_back(divisible);
    BaseElem q;
    for (const auto& [k, c] : quo) {
      if (c == 0) continue;
      std::vector<long long> key(B.variables().size(), 0);
      key[0] = k.first * scale / pn;
      key[1] = k.second * scale / pn;
      q.terms[key] = c;
    }
    out.quotients.push_back(B.reduce(q));
  }
  return out;
}

nlohmann::json witt_to_json(const WittVector& a) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& x : a.components()) comps.push_back(a.base().str(x));
  return {{"p", a.base().p()}, {"length", a.length()}, {"components", comps}};
}

}  // namespace prh
