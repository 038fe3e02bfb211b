#include "prh/series.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>

namespace prh {

// ---------------------------------------------------------------- Series

Series::Series(Ctx ctx, int n) : ctx_(ctx), c_(static_cast<size_t>(n), PAdicScalar::zero(ctx)) {}

Series Series::constant(Ctx ctx, int n, const PAdicScalar& c) {
  Series s(ctx, n);
  if (n > 0) s.c_[0] = c;
  return s;
}

static void check_series(const Series& a, const Series& b) {
  if (a.ctx() != b.ctx() || a.n() != b.n()) throw ConfigMismatch("series from different model rings");
}

Series Series::operator+(const Series& o) const {
  check_series(*this, o);
  Series r = *this;
  for (int k = 0; k < n(); ++k) r.c_[k] = c_[k] + o.c_[k];
  return r;
}

Series Series::operator-(const Series& o) const {
  check_series(*this, o);
  Series r = *this;
  for (int k = 0; k < n(); ++k) r.c_[k] = c_[k] - o.c_[k];
  return r;
}

Series Series::operator-() const {
  Series r = *this;
  for (auto& x : r.c_) x = -x;
  return r;
}

Series Series::operator*(const Series& o) const {
  check_series(*this, o);
  Series r(ctx_, n());
  for (int i = 0; i < n(); ++i) {
    if (c_[i].is_exact_zero()) continue;
    for (int j = 0; i + j < n(); ++j) {
      if (o.c_[j].is_exact_zero()) continue;
      r.c_[i + j] += c_[i] * o.c_[j];
    }
  }
  return r;
}

Series Series::scale(const PAdicScalar& s) const {
  Series r = *this;
  for (auto& x : r.c_) x = x * s;
  return r;
}

Series Series::mul_int(long long k) const { return scale(PAdicScalar::from_int(ctx_, k)); }

bool Series::is_zero() const {
  return std::all_of(c_.begin(), c_.end(), [](const PAdicScalar& x) { return x.is_zero(); });
}

int Series::t_order(long long* decided) const {
  for (int k = 0; k < n(); ++k) {
    if (!c_[k].is_zero()) return k;
    if (decided && !c_[k].is_exact_zero()) *decided = std::min(*decided, c_[k].abs_precision());
  }
  return n();
}

long long Series::gauss_w() const {
  long long w = kInfVal;
  for (const auto& x : c_) w = std::min(w, x.w());
  return w;
}

long long Series::abs_precision() const {
  long long w = kInfVal;
  for (const auto& x : c_) w = std::min(w, x.abs_precision());
  return w;
}

Series Series::inverse() const {
  if (n() == 0) return *this;
  if (c_[0].is_zero()) throw PrecisionExhausted("series with vanishing constant term is not a unit");
  Series b(ctx_, n());
  PAdicScalar b0 = c_[0].inverse();
  b.c_[0] = b0;
  for (int k = 1; k < n(); ++k) {
    PAdicScalar acc = PAdicScalar::zero(ctx_);
    for (int i = 1; i <= k; ++i) acc += c_[i] * b.c_[k - i];
    b.c_[k] = -(b0 * acc);
  }
  return b;
}

Series Series::shift_down(int k) const {
  Series r(ctx_, n());
  for (int i = k; i < n(); ++i) r.c_[i - k] = c_[i];
  return r;
}

Series Series::shift_up(int k) const {
  Series r(ctx_, n());
  for (int i = 0; i + k < n(); ++i) r.c_[i + k] = c_[i];
  return r;
}

Series Series::truncate(int m) const {
  Series r(ctx_, m);
  for (int i = 0; i < std::min(m, n()); ++i) r.c_[i] = c_[i];
  return r;
}

Series Series::cap_abs(long long abs_pi) const {
  Series r = *this;
  for (auto& x : r.c_) x = x.cap_abs(abs_pi);
  return r;
}

Series div_exact(const Series& b, const Series& a) {
  int k = a.t_order();
  if (k >= a.n()) throw PrecisionExhausted("division by a series that vanishes at precision");
  if (b.t_order() < k) throw PreconditionFailed("div_exact: numerator not divisible by t^k");
  Series q = b.shift_down(k) * a.shift_down(k).inverse();
  for (int i = a.n() - k; i < a.n(); ++i) q[i] = PAdicScalar::zero(a.ctx());
  return q;
}

// ---------------------------------------------------------------- ModelRing

ModelRing::ModelRing(Ctx ctx, int n) : ctx_(ctx), n_(n) {
  if (n < 1) throw ConfigMismatch("t_order must be >= 1");
  u_ = constant(PAdicScalar::pi(ctx));
  xi_ = t().scale(PAdicScalar::pi(ctx).inverse());
}

Series ModelRing::t() const {
  Series s(ctx_, n_);
  if (n_ > 1) s[1] = PAdicScalar::one(ctx_);
  return s;
}

const ModelRing* model_ring(Ctx ctx, int n) {
  static std::mutex mu;
  static std::map<std::pair<Ctx, int>, std::unique_ptr<ModelRing>> rings;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = rings[{ctx, n}];
  if (!slot) slot = std::make_unique<ModelRing>(ctx, n);
  return slot.get();
}

PAdicScalar ModelRing::rho() const { return PAdicScalar::rho(ctx_); }

Series ModelRing::gamma_constant() const { return u_ * constant(rho()); }

// ---------------------------------------------------------------- multi-indices

int degree(const MultiIndex& J) {
  int s = 0;
  for (int x : J) s += x;
  return s;
}

std::vector<MultiIndex> monomials_upto(int d, int D) {
  std::vector<MultiIndex> out;
  for (int deg = 0; deg <= D; ++deg) {
    MultiIndex J(static_cast<size_t>(d), 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == d - 1) {
        J[pos] = left;
        out.push_back(J);
        return;
      }
      for (int x = left; x >= 0; --x) {
        J[pos] = x;
        rec(pos + 1, left - x);
      }
    };
    if (d == 0) {
      if (deg == 0) out.push_back(J);
      continue;
    }
    rec(0, deg);
  }
  return out;
}

namespace {

long long binom_ll(int n, int k) {
  if (k < 0 || k > n) return 0;
  __int128 r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  if (r > static_cast<__int128>(LLONG_MAX)) throw SizeLimit("binomial coefficient overflow");
  return static_cast<long long>(r);
}

long long checked_mul(long long a, long long b) {
  __int128 r = static_cast<__int128>(a) * b;
  if (r > static_cast<__int128>(LLONG_MAX) || r < -static_cast<__int128>(LLONG_MAX))
    throw SizeLimit("integer structure constant overflow");
  return static_cast<long long>(r);
}

// (W^{[M]})^j / j! = coef * W^{[jM]}
long long gamma_monomial_coef(const MultiIndex& M, int j) {
  int i0 = -1;
  for (size_t i = 0; i < M.size(); ++i)
    if (M[i] > 0) {
      i0 = static_cast<int>(i);
      break;
    }
  if (i0 < 0) throw PreconditionFailed("divided power of a constant");
  long long c = 1;
  for (int l = 1; l <= j; ++l) c = checked_mul(c, binom_ll(l * M[i0] - 1, M[i0] - 1));
  for (size_t i = 0; i < M.size(); ++i) {
    if (static_cast<int>(i) == i0) continue;
    for (int l = 1; l <= j; ++l) c = checked_mul(c, binom_ll(l * M[i], M[i]));
  }
  return c;
}

void check_pd(const PDElement& a, const PDElement& b) {
  if (a.ring() != b.ring() || a.dim() != b.dim() || a.cap() != b.cap() || a.basis() != b.basis())
    throw ConfigMismatch("pd elements with mismatched ring, dimension, cap or basis");
}

int min_rel(int a, int b) { return std::min(a, b); }

}  // namespace

// ---------------------------------------------------------------- PDElement

PDElement::PDElement(const ModelRing* ring, int d, int D, PDBasis basis) : ring_(ring), d_(d), D_(D), basis_(basis) {
  if (d < 0 || D < 0) throw ConfigMismatch("negative dimension or cap");
}

PDElement PDElement::constant(const ModelRing* ring, int d, int D, const Series& c, PDBasis basis) {
  return monomial(ring, d, D, MultiIndex(static_cast<size_t>(d), 0), c, basis);
}

PDElement PDElement::variable(const ModelRing* ring, int d, int D, int i, PDBasis basis) {
  MultiIndex J(static_cast<size_t>(d), 0);
  J.at(static_cast<size_t>(i)) = 1;
  return monomial(ring, d, D, J, ring->one(), basis);
}

PDElement PDElement::monomial(const ModelRing* ring, int d, int D, const MultiIndex& J, const Series& c,
                              PDBasis basis) {
  PDElement e(ring, d, D, basis);
  e.add_term(J, c);
  return e;
}

Series PDElement::coeff(const MultiIndex& J) const {
  auto it = terms_.find(J);
  return it == terms_.end() ? ring_->zero() : it->second;
}

void PDElement::add_term(const MultiIndex& J, const Series& c) {
  if (static_cast<int>(J.size()) != d_) throw ConfigMismatch("multi-index of wrong length");
  if (degree(J) > D_) {
    reliable_ = std::min(reliable_, D_);
    return;
  }
  // inexact zeros are kept so their precision stays visible
  auto exact_zero = [](const Series& s) {
    for (int k = 0; k < s.n(); ++k)
      if (!s[k].is_exact_zero()) return false;
    return true;
  };
  auto it = terms_.find(J);
  if (it == terms_.end()) {
    if (!exact_zero(c)) terms_.emplace(J, c);
  } else {
    it->second += c;
    if (exact_zero(it->second)) terms_.erase(it);
  }
}

PDElement PDElement::operator+(const PDElement& o) const {
  check_pd(*this, o);
  PDElement r = *this;
  for (const auto& [J, c] : o.terms_) r.add_term(J, c);
  r.reliable_ = min_rel(reliable_, o.reliable_);
  return r;
}

PDElement PDElement::operator-() const {
  PDElement r = *this;
  for (auto& [J, c] : r.terms_) c = -c;
  return r;
}

PDElement PDElement::operator-(const PDElement& o) const { return *this + (-o); }

PDElement PDElement::scale(const Series& s) const {
  PDElement r(ring_, d_, D_, basis_);
  r.reliable_ = reliable_;
  for (const auto& [J, c] : terms_) r.add_term(J, c * s);
  return r;
}

bool PDElement::is_zero() const {
  for (const auto& [J, c] : terms_)
    if (degree(J) <= reliable_ && !c.is_zero()) return false;
  return true;
}

bool PDElement::equals(const PDElement& o) const {
  PDElement diff = *this - o;
  return diff.is_zero();
}

int PDElement::max_degree() const {
  int m = -1;
  for (const auto& [J, c] : terms_)
    if (!c.is_zero()) m = std::max(m, degree(J));
  return m;
}

PDElement pd_multiply(const PDElement& a, const PDElement& b) {
  check_pd(a, b);
  PDElement r(a.ring(), a.dim(), a.cap(), a.basis());
  r.set_reliable(min_rel(a.reliable(), b.reliable()));
  for (const auto& [J, x] : a.terms()) {
    for (const auto& [K, y] : b.terms()) {
      MultiIndex L(J.size());
      long long coef = 1;
      for (size_t i = 0; i < J.size(); ++i) {
        L[i] = J[i] + K[i];
        if (a.basis() == PDBasis::divided) coef = checked_mul(coef, binom_ll(L[i], J[i]));
      }
      if (degree(L) > a.cap()) {
        r.set_reliable(std::min(r.reliable(), a.cap()));
        continue;
      }
      r.add_term(L, (x * y).mul_int(coef));
    }
  }
  return r;
}

PDElement pd_gamma(const PDElement& x, int k) {
  if (x.basis() != PDBasis::divided) throw PreconditionFailed("divided powers need the divided basis");
  const ModelRing* R = x.ring();
  MultiIndex zero(static_cast<size_t>(x.dim()), 0);
  if (!x.coeff(zero).is_zero()) throw PreconditionFailed("divided power of an element with nonzero constant term");
  std::vector<PDElement> g(static_cast<size_t>(k + 1), PDElement(R, x.dim(), x.cap()));
  g[0] = PDElement::constant(R, x.dim(), x.cap(), R->one());
  for (auto& gi : g) gi.set_reliable(x.reliable());
  for (const auto& [M, c] : x.terms()) {
    if (degree(M) == 0) continue;
    std::vector<PDElement> gy(static_cast<size_t>(k + 1), PDElement(R, x.dim(), x.cap()));
    Series cj = R->one();
    for (int j = 0; j <= k; ++j) {
      if (j == 0) {
        gy[0] = PDElement::constant(R, x.dim(), x.cap(), R->one());
      } else {
        cj = cj * c;
        MultiIndex L(M.size());
        for (size_t i = 0; i < M.size(); ++i) L[i] = j * M[i];
        if (degree(L) > x.cap()) {
          gy[j].set_reliable(x.cap());
        } else {
          gy[j].add_term(L, cj.mul_int(gamma_monomial_coef(M, j)));
        }
      }
    }
    std::vector<PDElement> ng(static_cast<size_t>(k + 1), PDElement(R, x.dim(), x.cap()));
    for (int j = 0; j <= k; ++j) {
      ng[j].set_reliable(x.reliable());
      for (int i = 0; i <= j; ++i) ng[j] = ng[j] + pd_multiply(g[i], gy[j - i]);
    }
    g = std::move(ng);
  }
  return g[k];
}

PDElement partial(const PDElement& a, int i) {
  PDElement r(a.ring(), a.dim(), a.cap(), a.basis());
  r.set_reliable(a.reliable() == kExactDegree ? kExactDegree : a.reliable() - 1);
  for (const auto& [J, c] : a.terms()) {
    if (J[i] == 0) continue;
    MultiIndex K = J;
    K[i] -= 1;
    r.add_term(K, a.basis() == PDBasis::divided ? c : c.mul_int(J[i]));
  }
  return r;
}

Form pd_connection(const PDElement& a) {
  Form f;
  Series mu = -a.ring()->u();
  for (int i = 0; i < a.dim(); ++i) f.comps.push_back(partial(a, i).scale(mu));
  return f;
}

Form pd_connection_U(const PDElement& a) {
  Form f;
  const ModelRing* R = a.ring();
  for (int i = 0; i < a.dim(); ++i) {
    PDElement coef = PDElement::constant(R, a.dim(), a.cap(), R->u(), a.basis()) +
                     PDElement::variable(R, a.dim(), a.cap(), i, a.basis()).scale(R->xi());
    PDElement di = partial(a, i);
    PDElement c = pd_multiply(coef, di);
    c.set_reliable(di.reliable());
    f.comps.push_back(c);
  }
  return f;
}

PDElement coordinate_change_UW(const PDElement& a, CoordDirection dir) {
  if (a.basis() != PDBasis::divided) throw PreconditionFailed("coordinate change acts on the divided basis");
  const ModelRing* R = a.ring();
  int d = a.dim(), D = a.cap();
  // s = xi_K / u
  Series s = R->xi() * R->u().inverse();
  std::vector<std::vector<PDElement>> gam(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    PDElement y(R, d, D);
    Series sp = R->one();  // (-s)^{m-1}
    long long fact = 1;    // (m-1)!
    bool overflow = false;
    for (int m = 1; m <= D; ++m) {
      if (m > 1) {
        sp = sp * (-s);
        fact = checked_mul(fact, m - 1);
      }
      if (sp.is_zero()) break;
      MultiIndex J(static_cast<size_t>(d), 0);
      J[i] = m;
      Series c = -(dir == CoordDirection::U_to_W ? sp : sp.mul_int(fact));
      y.add_term(J, c);
      if (m == D) overflow = true;
    }
    if (overflow && !(sp * (-s)).is_zero()) y.set_reliable(D);
    for (int j = 0; j <= D; ++j) gam[i].push_back(pd_gamma(y, j));
  }
  PDElement out(R, d, D);
  out.set_reliable(a.reliable());
  for (const auto& [J, c] : a.terms()) {
    PDElement term = PDElement::constant(R, d, D, c);
    for (int i = 0; i < d; ++i)
      if (J[i] > 0) term = pd_multiply(term, gam[i][J[i]]);
    out = out + term;
  }
  return out;
}

PDElement eliminate_w0(const PDElement& a, RelationKind kind, int r) {
  const ModelRing* R = a.ring();
  int d = a.dim() - 1, D = a.cap();
  if (d < 0) throw ConfigMismatch("eliminate_w0 needs coordinates W_0..W_d");
  if (r < 0 || r > d) throw ConfigMismatch("relation length r exceeds d");
  bool linear = kind == RelationKind::linear;
  if (linear != (a.basis() == PDBasis::divided))
    throw PreconditionFailed("relation type must match the coordinate system");
  PDBasis basis = a.basis();
  // image of the eliminated coordinate
  PDElement y(R, d, D, basis);
  if (linear) {
    for (int i = 0; i < r; ++i) y = y - PDElement::variable(R, d, D, i, basis);
  } else {
    PDElement prod = PDElement::constant(R, d, D, R->one(), basis);
    for (int i = 0; i < r; ++i) {
      PDElement inv(R, d, D, basis);
      for (int k = 0; k <= D; ++k) {
        MultiIndex J(static_cast<size_t>(d), 0);
        J[i] = k;
        inv.add_term(J, R->from_int(k % 2 ? -1 : 1));
      }
      inv.set_reliable(D);
      prod = pd_multiply(prod, inv);
    }
    y = prod - PDElement::constant(R, d, D, R->one(), basis);
  }
  std::vector<PDElement> powers;
  powers.push_back(PDElement::constant(R, d, D, R->one(), basis));
  for (int m = 1; m <= D; ++m) {
    if (linear)
      powers.push_back(pd_gamma(y, m));
    else
      powers.push_back(pd_multiply(powers.back(), y));
  }
  PDElement out(R, d, D, basis);
  out.set_reliable(std::min(a.reliable(), y.reliable()));
  for (const auto& [J, c] : a.terms()) {
    MultiIndex rest(J.begin() + 1, J.end());
    PDElement term = PDElement::monomial(R, d, D, rest, c, basis);
    out = out + pd_multiply(term, powers[J[0]]);
  }
  return out;
}

PDElement gamma_shift(const PDElement& a, int i, long long exponent) {
  const ModelRing* R = a.ring();
  if (i < 0 || i >= a.dim()) throw ConfigMismatch("gamma_shift direction out of range");
  Series c = R->gamma_constant().mul_int(exponent);
  std::vector<Series> ck;  // c^k / k! (divided) or c^k (ordinary)
  ck.push_back(R->one());
  for (int k = 1; k <= a.cap(); ++k) {
    Series next = ck.back() * c;
    if (a.basis() == PDBasis::divided) next = next.scale(PAdicScalar::from_int(R->ctx(), k).inverse());
    ck.push_back(next);
  }
  PDElement out(R, a.dim(), a.cap(), a.basis());
  out.set_reliable(a.reliable() == kExactDegree ? kExactDegree : -1);
  for (const auto& [J, x] : a.terms()) {
    for (int k = 0; k <= J[i]; ++k) {
      MultiIndex K = J;
      K[i] -= k;
      Series coef = x * ck[k];
      if (a.basis() == PDBasis::ordinary) coef = coef.mul_int(binom_ll(J[i], k));
      out.add_term(K, coef);
    }
  }
  return out;
}

// ---------------------------------------------------------------- JSON

nlohmann::json series_to_json(const Series& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (int k = 0; k < s.n(); ++k) arr.push_back(scalar_to_json(s[k]));
  return arr;
}

Series series_from_json(Ctx ctx, int n, const nlohmann::json& j) {
  if (!j.is_array() || static_cast<int>(j.size()) > n) throw InputError("series must be an array of <= n scalars");
  Series s(ctx, n);
  for (size_t k = 0; k < j.size(); ++k) s[static_cast<int>(k)] = scalar_from_json(ctx, j[k]);
  return s;
}

static std::string index_key(const MultiIndex& J) {
  std::string s = "[";
  for (size_t i = 0; i < J.size(); ++i) s += (i ? "," : "") + std::to_string(J[i]);
  return s + "]";
}

nlohmann::json pd_to_json(const PDElement& a) {
  nlohmann::json j;
  j["dim"] = a.dim();
  j["cap"] = a.cap();
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [J, c] : a.terms()) terms[index_key(J)] = series_to_json(c);
  j["terms"] = terms;
  return j;
}

PDElement pd_from_json(const ModelRing* ring, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("cap") || !j.contains("terms"))
    throw InputError("pd element needs dim, cap, terms");
  int d = j.at("dim").get<int>(), D = j.at("cap").get<int>();
  PDElement a(ring, d, D);
  for (const auto& [key, val] : j.at("terms").items()) {
    nlohmann::json idx;
    try {
      idx = nlohmann::json::parse(key);
    } catch (const std::exception&) {
      throw InputError("malformed multi-index key " + key);
    }
    MultiIndex J = idx.get<MultiIndex>();
    a.add_term(J, series_from_json(ring->ctx(), ring->n(), val));
  }
  return a;
}

}  // namespace prh
