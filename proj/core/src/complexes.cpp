#include "prh/complexes.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <tuple>

namespace prh {

// ---------------------------------------------------------------- SeriesMatrix

SeriesMatrix::SeriesMatrix(const ModelRing* ring, int rows, int cols)
    : ring_(ring), rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, ring->zero()) {}

SeriesMatrix SeriesMatrix::identity(const ModelRing* ring, int r) {
  SeriesMatrix m(ring, r, r);
  for (int i = 0; i < r; ++i) m.at(i, i) = ring->one();
  return m;
}

static void check_shape(const SeriesMatrix& a, const SeriesMatrix& b, bool mult) {
  if (a.ring() != b.ring()) throw ConfigMismatch("matrices over different model rings");
  if (mult ? a.cols() != b.rows() : (a.rows() != b.rows() || a.cols() != b.cols()))
    throw ConfigMismatch("matrix shape mismatch");
}

SeriesMatrix SeriesMatrix::operator+(const SeriesMatrix& o) const {
  check_shape(*this, o, false);
  SeriesMatrix r = *this;
  for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] + o.a_[k];
  return r;
}

SeriesMatrix SeriesMatrix::operator-(const SeriesMatrix& o) const {
  check_shape(*this, o, false);
  SeriesMatrix r = *this;
  for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] - o.a_[k];
  return r;
}

SeriesMatrix SeriesMatrix::operator*(const SeriesMatrix& o) const {
  check_shape(*this, o, true);
  SeriesMatrix r(ring_, rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const Series& x = at(i, k);
      if (x.is_zero() && x.abs_precision() >= kInfVal) continue;
      for (int j = 0; j < o.cols_; ++j) r.at(i, j) += x * o.at(k, j);
    }
  return r;
}

SeriesMatrix SeriesMatrix::scale(const Series& s) const {
  SeriesMatrix r = *this;
  for (auto& x : r.a_) x = x * s;
  return r;
}

SeriesMatrix SeriesMatrix::transpose() const {
  SeriesMatrix r(ring_, cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
  return r;
}

SeriesMatrix SeriesMatrix::inverse() const {
  if (rows_ != cols_) throw ConfigMismatch("inverse of a non-square matrix");
  int r = rows_;
  SeriesMatrix a = *this, inv = identity(ring_, r);
  for (int c = 0; c < r; ++c) {
    int best = -1;
    long long bw = kInfVal;
    for (int i = c; i < r; ++i) {
      const Series& s = a.at(i, c);
      if (s.t_order() == 0 && s[0].w() < bw) {
        bw = s[0].w();
        best = i;
      }
    }
    if (best < 0) throw PreconditionFailed("matrix is not invertible over B_n");
    for (int j = 0; j < r; ++j) {
      std::swap(a.at(c, j), a.at(best, j));
      std::swap(inv.at(c, j), inv.at(best, j));
    }
    Series pinv = a.at(c, c).inverse();
    for (int j = 0; j < r; ++j) {
      a.at(c, j) = a.at(c, j) * pinv;
      inv.at(c, j) = inv.at(c, j) * pinv;
    }
    for (int i = 0; i < r; ++i) {
      if (i == c) continue;
      Series f = a.at(i, c);
      if (f.is_zero()) continue;
      for (int j = 0; j < r; ++j) {
        a.at(i, j) -= f * a.at(c, j);
        inv.at(i, j) -= f * inv.at(c, j);
      }
    }
  }
  return inv;
}

SeriesMatrix SeriesMatrix::truncate(const ModelRing* smaller) const {
  SeriesMatrix r(smaller, rows_, cols_);
  for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k].truncate(smaller->n());
  return r;
}

SeriesMatrix SeriesMatrix::cap_abs(long long abs_pi) const {
  SeriesMatrix r = *this;
  for (auto& x : r.a_) x = x.cap_abs(abs_pi);
  return r;
}

bool SeriesMatrix::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](const Series& s) { return s.is_zero(); });
}

long long SeriesMatrix::gauss_w() const {
  long long w = kInfVal;
  for (const auto& s : a_) w = std::min(w, s.gauss_w());
  return w;
}

long long SeriesMatrix::abs_precision() const {
  long long w = kInfVal;
  for (const auto& s : a_) w = std::min(w, s.abs_precision());
  return w;
}

// ---------------------------------------------------------------- sparse helpers

namespace {

bool exact_zero(const Series& s) {
  for (int k = 0; k < s.n(); ++k)
    if (!s[k].is_exact_zero()) return false;
  return true;
}

long long zero_precision(const Series& s) {
  long long w = kInfVal;
  for (int k = 0; k < s.n(); ++k)
    if (!s[k].is_exact_zero()) w = std::min(w, s[k].abs_precision());
  return w;
}

void prune(SparseVec& v, long long& decided) {
  SparseVec out;
  out.reserve(v.size());
  for (auto& e : v) {
    if (e.second.is_zero()) {
      decided = std::min(decided, zero_precision(e.second));
    } else {
      out.push_back(std::move(e));
    }
  }
  v.swap(out);
}

// a - f * b
SparseVec axpy(const SparseVec& a, const Series& f, const SparseVec& b) {
  SparseVec out;
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.emplace_back(b[j].first, -(f * b[j].second));
      ++j;
    } else {
      out.emplace_back(a[i].first, a[i].second - f * b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

const Series* find_entry(const SparseVec& v, int col) {
  auto it = std::lower_bound(v.begin(), v.end(), col, [](const auto& e, int c) { return e.first < c; });
  if (it == v.end() || it->first != col) return nullptr;
  return &it->second;
}

}  // namespace

SparseMatrix SparseMatrix::from_dense(const SeriesMatrix& m) {
  SparseMatrix s;
  s.ring = m.ring();
  s.rows = m.rows();
  s.cols = m.cols();
  s.row.resize(static_cast<size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (!exact_zero(m.at(i, j))) s.row[i].emplace_back(j, m.at(i, j));
  return s;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t;
  t.ring = ring;
  t.rows = cols;
  t.cols = rows;
  t.row.resize(static_cast<size_t>(cols));
  for (int i = 0; i < rows; ++i)
    for (const auto& [j, s] : row[i]) t.row[j].emplace_back(i, s);
  return t;
}

SparseVec SparseMatrix::apply(const SparseVec& x) const {
  SparseVec out;
  for (int i = 0; i < rows; ++i) {
    Series acc = ring->zero();
    bool any = false;
    size_t a = 0, b = 0;
    const auto& r = row[i];
    while (a < r.size() && b < x.size()) {
      if (r[a].first < x[b].first) {
        ++a;
      } else if (x[b].first < r[a].first) {
        ++b;
      } else {
        acc += r[a].second * x[b].second;
        any = true;
        ++a;
        ++b;
      }
    }
    if (any) out.emplace_back(i, acc);
  }
  return out;
}

// ---------------------------------------------------------------- Echelon

long long Echelon::order_key(const Series& s, int* order, long long* lead) const {
  if (mode_ == OrderMode::t_adic) {
    long long dec = kInfVal;
    int k = s.t_order(&dec);
    *order = k;
    *lead = (k < s.n()) ? s[k].w() : kInfVal;
    return dec;
  }
  *order = s[0].is_zero() ? static_cast<int>(std::min<long long>(kInfVal, 1LL << 30)) : static_cast<int>(s[0].w());
  *lead = 0;
  return s[0].is_zero() ? s[0].abs_precision() : kInfVal;
}

Series Echelon::quotient(const Series& b, const Series& a) const {
  if (mode_ == OrderMode::t_adic) return div_exact(b, a);
  return ring_->constant(b[0] / a[0]);
}

Echelon::Echelon(const ModelRing* ring, std::vector<SparseVec> rows, int ncols, int pivot_limit, OrderMode mode,
                 long long modulus)
    : ring_(ring), ncols_(ncols), limit_(pivot_limit), mode_(mode), modulus_(modulus) {
  if (mode == OrderMode::p_adic && ring->n() != 1) throw ConfigMismatch("p-adic elimination needs t_order 1");
  auto reduce = [&](SparseVec& r) {
    if (modulus_ < kInfVal)
      for (auto& e : r) e.second = e.second.cap_abs(modulus_);
    prune(r, decided_);
  };
  for (auto& r : rows) {
    std::sort(r.begin(), r.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    reduce(r);
  }
  std::vector<bool> alive(rows.size(), true);
  const int none = 1 << 30;
  while (true) {
    std::tuple<int, long long, int, int> best{none, kInfVal, none, none};
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!alive[i]) continue;
      for (const auto& [c, s] : rows[i]) {
        if (c >= limit_) break;
        int k;
        long long lead;
        long long dec = order_key(s, &k, &lead);
        if (mode_ == OrderMode::p_adic && s[0].is_zero()) {
          decided_ = std::min(decided_, dec);
          continue;
        }
        if (k >= ring_->n() && mode_ == OrderMode::t_adic) continue;
        auto key = std::make_tuple(k, lead, c, static_cast<int>(i));
        if (key < best) {
          best = key;
          decided_ = std::min(decided_, dec);
        }
      }
    }
    if (std::get<0>(best) == none) break;
    int pc = std::get<2>(best), pr = std::get<3>(best);
    alive[pr] = false;
    Pivot P{pc, std::get<0>(best), rows[pr]};
    const Series a = *find_entry(P.row, pc);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!alive[i]) continue;
      const Series* b = find_entry(rows[i], pc);
      if (!b) continue;
      Series f = quotient(*b, a);
      rows[i] = axpy(rows[i], f, P.row);
      reduce(rows[i]);
      // the pivot column must vanish after elimination
      auto it = std::lower_bound(rows[i].begin(), rows[i].end(), pc,
                                 [](const auto& e, int c) { return e.first < c; });
      if (it != rows[i].end() && it->first == pc) {
        decided_ = std::min(decided_, zero_precision(it->second));
        rows[i].erase(it);
      }
    }
    pivots_.push_back(std::move(P));
  }
  for (size_t i = 0; i < rows.size(); ++i)
    if (alive[i] && !rows[i].empty()) residual_.push_back(std::move(rows[i]));
}

std::vector<int> Echelon::pivot_orders() const {
  std::vector<int> v;
  for (const auto& p : pivots_) v.push_back(p.order);
  return v;
}

std::vector<int> Echelon::pivot_columns() const {
  std::vector<int> v;
  for (const auto& p : pivots_) v.push_back(p.col);
  return v;
}

SparseVec Echelon::back_substitute(std::vector<std::pair<int, Series>> fixed, int upto, int rhs_col,
                                   bool* ok) const {
  std::map<int, Series> x(fixed.begin(), fixed.end());
  *ok = true;
  for (int j = upto - 1; j >= 0; --j) {
    const Pivot& P = pivots_[j];
    Series num = ring_->zero();
    const Series* a = nullptr;
    for (const auto& [c, s] : P.row) {
      if (c == P.col) {
        a = &s;
        continue;
      }
      if (c >= limit_) {
        if (c == rhs_col) num += s;
        continue;
      }
      auto it = x.find(c);
      if (it != x.end()) num -= s * it->second;
    }
    if (modulus_ < kInfVal) num = num.cap_abs(modulus_);
    if (num.is_zero()) continue;
    if (mode_ == OrderMode::t_adic) {
      long long dec = kInfVal;
      if (num.t_order(&dec) < P.order) {
        *ok = false;
        return {};
      }
      x[P.col] = div_exact(num, *a);
    } else {
      if (num[0].w() < (*a)[0].w()) {
        *ok = false;
        return {};
      }
      x[P.col] = ring_->constant(num[0] / (*a)[0]);
    }
  }
  SparseVec out;
  for (auto& [c, s] : x)
    if (!exact_zero(s)) out.emplace_back(c, s);
  return out;
}

std::vector<KernelVector> Echelon::kernel() const {
  std::vector<bool> pivoted(static_cast<size_t>(limit_), false);
  for (const auto& p : pivots_) pivoted[p.col] = true;
  std::vector<KernelVector> out;
  bool ok;
  for (int c = 0; c < limit_; ++c) {
    if (pivoted[c]) continue;
    out.push_back({back_substitute({{c, ring_->one()}}, rank(), -1, &ok), ring_->n()});
  }
  if (mode_ == OrderMode::t_adic) {
    for (int j = 0; j < rank(); ++j) {
      int k = pivots_[j].order;
      if (k == 0) continue;
      Series tk = ring_->one().shift_up(ring_->n() - k);
      out.push_back({back_substitute({{pivots_[j].col, tk}}, j, -1, &ok), k});
    }
  }
  std::sort(out.begin(), out.end(), [](const KernelVector& a, const KernelVector& b) {
    int ca = a.v.empty() ? -1 : a.v.back().first;
    int cb = b.v.empty() ? -1 : b.v.back().first;
    return std::tie(a.torsion, ca) > std::tie(b.torsion, cb);
  });
  return out;
}

std::optional<SparseVec> Echelon::solve(int rhs_col) const {
  for (const auto& r : residual_) {
    const Series* s = find_entry(r, rhs_col);
    if (s && !s->is_zero()) return std::nullopt;
  }
  bool ok;
  SparseVec x = back_substitute({}, rank(), rhs_col, &ok);
  if (!ok) return std::nullopt;
  return x;
}

int Echelon::span_length() const {
  int len = 0;
  for (const auto& p : pivots_) len += ring_->n() - p.order;
  return len;
}

int span_length(const ModelRing* ring, const std::vector<SparseVec>& gens, int dim, long long* decided) {
  Echelon e(ring, gens, dim, dim);
  if (decided) *decided = std::min(*decided, e.decided_precision());
  return e.span_length();
}

// ---------------------------------------------------------------- complexes

namespace {

std::vector<std::vector<int>> subsets_of_size(int k, int q) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == q) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < k; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace

ComplexData koszul_build(const ModelRing* ring, const std::vector<SeriesMatrix>& ops) {
  int k = static_cast<int>(ops.size());
  int r = k ? ops[0].rows() : 0;
  for (const auto& m : ops)
    if (m.rows() != r || m.cols() != r) throw ConfigMismatch("Koszul operators must be square of equal size");
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      SeriesMatrix comm = ops[i] * ops[j] - ops[j] * ops[i];
      if (!comm.is_zero())
        throw CommutationFailure("operators " + std::to_string(i) + " and " + std::to_string(j) +
                                 " do not commute; residual valuation " +
                                 rational_str(Rational(comm.gauss_w(), ring->ctx()->e())));
    }
  ComplexData c;
  c.ring = ring;
  std::vector<std::vector<std::vector<int>>> subs;
  std::vector<std::map<std::vector<int>, int>> index;
  for (int q = 0; q <= k; ++q) {
    subs.push_back(subsets_of_size(k, q));
    std::map<std::vector<int>, int> idx;
    for (size_t s = 0; s < subs[q].size(); ++s) idx[subs[q][s]] = static_cast<int>(s);
    index.push_back(idx);
    c.ranks.push_back(static_cast<int>(subs[q].size()) * r);
  }
  for (int q = 0; q < k; ++q) {
    SparseMatrix m;
    m.ring = ring;
    m.rows = c.ranks[q + 1];
    m.cols = c.ranks[q];
    m.row.resize(static_cast<size_t>(m.rows));
    for (size_t s = 0; s < subs[q].size(); ++s) {
      const auto& S = subs[q][s];
      for (int i = 0; i < k; ++i) {
        if (std::find(S.begin(), S.end(), i) != S.end()) continue;
        int before = 0;
        for (int j : S)
          if (j < i) ++before;
        std::vector<int> T = S;
        T.push_back(i);
        std::sort(T.begin(), T.end());
        int t = index[q + 1].at(T);
        for (int b = 0; b < r; ++b)
          for (int a = 0; a < r; ++a) {
            const Series& v = ops[i].at(b, a);
            if (exact_zero(v)) continue;
            m.row[t * r + b].emplace_back(static_cast<int>(s) * r + a, before % 2 ? -v : v);
          }
      }
    }
    for (auto& row : m.row)
      std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    c.d.push_back(std::move(m));
  }
  return c;
}

void check_square_zero(const ComplexData& c) {
  for (size_t q = 0; q + 1 < c.d.size(); ++q) {
    const SparseMatrix& a = c.d[q];
    const SparseMatrix& b = c.d[q + 1];
    SparseMatrix at = a.transpose();
    for (int col = 0; col < a.cols; ++col) {
      SparseVec v = b.apply(at.row[col]);
      for (const auto& [i, s] : v)
        if (!s.is_zero())
          throw PreconditionFailed("differentials do not compose to zero in degree " + std::to_string(q));
    }
  }
}

Rational CohomologyReport::guaranteed() const {
  if (decided_precision >= kInfVal) return Rational(-1);
  return Rational(decided_precision, p - 1);
}

int CohomologyReport::length(int q) const {
  const auto& d = degrees.at(q);
  int len = d.free * n;
  for (int k : d.torsion) len += k;
  return len;
}

CohomologyReport cohomology_compute(const ComplexData& c) {
  check_square_zero(c);
  const ModelRing* R = c.ring;
  int n = R->n();
  CohomologyReport rep;
  rep.n = n;
  rep.p = R->ctx()->p();
  rep.module_ranks = c.ranks;
  int top = static_cast<int>(c.ranks.size()) - 1;
  for (int q = 0; q <= top; ++q) {
    int dim = c.ranks[q];
    std::vector<SparseVec> K;
    if (q < top) {
      Echelon e(R, c.d[q].row, dim, dim);
      rep.decided_precision = std::min(rep.decided_precision, e.decided_precision());
      for (auto& kv : e.kernel()) K.push_back(kv.v);
    } else {
      for (int i = 0; i < dim; ++i) K.push_back({{i, R->one()}});
    }
    std::vector<SparseVec> I;
    if (q > 0) I = c.d[q - 1].transpose().row;
    int lenI = span_length(R, I, dim, &rep.decided_precision);
    std::vector<int> L(static_cast<size_t>(n + 1), 0);
    for (int j = 0; j < n; ++j) {
      std::vector<SparseVec> gens = I;
      for (const auto& v : K) {
        SparseVec tv;
        for (const auto& [i, s] : v) tv.emplace_back(i, s.shift_up(j));
        gens.push_back(tv);
      }
      L[j] = span_length(R, gens, dim, &rep.decided_precision) - lenI;
    }
    std::vector<int> cnt(static_cast<size_t>(n + 1), 0);
    for (int j = 0; j < n; ++j) cnt[j] = L[j] - L[j + 1];
    CohomologyDegree deg;
    for (int k = 1; k <= n; ++k) {
      int m = cnt[k - 1] - cnt[k];
      if (m < 0) throw PrecisionExhausted("inconsistent length profile in degree " + std::to_string(q));
      if (k == n)
        deg.free = m;
      else
        for (int t = 0; t < m; ++t) deg.torsion.push_back(k);
    }
    rep.degrees.push_back(deg);
  }
  return rep;
}

CompareVerdict complex_compare(const CohomologyReport& a, const CohomologyReport& b) {
  CompareVerdict v;
  long long prec = std::min(a.decided_precision, b.decided_precision);
  v.precision_infinite = prec >= kInfVal;
  if (!v.precision_infinite) v.common_precision = Rational(prec, a.p - 1);
  if (a.n != b.n) {
    v.equal = false;
    v.detail = "different t-orders";
    return v;
  }
  size_t m = std::max(a.degrees.size(), b.degrees.size());
  for (size_t q = 0; q < m; ++q) {
    CohomologyDegree da = q < a.degrees.size() ? a.degrees[q] : CohomologyDegree{};
    CohomologyDegree db = q < b.degrees.size() ? b.degrees[q] : CohomologyDegree{};
    if (!(da == db)) {
      v.equal = false;
      v.mismatched_degrees.push_back(static_cast<int>(q));
    }
  }
  return v;
}

nlohmann::json report_to_json(const CohomologyReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  nlohmann::json degs = nlohmann::json::array();
  for (const auto& d : r.degrees) degs.push_back({{"free", d.free}, {"torsion", d.torsion}});
  j["degrees"] = degs;
  j["guaranteed"] = r.decided_precision >= kInfVal ? std::string("inf") : rational_str(r.guaranteed());
  return j;
}

}  // namespace prh
