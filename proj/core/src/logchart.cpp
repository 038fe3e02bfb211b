#include "prh/logchart.hpp"

#include <algorithm>
#include <queue>
#include <nlohmann/json.hpp>

namespace prh {

namespace {

constexpr size_t kBasisLimit = 5000;
constexpr long long kBoxLimit = 1000000;
constexpr int kDeskGens = 6;
constexpr int kDeskRank = 4;

IntMat identity(int n) {
  IntMat I(static_cast<size_t>(n), IntVec(static_cast<size_t>(n), 0));
  for (int i = 0; i < n; ++i) I[i][i] = 1;
  return I;
}

IntVec to_int(const ExpVec& v) {
  IntVec r;
  for (long long x : v) r.emplace_back(static_cast<long>(x));
  return r;
}

ExpVec to_exp(const IntVec& v) {
  ExpVec r;
  for (const auto& x : v) {
    if (!x.fits_slong_p()) throw SizeLimit("lattice entry overflows");
    r.push_back(x.get_si());
  }
  return r;
}

ExpVec diff(const ExpVec& a, const ExpVec& b) {
  ExpVec d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

std::vector<int> positive_part(const ExpVec& v) {
  std::vector<int> r;
  for (long long x : v) r.push_back(static_cast<int>(std::max(x, 0LL)));
  return r;
}

std::vector<int> negative_part(const ExpVec& v) {
  std::vector<int> r;
  for (long long x : v) r.push_back(static_cast<int>(std::max(-x, 0LL)));
  return r;
}

bool divides(const std::vector<int>& a, const std::vector<int>& m) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > m[i]) return false;
  return true;
}

bool coprime(const std::vector<int>& a, const std::vector<int>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] && b[i]) return false;
  return true;
}

std::optional<std::vector<int>> nf(const std::vector<Binomial>& g, std::vector<int> m) {
  for (;;) {
    bool moved = false;
    for (const auto& f : g) {
      if (!divides(f.a, m)) continue;
      if (f.monomial) return std::nullopt;
      for (size_t i = 0; i < m.size(); ++i) m[i] += f.b[i] - f.a[i];
      moved = true;
      break;
    }
    if (!moved) return m;
  }
}

std::optional<Binomial> orient(std::optional<std::vector<int>> m, std::optional<std::vector<int>> n,
                               const TermOrder& ord) {
  if (!m && !n) return std::nullopt;
  if (!m || !n) return Binomial{m ? *m : *n, {}, true};
  if (*m == *n) return std::nullopt;
  if (ord.less(*m, *n)) std::swap(m, n);
  return Binomial{*m, *n, false};
}

// ---- monoids as lattice ideals

struct Presented {
  int k = 0;
  IntMat lattice;                // relation lattice generators, rows
  std::vector<Binomial> ideal;   // generators of the lattice ideal
};

std::vector<Binomial> lattice_ideal(const std::vector<ExpVec>& gens, int k) {
  // (basis binomials + <t x_1..x_k - 1>) intersected with k[x]; t is variable 0
  TermOrder elim{{1, k}};
  std::vector<Binomial> in;
  for (const auto& v : gens) {
    std::vector<int> a{0}, b{0};
    auto pa = positive_part(v), na = negative_part(v);
    a.insert(a.end(), pa.begin(), pa.end());
    b.insert(b.end(), na.begin(), na.end());
    if (auto f = orient(a, b, elim)) in.push_back(*f);
  }
  std::vector<int> all(static_cast<size_t>(k + 1), 1), none(static_cast<size_t>(k + 1), 0);
  in.push_back(*orient(all, none, elim));
  BinomialBasis gb(in, elim);
  TermOrder ord{{k}};
  std::vector<Binomial> out;
  for (const auto& f : gb.basis()) {
    if (f.a[0] || (!f.monomial && f.b[0])) continue;
    std::vector<int> a(f.a.begin() + 1, f.a.end());
    std::vector<int> b = f.monomial ? std::vector<int>{} : std::vector<int>(f.b.begin() + 1, f.b.end());
    if (f.monomial) throw PreconditionFailed("lattice ideal contains a monomial");
    if (auto g = orient(a, b, ord)) out.push_back(*g);
  }
  return out;
}

Presented present(const FGMonoid& m) {
  Presented p;
  p.k = m.gens;
  std::vector<ExpVec> diffs;
  for (const auto& [u, v] : m.relations) {
    diffs.push_back(diff(u, v));
    p.lattice.push_back(to_int(diffs.back()));
  }
  p.ideal = lattice_ideal(diffs, m.gens);
  return p;
}

bool contains(const Presented& p, const ExpVec& x) {
  auto a = positive_part(x), b = negative_part(x);
  if (std::all_of(b.begin(), b.end(), [](int e) { return e == 0; })) return true;
  std::vector<Binomial> gens = p.ideal;
  gens.push_back(Binomial{b, {}, true});
  BinomialBasis gb(gens, TermOrder{{p.k}});
  return !gb.normal_form(a).has_value();
}

void validate(const FGMonoid& m) {
  if (m.gens < 0) throw InputError("negative generator count");
  for (const auto& [u, v] : m.relations) {
    if (static_cast<int>(u.size()) != m.gens || static_cast<int>(v.size()) != m.gens)
      throw InputError("relation has the wrong length");
    for (long long x : u)
      if (x < 0) throw InputError("relations live in N^k");
    for (long long x : v)
      if (x < 0) throw InputError("relations live in N^k");
  }
}

// rows d_i * Qinv_i span the same lattice as the input rows
IntMat row_basis(const IntMat& gens, int cols) {
  if (gens.empty()) return {};
  SmithForm s = smith_form(gens, cols);
  IntMat out;
  for (int i = 0; i < s.rank; ++i) {
    IntVec r = s.Qinv[i];
    for (auto& x : r) x *= s.divisors[i];
    out.push_back(r);
  }
  return out;
}

bool same_lattice(const IntMat& a, const IntMat& b, int cols) {
  for (const auto& v : a)
    if (!in_row_lattice(b, cols, v)) return false;
  for (const auto& v : b)
    if (!in_row_lattice(a, cols, v)) return false;
  return true;
}

// {x in Z^k : A x in span(extra)}; A is rows x k, extra are column vectors of length rows
IntMat preimage_lattice(const IntMat& A, int k, const IntMat& extra) {
  size_t rows = A.size();
  int cols = k + static_cast<int>(extra.size());
  IntMat B(rows, IntVec(static_cast<size_t>(cols), 0));
  for (size_t i = 0; i < rows; ++i) {
    for (int j = 0; j < k; ++j) B[i][j] = A[i][j];
    for (size_t e = 0; e < extra.size(); ++e) B[i][k + e] = -extra[e][i];
  }
  IntMat ker;
  if (rows == 0) {
    ker = identity(cols);
  } else {
    ker = integer_kernel(B, cols);
  }
  IntMat proj;
  for (const auto& v : ker) proj.emplace_back(v.begin(), v.begin() + k);
  return row_basis(proj, k);
}

IntVec mat_vec(const IntMat& A, const IntVec& x) {
  IntVec r(A.size(), 0);
  for (size_t i = 0; i < A.size(); ++i)
    for (size_t j = 0; j < x.size(); ++j) r[i] += A[i][j] * x[j];
  return r;
}

// solve V lambda = z over Q, V given by columns; nullopt if inconsistent
std::optional<std::vector<mpq_class>> solve_columns(const std::vector<IntVec>& cols, const IntVec& z) {
  size_t n = cols.size(), f = z.size();
  std::vector<std::vector<mpq_class>> M(f, std::vector<mpq_class>(n + 1));
  for (size_t i = 0; i < f; ++i) {
    for (size_t j = 0; j < n; ++j) M[i][j] = cols[j][i];
    M[i][n] = z[i];
  }
  size_t row = 0;
  std::vector<size_t> piv;
  for (size_t c = 0; c < n && row < f; ++c) {
    size_t sel = row;
    while (sel < f && M[sel][c] == 0) ++sel;
    if (sel == f) continue;
    std::swap(M[sel], M[row]);
    for (size_t i = 0; i < f; ++i) {
      if (i == row || M[i][c] == 0) continue;
      mpq_class q = M[i][c] / M[row][c];
      for (size_t j = c; j <= n; ++j) M[i][j] -= q * M[row][j];
    }
    piv.push_back(c);
    ++row;
  }
  for (size_t i = row; i < f; ++i)
    if (M[i][n] != 0) return std::nullopt;
  std::vector<mpq_class> lam(n, 0);
  for (size_t i = 0; i < piv.size(); ++i) lam[piv[i]] = M[i][n] / M[i][piv[i]];
  return lam;
}

int column_rank(const std::vector<IntVec>& cols, size_t f) {
  if (cols.empty()) return 0;
  IntMat rows;
  for (const auto& c : cols) rows.push_back(c);
  return smith_form(rows, static_cast<int>(f)).rank;
}

// Element of gp(M) with Smith coordinates y, as a vector of Z^k.
ExpVec from_coords(const SmithForm& s, const IntVec& y) {
  size_t k = y.size();
  IntVec x(k, 0);
  for (size_t i = 0; i < k; ++i)
    for (size_t j = 0; j < k; ++j) x[j] += y[i] * s.Qinv[i][j];
  return to_exp(x);
}

SmithForm relation_smith(const Presented& p) {
  if (p.lattice.empty()) {
    SmithForm s;
    s.P = {};
    s.Q = identity(p.k);
    s.Qinv = identity(p.k);
    return s;
  }
  return smith_form(p.lattice, p.k);
}

template <class F>
void for_each_in_box(const std::vector<long long>& lo, const std::vector<long long>& hi, F&& f) {
  long long total = 1;
  for (size_t i = 0; i < lo.size(); ++i) {
    total *= hi[i] - lo[i] + 1;
    if (total > kBoxLimit) throw SizeLimit("enumeration box exceeds the desk-scale limit");
  }
  std::vector<long long> z = lo;
  for (;;) {
    f(z);
    size_t i = 0;
    while (i < z.size() && z[i] == hi[i]) z[i] = lo[i], ++i;
    if (i == z.size()) return;
    ++z[i];
  }
}

void check_integral(const FGMonoid& m, const char* what) {
  if (!is_integral(m)) throw PreconditionFailed(std::string(what) + " monoid is not integral");
}

}  // namespace

// ---------------------------------------------------------------- lattices

SmithForm smith_form(const IntMat& A0, int n) {
  int m = static_cast<int>(A0.size());
  SmithForm s;
  s.D = A0;
  IntMat& A = s.D;
  s.P = identity(m);
  s.Q = identity(n);
  s.Qinv = identity(n);
  auto swap_rows = [&](int i, int j) {
    std::swap(A[i], A[j]);
    std::swap(s.P[i], s.P[j]);
  };
  auto swap_cols = [&](int i, int j) {
    for (auto& r : A) std::swap(r[i], r[j]);
    for (auto& r : s.Q) std::swap(r[i], r[j]);
    std::swap(s.Qinv[i], s.Qinv[j]);
  };
  auto add_row = [&](int dst, int src, const mpz_class& q) {
    for (int c = 0; c < n; ++c) A[dst][c] += q * A[src][c];
    for (int c = 0; c < m; ++c) s.P[dst][c] += q * s.P[src][c];
  };
  auto add_col = [&](int dst, int src, const mpz_class& q) {
    for (int r = 0; r < m; ++r) A[r][dst] += q * A[r][src];
    for (int r = 0; r < n; ++r) s.Q[r][dst] += q * s.Q[r][src];
    for (int c = 0; c < n; ++c) s.Qinv[src][c] -= q * s.Qinv[dst][c];
  };
  int t = 0;
  for (; t < std::min(m, n); ++t) {
    int bi = -1, bj = -1;
    for (int i = t; i < m; ++i)
      for (int j = t; j < n; ++j)
        if (A[i][j] != 0 && (bi < 0 || abs(A[i][j]) < abs(A[bi][bj]))) bi = i, bj = j;
    if (bi < 0) break;
    swap_rows(t, bi);
    swap_cols(t, bj);
    for (;;) {
      bool clean = true;
      for (int i = t + 1; i < m; ++i) {
        if (A[i][t] == 0) continue;
        mpz_class q = A[i][t] / A[t][t];
        add_row(i, t, -q);
        if (A[i][t] != 0) clean = false;
      }
      for (int j = t + 1; j < n; ++j) {
        if (A[t][j] == 0) continue;
        mpz_class q = A[t][j] / A[t][t];
        add_col(j, t, -q);
        if (A[t][j] != 0) clean = false;
      }
      if (!clean) {
        int pi = t, pj = t;
        for (int i = t + 1; i < m; ++i)
          if (A[i][t] != 0 && abs(A[i][t]) < abs(A[pi][pj])) pi = i, pj = t;
        for (int j = t + 1; j < n; ++j)
          if (A[t][j] != 0 && abs(A[t][j]) < abs(A[pi][pj])) pi = t, pj = j;
        swap_rows(t, pi);
        swap_cols(t, pj);
        continue;
      }
      int bad = -1;
      for (int i = t + 1; i < m && bad < 0; ++i)
        for (int j = t + 1; j < n; ++j)
          if (A[i][j] % A[t][t] != 0) {
            bad = i;
            break;
          }
      if (bad < 0) break;
      add_row(t, bad, 1);
    }
    if (A[t][t] < 0) {
      for (auto& x : A[t]) x = -x;
      for (auto& x : s.P[t]) x = -x;
    }
  }
  s.rank = t;
  for (int i = 0; i < t; ++i) s.divisors.push_back(A[i][i]);
  return s;
}

bool in_row_lattice(const IntMat& gens, int cols, const IntVec& v) {
  if (gens.empty()) return std::all_of(v.begin(), v.end(), [](const mpz_class& x) { return x == 0; });
  SmithForm s = smith_form(gens, cols);
  for (int j = 0; j < cols; ++j) {
    mpz_class w = 0;
    for (int i = 0; i < cols; ++i) w += v[i] * s.Q[i][j];
    if (j < s.rank ? (w % s.divisors[j] != 0) : (w != 0)) return false;
  }
  return true;
}

IntMat integer_kernel(const IntMat& A, int cols) {
  if (A.empty()) return identity(cols);
  SmithForm s = smith_form(A, cols);
  IntMat out;
  for (int j = s.rank; j < cols; ++j) {
    IntVec v(static_cast<size_t>(cols));
    for (int i = 0; i < cols; ++i) v[i] = s.Q[i][j];
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------- binomial ideals

bool TermOrder::less(const std::vector<int>& x, const std::vector<int>& y) const {
  size_t start = 0;
  for (int len : block_sizes) {
    size_t end = start + static_cast<size_t>(len);
    long long dx = 0, dy = 0;
    for (size_t i = start; i < end; ++i) dx += x[i], dy += y[i];
    if (dx != dy) return dx < dy;
    for (size_t i = end; i-- > start;)
      if (x[i] != y[i]) return x[i] > y[i];
    start = end;
  }
  return false;
}

BinomialBasis::BinomialBasis(std::vector<Binomial> gens, TermOrder order) : order_(std::move(order)) {
  for (auto& f : gens) {
    auto r = f.monomial ? orient(nf(g_, f.a), std::nullopt, order_) : reduce(&f.a, &f.b);
    if (r) g_.push_back(*r);
  }
  struct Pair {
    std::vector<int> lcm;
    size_t i, j;
  };
  auto lcm_of = [&](size_t i, size_t j) {
    std::vector<int> l(g_[i].a.size());
    for (size_t v = 0; v < l.size(); ++v) l[v] = std::max(g_[i].a[v], g_[j].a[v]);
    return l;
  };
  // smallest lcm first
  auto later = [this](const Pair& x, const Pair& y) { return order_.less(y.lcm, x.lcm); };
  std::priority_queue<Pair, std::vector<Pair>, decltype(later)> pairs(later);
  auto add_pairs = [&](size_t j) {
    for (size_t i = 0; i < j; ++i) {
      if (g_[i].monomial && g_[j].monomial) continue;
      if (coprime(g_[i].a, g_[j].a)) continue;
      pairs.push({lcm_of(i, j), i, j});
    }
  };
  for (size_t j = 0; j < g_.size(); ++j) add_pairs(j);
  while (!pairs.empty()) {
    Pair pr = pairs.top();
    pairs.pop();
    const std::vector<int>& l = pr.lcm;
    // chain criterion: some lead strictly between them makes the pair redundant
    bool chained = false;
    for (size_t k = 0; k < g_.size() && !chained; ++k) {
      if (k == pr.i || k == pr.j || !divides(g_[k].a, l)) continue;
      if (lcm_of(pr.i, k) != l && lcm_of(pr.j, k) != l) chained = true;
    }
    if (chained) continue;
    const Binomial f = g_[pr.i], h = g_[pr.j];
    auto shifted = [&](const Binomial& g) {
      std::vector<int> m(l.size());
      for (size_t v = 0; v < l.size(); ++v) m[v] = l[v] - g.a[v] + g.b[v];
      return m;
    };
    std::optional<Binomial> s;
    if (f.monomial || h.monomial) {
      std::vector<int> m = shifted(f.monomial ? h : f);
      s = orient(nf(g_, m), std::nullopt, order_);
    } else {
      std::vector<int> m = shifted(f), n = shifted(h);
      s = reduce(&m, &n);
    }
    if (!s) continue;
    g_.push_back(*s);
    if (g_.size() > kBasisLimit) throw SizeLimit("binomial Groebner basis exceeds the size limit");
    add_pairs(g_.size() - 1);
  }
  // drop elements whose leading term is divisible by another leading term
  std::vector<Binomial> minimal;
  for (size_t i = 0; i < g_.size(); ++i) {
    bool redundant = false;
    for (size_t j = 0; j < g_.size() && !redundant; ++j) {
      if (i == j || !divides(g_[j].a, g_[i].a)) continue;
      if (g_[j].a != g_[i].a || (g_[j].monomial && !g_[i].monomial) || (g_[j].monomial == g_[i].monomial && j < i))
        redundant = true;
    }
    if (!redundant) minimal.push_back(g_[i]);
  }
  g_ = std::move(minimal);
}

std::optional<Binomial> BinomialBasis::reduce(const std::vector<int>* m, const std::vector<int>* n) const {
  return orient(nf(g_, *m), nf(g_, *n), order_);
}

std::optional<std::vector<int>> BinomialBasis::normal_form(std::vector<int> m) const { return nf(g_, std::move(m)); }

bool BinomialBasis::contains(const Binomial& f) const {
  if (f.monomial) return !nf(g_, f.a).has_value();
  return !reduce(&f.a, &f.b).has_value();
}

// ---------------------------------------------------------------- monoids

GroupCompletion group_completion(const FGMonoid& m) {
  validate(m);
  IntMat rel;
  for (const auto& [u, v] : m.relations) rel.push_back(to_int(diff(u, v)));
  GroupCompletion g;
  if (rel.empty()) {
    g.free_rank = m.gens;
    return g;
  }
  SmithForm s = smith_form(rel, m.gens);
  g.free_rank = m.gens - s.rank;
  for (const auto& d : s.divisors)
    if (d > 1) g.torsion.push_back(d.get_str());
  return g;
}

bool is_integral(const FGMonoid& m) {
  validate(m);
  if (m.gens > kDeskGens) throw SizeLimit("monoid has more generators than the desk-scale limit");
  std::vector<Binomial> rel;
  TermOrder ord{{m.gens}};
  for (const auto& [u, v] : m.relations)
    if (auto f = orient(positive_part(u), positive_part(v), ord)) rel.push_back(*f);
  BinomialBasis I(rel, ord);
  for (const auto& f : present(m).ideal)
    if (!I.contains(f)) return false;
  return true;
}

bool monoid_contains(const FGMonoid& m, const ExpVec& x) {
  validate(m);
  if (static_cast<int>(x.size()) != m.gens) throw InputError("element has the wrong length");
  return contains(present(m), x);
}

bool is_saturated(const FGMonoid& m) {
  if (!is_integral(m)) return false;
  Presented p = present(m);
  SmithForm s = relation_smith(p);
  int k = m.gens, rk = s.rank, f = k - rk;
  // torsion of gp(M) must lie in M
  for (int i = 0; i < rk; ++i) {
    if (s.divisors[i] == 1) continue;
    IntVec y(static_cast<size_t>(k), 0);
    y[i] = 1;
    if (!contains(p, from_coords(s, y))) return false;
  }
  if (f == 0) return true;
  // free parts of the generators; the saturation is generated by the lattice points of the
  // half-open parallelepipeds of maximal independent subsets
  std::vector<IntVec> v(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) v[j].assign(s.Q[j].begin() + rk, s.Q[j].end());
  int rho = column_rank(v, static_cast<size_t>(f));
  if (rho == 0) return true;
  if (f > kDeskRank + 2) throw SizeLimit("completion rank exceeds the desk-scale limit");
  std::vector<bool> pick(static_cast<size_t>(k), false);
  std::fill(pick.begin(), pick.begin() + rho, true);
  bool ok = true;
  do {
    std::vector<IntVec> cols;
    for (int j = 0; j < k; ++j)
      if (pick[j]) cols.push_back(v[j]);
    if (column_rank(cols, static_cast<size_t>(f)) != rho) continue;
    std::vector<long long> lo(static_cast<size_t>(f), 0), hi(static_cast<size_t>(f), 0);
    for (const auto& c : cols)
      for (int i = 0; i < f; ++i) {
        long long x = c[i].get_si();
        (x < 0 ? lo[i] : hi[i]) += x;
      }
    for_each_in_box(lo, hi, [&](const std::vector<long long>& z) {
      if (!ok) return;
      if (std::all_of(z.begin(), z.end(), [](long long e) { return e == 0; })) return;
      IntVec zz;
      for (long long e : z) zz.emplace_back(static_cast<long>(e));
      auto lam = solve_columns(cols, zz);
      if (!lam) return;
      for (const auto& l : *lam)
        if (l < 0 || l >= 1) return;
      IntVec y(static_cast<size_t>(k), 0);
      for (int i = 0; i < f; ++i) y[rk + i] = zz[i];
      if (!contains(p, from_coords(s, y))) ok = false;
    });
    if (!ok) return false;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return true;
}

// ---------------------------------------------------------------- exactification

Exactification exactify(const MonoidMap& fm, int box) {
  const FGMonoid& M = fm.source;
  const FGMonoid& T = fm.target;
  validate(M);
  validate(T);
  int k = M.gens, kt = T.gens;
  if (static_cast<int>(fm.images.size()) != k) throw InputError("one image per source generator");
  for (const auto& im : fm.images) {
    if (static_cast<int>(im.size()) != kt) throw InputError("image has the wrong length");
    for (long long x : im)
      if (x < 0) throw InputError("images live in N^k");
  }
  check_integral(M, "source");
  check_integral(T, "target");
  Presented pm = present(M), pt = present(T);
  if (group_completion(M).free_rank > kDeskRank) throw SizeLimit("source lattice rank exceeds the desk-scale limit");

  // alpha as a kt x k matrix
  IntMat A(static_cast<size_t>(kt), IntVec(static_cast<size_t>(k), 0));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < kt; ++i) A[i][j] = static_cast<long>(fm.images[j][i]);
  auto alpha = [&](const IntVec& x) { return mat_vec(A, x); };
  for (const auto& [u, v] : M.relations)
    if (!in_row_lattice(pt.lattice, kt, alpha(to_int(diff(u, v)))))
      throw PreconditionFailed("map does not respect the source relations");

  // surjectivity: each target generator is a monomial in the images, modulo the target lattice ideal
  {
    TermOrder elim{{kt, k}};
    std::vector<Binomial> gens;
    for (const auto& f : pt.ideal) {
      Binomial g = f;
      g.a.resize(static_cast<size_t>(kt + k), 0);
      g.b.resize(static_cast<size_t>(kt + k), 0);
      gens.push_back(g);
    }
    for (int j = 0; j < k; ++j) {
      std::vector<int> a(static_cast<size_t>(kt + k), 0), b(static_cast<size_t>(kt + k), 0);
      for (int i = 0; i < kt; ++i) a[i] = static_cast<int>(fm.images[j][i]);
      b[kt + j] = 1;
      if (auto g = orient(a, b, elim)) gens.push_back(*g);
    }
    BinomialBasis gb(gens, elim);
    for (int i = 0; i < kt; ++i) {
      std::vector<int> y(static_cast<size_t>(kt + k), 0);
      y[i] = 1;
      auto r = gb.normal_form(y);
      if (!r || std::any_of(r->begin(), r->begin() + kt, [](int e) { return e != 0; }))
        throw PreconditionFailed("map is not surjective");
    }
  }

  Exactification out;
  out.box = box;
  // G = ker(alpha^gp) = {x : alpha(x) in target lattice} / source lattice
  IntMat ktil = preimage_lattice(A, k, pt.lattice);
  {
    // G = ktil / L: write L in the basis of ktil and read generators off a Smith form
    int s = static_cast<int>(ktil.size());
    IntMat coords;
    for (const auto& l : pm.lattice) {
      auto lam = solve_columns(ktil, l);
      if (!lam) throw PreconditionFailed("source lattice not inside the kernel lattice");
      IntVec c;
      for (const auto& q : *lam) {
        if (q.get_den() != 1) throw PreconditionFailed("source lattice not inside the kernel lattice");
        c.push_back(q.get_num());
      }
      coords.push_back(c);
    }
    SmithForm sf = coords.empty() ? SmithForm{} : smith_form(coords, s);
    if (coords.empty()) sf.Qinv = identity(s);
    for (int i = 0; i < s; ++i) {
      if (i < sf.rank && sf.divisors[i] == 1) continue;
      IntVec g(static_cast<size_t>(k), 0);
      for (int j = 0; j < s; ++j)
        for (int c = 0; c < k; ++c) g[c] += sf.Qinv[i][j] * ktil[j][c];
      out.kernel.push_back(to_exp(g));
    }
  }

  for (int j = 0; j < k; ++j) {
    ExpVec e(static_cast<size_t>(k), 0);
    e[j] = 1;
    out.generators.push_back(e);
  }
  for (const auto& g : out.kernel) {
    out.generators.push_back(g);
    ExpVec n = g;
    for (auto& x : n) x = -x;
    out.generators.push_back(n);
  }
  int K = static_cast<int>(out.generators.size());
  IntMat W(static_cast<size_t>(k), IntVec(static_cast<size_t>(K), 0));  // columns are generators
  for (int c = 0; c < K; ++c)
    for (int i = 0; i < k; ++i) W[i][c] = static_cast<long>(out.generators[c][i]);

  // presentation of M': {c : W c in source lattice}
  IntMat lprime = preimage_lattice(W, K, pm.lattice);
  std::vector<ExpVec> lp;
  for (const auto& v : lprime) lp.push_back(to_exp(v));
  out.mprime.gens = K;
  for (const auto& f : lattice_ideal(lp, K)) {
    ExpVec a(f.a.begin(), f.a.end()), b(f.b.begin(), f.b.end());
    out.mprime.relations.emplace_back(a, b);
  }
  Presented pp = present(out.mprime);
  auto unit_vec = [](int n, int i, long long s) {
    ExpVec e(static_cast<size_t>(n), 0);
    e[i] = s;
    return e;
  };

  // gp(M') = gp(M)
  {
    IntMat span = pm.lattice;
    for (const auto& g : out.generators) span.push_back(to_int(g));
    out.gp_equal = same_lattice(span, identity(k), k) && same_lattice(lprime, row_basis(pp.lattice, K), K);
  }

  // factorization M -> M' -> target
  {
    bool ok = true;
    for (const auto& g : out.generators)
      if (!contains(pt, to_exp(alpha(to_int(g))))) ok = false;
    for (const auto& [u, v] : out.mprime.relations) {
      IntVec w = mat_vec(W, to_int(diff(u, v)));
      if (!in_row_lattice(pt.lattice, kt, alpha(w))) ok = false;
    }
    out.factorization = ok;
  }

  // preimage of the target inside the box lies in M'
  {
    SmithForm s = relation_smith(pm);
    int rk = s.rank, f = k - rk;
    std::vector<long long> lo, hi;
    for (int i = 0; i < rk; ++i) {
      lo.push_back(0);
      hi.push_back(s.divisors[i].get_si() - 1);
    }
    for (int i = 0; i < f; ++i) {
      lo.push_back(-box);
      hi.push_back(box);
    }
    bool ok = true;
    for_each_in_box(lo, hi, [&](const std::vector<long long>& y) {
      if (!ok) return;
      IntVec yy;
      for (long long e : y) yy.emplace_back(static_cast<long>(e));
      ExpVec x = from_coords(s, yy);
      if (!contains(pt, to_exp(alpha(to_int(x))))) return;
      ExpVec c(static_cast<size_t>(K), 0);
      std::copy(x.begin(), x.end(), c.begin());
      if (!contains(pp, c)) ok = false;
    });
    out.preimage_in_box = ok;
  }

  // units: alpha^{-1}(target units) equals the unit group of M'
  {
    IntMat tu = pt.lattice;
    for (int i = 0; i < kt; ++i)
      if (contains(pt, unit_vec(kt, i, -1))) tu.push_back(to_int(unit_vec(kt, i, 1)));
    IntMat pre = preimage_lattice(A, k, tu);
    IntMat mu = pm.lattice;
    for (int c = 0; c < K; ++c)
      if (contains(pp, unit_vec(K, c, -1))) mu.push_back(to_int(out.generators[c]));
    out.units_certificate = same_lattice(pre, row_basis(mu, k), k);
  }

  // idempotence: the kernel of M' -> target already consists of units of M'
  {
    IntMat AW(static_cast<size_t>(kt), IntVec(static_cast<size_t>(K), 0));
    for (int i = 0; i < kt; ++i)
      for (int c = 0; c < K; ++c)
        for (int j = 0; j < k; ++j) AW[i][c] += A[i][j] * W[j][c];
    bool ok = true;
    for (const auto& v : preimage_lattice(AW, K, pt.lattice)) {
      ExpVec c = to_exp(v), n = c;
      for (auto& x : n) x = -x;
      if (!contains(pp, c) || !contains(pp, n)) ok = false;
    }
    out.idempotent = ok;
  }
  return out;
}

FGMonoid semistable_skeleton(int r) {
  if (r < 0) throw InputError("r must be non-negative");
  FGMonoid m;
  m.gens = r + 2;
  ExpVec u(static_cast<size_t>(r + 2), 1), v(static_cast<size_t>(r + 2), 0);
  u[r + 1] = 0;
  v[r + 1] = 1;
  m.relations.emplace_back(u, v);
  return m;
}

MonoidMap skeleton_map(int r) {
  MonoidMap f;
  f.source = semistable_skeleton(r);
  f.target.gens = 1;
  for (int i = 0; i <= r; ++i) f.images.push_back({1});
  f.images.push_back({r + 1});
  return f;
}

// ---------------------------------------------------------------- charts

OmegaLog omega_log_basis(const ChartDescriptor& c) {
  if (c.d < 0 || c.r < 0 || c.r > c.d) throw InputError("chart needs 0 <= r <= d");
  if (c.a < 0) throw InputError("chart exponent a must be non-negative");
  OmegaLog o;
  o.d = c.d;
  o.r = c.r;
  for (int i = 0; i <= c.d; ++i) {
    o.symbols.push_back("dlog T_" + std::to_string(i));
    o.relation.push_back(i <= c.r ? 1 : 0);
  }
  for (int i = 1; i <= c.d; ++i) {
    o.basis.push_back(i);
    o.t0_expression.push_back(i <= c.r ? -1 : 0);
  }
  return o;
}

// ---------------------------------------------------------------- JSON

nlohmann::json monoid_to_json(const FGMonoid& m) {
  nlohmann::json rel = nlohmann::json::array();
  for (const auto& [u, v] : m.relations) rel.push_back({u, v});
  return {{"gens", m.gens}, {"relations", rel}};
}

FGMonoid monoid_from_json(const nlohmann::json& j) {
  try {
    FGMonoid m;
    m.gens = j.at("gens").get<int>();
    for (const auto& r : j.at("relations")) {
      if (!r.is_array() || r.size() != 2) throw InputError("relation must be a pair");
      m.relations.emplace_back(r[0].get<ExpVec>(), r[1].get<ExpVec>());
    }
    validate(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("monoid JSON: ") + e.what());
  }
}

ChartDescriptor chart_from_json(const nlohmann::json& j) {
  try {
    ChartDescriptor c;
    c.d = j.at("d").get<int>();
    c.r = j.at("r").get<int>();
    const auto& a = j.at("a");
    c.a = a.is_string() ? parse_rational(a.get<std::string>()) : Rational(a.get<long long>());
    if (c.d < 0 || c.r < 0 || c.r > c.d || c.a < 0) throw InputError("chart needs 0 <= r <= d and a >= 0");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("chart JSON: ") + e.what());
  }
}

nlohmann::json omega_to_json(const OmegaLog& o) {
  nlohmann::json basis = nlohmann::json::array();
  for (int i : o.basis) basis.push_back(o.symbols[i]);
  return {{"d", o.d}, {"r", o.r}, {"symbols", o.symbols}, {"relation", o.relation},
          {"basis", basis}, {"dlog T_0", o.t0_expression}};
}

nlohmann::json exactification_to_json(const Exactification& e) {
  return {{"mprime", monoid_to_json(e.mprime)},
          {"generators", e.generators},
          {"kernel", e.kernel},
          {"certificates",
           {{"factorization", e.factorization},
            {"preimage_in_box", e.preimage_in_box},
            {"units", e.units_certificate},
            {"gp_equal", e.gp_equal},
            {"idempotent", e.idempotent},
            {"box", e.box}}}};
}

}  // namespace prh
