#pragma once
// Exact arithmetic in Q(zeta_p), written in the basis 1, pi, ..., pi^{p-2}
// with pi = zeta_p - 1. Shared by the unit tests as an independent reference.

#include <gmpxx.h>

#include <vector>

#include "prh/padic.hpp"

namespace oracle {

inline mpz_class binom(long n, long k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

struct QZeta {
  int p = 2;
  std::vector<mpq_class> c;  // size p-1

  explicit QZeta(int p_ = 2) : p(p_), c(static_cast<size_t>(p_ - 1)) {}
  static QZeta from_int(int p, const mpq_class& v) {
    QZeta z(p);
    z.c[0] = v;
    return z;
  }
  static QZeta pi(int p) {
    std::vector<mpq_class> v = {0, 1};
    return from_poly(p, v);
  }
  // reduce an arbitrary polynomial in pi using Phi_p(1+pi) = 0
  static QZeta from_poly(int p, std::vector<mpq_class> v) {
    int e = p - 1;
    for (int k = static_cast<int>(v.size()) - 1; k >= e; --k) {
      mpq_class top = v[k];
      if (top == 0) continue;
      v[k] = 0;
      // pi^e = -sum_{j=1}^{p-1} C(p, j) pi^{j-1}
      for (int j = 1; j <= p - 1; ++j) v[k - e + j - 1] -= top * mpq_class(binom(p, j));
    }
    QZeta z(p);
    for (int k = 0; k < e && k < static_cast<int>(v.size()); ++k) z.c[k] = v[k];
    return z;
  }
  QZeta operator+(const QZeta& o) const {
    QZeta z(p);
    for (int k = 0; k < p - 1; ++k) z.c[k] = c[k] + o.c[k];
    return z;
  }
  QZeta operator-(const QZeta& o) const {
    QZeta z(p);
    for (int k = 0; k < p - 1; ++k) z.c[k] = c[k] - o.c[k];
    return z;
  }
  QZeta operator*(const QZeta& o) const {
    std::vector<mpq_class> v(static_cast<size_t>(2 * p));
    for (int i = 0; i < p - 1; ++i)
      for (int j = 0; j < p - 1; ++j) v[i + j] += c[i] * o.c[j];
    return from_poly(p, v);
  }
  bool is_zero() const {
    for (const auto& x : c)
      if (x != 0) return false;
    return true;
  }
  // pi-adic valuation; the basis elements have distinct valuations mod p-1
  long valuation() const {
    long best = 1L << 40;
    for (int k = 0; k < p - 1; ++k) {
      if (c[k] == 0) continue;
      mpz_class num = c[k].get_num(), den = c[k].get_den();
      long v = 0;
      while (num % p == 0) {
        num /= p;
        ++v;
      }
      while (den % p == 0) {
        den /= p;
        --v;
      }
      best = std::min(best, v * (p - 1) + k);
    }
    return best;
  }
};

inline QZeta pi_pow(int p, long k) {
  QZeta r = QZeta::from_int(p, 1), q = QZeta::pi(p);
  for (long i = 0; i < k; ++i) r = r * q;
  return r;
}

// exact value of the representative stored in a scalar, multiplied by pi^shift
inline QZeta lift(const prh::PAdicScalar& a, long shift = 0) {
  int p = a.ctx()->p();
  if (a.is_exact_zero()) return QZeta(p);
  QZeta u(p);
  for (int k = 0; k < p - 1; ++k) u.c[k] = mpq_class(static_cast<long>(a.unit()[k]));
  long w = a.w() + shift;
  if (w < 0) throw std::logic_error("lift: negative exponent, raise shift");
  return u * pi_pow(p, w);
}

// true when a agrees with the exact value x (times pi^shift) to a's absolute precision
inline bool agrees(const prh::PAdicScalar& a, const QZeta& x_shifted, long shift = 0) {
  QZeta diff = lift(a, shift) - x_shifted;
  if (diff.is_zero()) return true;
  if (a.is_exact_zero()) return false;
  return diff.valuation() >= a.abs_precision() + shift;
}

}  // namespace oracle

namespace oracle {

using QMat = std::vector<std::vector<mpq_class>>;

inline int rank_q(QMat m) {
  int rows = static_cast<int>(m.size());
  if (rows == 0) return 0;
  int cols = static_cast<int>(m[0].size());
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (m[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(m[piv], m[r]);
    for (int i = r + 1; i < rows; ++i) {
      if (m[i][c] == 0) continue;
      mpq_class f = m[i][c] / m[r][c];
      for (int j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    ++r;
  }
  return r;
}

// basis of the right kernel, as columns
inline std::vector<std::vector<mpq_class>> kernel_q(QMat m, int cols) {
  int rows = static_cast<int>(m.size());
  std::vector<int> pivcol;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (m[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(m[piv], m[r]);
    mpq_class inv = 1 / m[r][c];
    for (int j = 0; j < cols; ++j) m[r][j] *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || m[i][c] == 0) continue;
      mpq_class f = m[i][c];
      for (int j = 0; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    pivcol.push_back(c);
    ++r;
  }
  std::vector<bool> is_piv(static_cast<size_t>(cols), false);
  for (int c : pivcol) is_piv[c] = true;
  std::vector<std::vector<mpq_class>> out;
  for (int f = 0; f < cols; ++f) {
    if (is_piv[f]) continue;
    std::vector<mpq_class> v(static_cast<size_t>(cols));
    v[f] = 1;
    for (size_t k = 0; k < pivcol.size(); ++k) v[pivcol[k]] = -m[k][f];
    out.push_back(v);
  }
  return out;
}

// Integer matrix over B_n = Q[t]/t^n: ent[i][j][k] is the coefficient of t^k.
using IntSeriesMat = std::vector<std::vector<std::vector<long>>>;

// Q-linear expansion; coordinate (i, k) <-> index i*n + k
inline QMat expand(const IntSeriesMat& a, int n) {
  int rows = static_cast<int>(a.size()), cols = rows ? static_cast<int>(a[0].size()) : 0;
  QMat m(static_cast<size_t>(rows * n), std::vector<mpq_class>(static_cast<size_t>(cols * n)));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; k + l < n; ++l) m[i * n + k + l][j * n + l] += a[i][j][k];
  return m;
}

struct Profile {
  int free = 0;
  std::vector<int> torsion;
};

// cohomology of C^{q-1} -a-> C^q -b-> C^{q+1} as a B_n-module, via Q-linear algebra.
// a or b may be empty (0 x dim or dim x 0 matrices).
inline Profile middle_cohomology(const QMat& a, int a_cols, const QMat& b, int dim, int n) {
  auto K = b.empty() ? std::vector<std::vector<mpq_class>>() : kernel_q(b, dim);
  if (b.empty())
    for (int i = 0; i < dim; ++i) {
      std::vector<mpq_class> v(static_cast<size_t>(dim));
      v[i] = 1;
      K.push_back(v);
    }
  std::vector<std::vector<mpq_class>> I;
  for (int c = 0; c < a_cols; ++c) {
    std::vector<mpq_class> v(static_cast<size_t>(dim));
    for (int r = 0; r < dim; ++r) v[r] = a[r][c];
    I.push_back(v);
  }
  auto rank_rows = [&](const std::vector<std::vector<mpq_class>>& vs) {
    return vs.empty() ? 0 : rank_q(vs);
  };
  int lenI = rank_rows(I);
  std::vector<int> L(static_cast<size_t>(n + 1), 0);
  for (int j = 0; j < n; ++j) {
    std::vector<std::vector<mpq_class>> gens = I;
    for (const auto& v : K) {
      std::vector<mpq_class> w(static_cast<size_t>(dim));
      for (int i = 0; i < dim; ++i)
        if (i % n + j < n) w[i + j] = v[i];
      gens.push_back(w);
    }
    L[j] = rank_rows(gens) - lenI;
  }
  Profile pr;
  std::vector<int> cnt(static_cast<size_t>(n + 1), 0);
  for (int j = 0; j < n; ++j) cnt[j] = L[j] - L[j + 1];
  for (int k = 1; k <= n; ++k) {
    int m = cnt[k - 1] - cnt[k];
    if (k == n)
      pr.free = m;
    else
      for (int t = 0; t < m; ++t) pr.torsion.push_back(k);
  }
  return pr;
}

}  // namespace oracle
