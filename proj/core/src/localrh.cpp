#include "prh/localrh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>

namespace prh {

namespace {

bool exact_zero(const Series& s) {
  for (int k = 0; k < s.n(); ++k)
    if (!s[k].is_exact_zero()) return false;
  return true;
}

// minimum pi-valuation over coefficients k0 <= k < k1 of all entries
long long coef_gauss(const SeriesMatrix& m, int k0, int k1) {
  long long w = kInfVal;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      for (int k = k0; k < k1; ++k) w = std::min(w, m.at(i, j)[k].w());
  return w;
}

// lower bound for v(X^k) when v(X mod t) >= w0 and v(t-part) >= wt
long long power_bound(long long k, long long w0, long long wt, int n) {
  long long best = kInfVal;
  for (long long j = 0; j <= std::min<long long>(k, n - 1); ++j) best = std::min(best, (k - j) * w0 + j * wt);
  return best;
}

int vp_int(long long k, int p) {
  int v = 0;
  while (k % p == 0) {
    k /= p;
    ++v;
  }
  return v;
}

SeriesMatrix sub_identity(const SeriesMatrix& g) { return g - SeriesMatrix::identity(g.ring(), g.rows()); }

long long residue_mod_p(const PAdicScalar& a) {
  if (a.is_zero() || a.w() > 0) return 0;
  return a.residue();
}

bool residue_nilpotent(const SeriesMatrix& m, int p, std::string* witness) {
  int r = m.rows();
  std::vector<std::vector<long long>> a(static_cast<size_t>(r), std::vector<long long>(static_cast<size_t>(r)));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      const PAdicScalar& x = m.at(i, j)[0];
      if (!x.is_zero() && x.w() < 0) {
        if (witness) *witness = "entry (" + std::to_string(i) + "," + std::to_string(j) + ") has valuation " +
                                x.valuation().str() + " < 0";
        return false;
      }
      a[i][j] = residue_mod_p(x);
    }
  auto mul = [&](const std::vector<std::vector<long long>>& x, const std::vector<std::vector<long long>>& y) {
    std::vector<std::vector<long long>> z(static_cast<size_t>(r), std::vector<long long>(static_cast<size_t>(r)));
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j) z[i][j] = (z[i][j] + x[i][k] * y[k][j]) % p;
    return z;
  };
  auto pw = a;
  for (int k = 1; k < r; ++k) pw = mul(pw, a);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (pw[i][j] % p != 0) {
        if (witness) *witness = "residue matrix is not nilpotent";
        return false;
      }
  return true;
}

// ---------------------------------------------------------------- polynomials

void poly_add_to(Polynomial& a, const MultiIndex& J, const PAdicScalar& c) {
  auto it = a.find(J);
  if (it == a.end()) {
    if (!c.is_exact_zero()) a.emplace(J, c);
  } else {
    it->second += c;
    if (it->second.is_exact_zero()) a.erase(it);
  }
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [J, x] : a)
    for (const auto& [K, y] : b) {
      MultiIndex L(J.size());
      for (size_t i = 0; i < J.size(); ++i) L[i] = J[i] + K[i];
      poly_add_to(out, L, x * y);
    }
  return out;
}

Polynomial poly_det(const std::vector<std::vector<Polynomial>>& m, const std::vector<int>& idx, int d, Ctx ctx) {
  if (idx.empty()) return Polynomial{{MultiIndex(static_cast<size_t>(d), 0), PAdicScalar::one(ctx)}};
  int row = idx[0];
  Polynomial out;
  for (size_t c = 0; c < idx.size(); ++c) {
    std::vector<int> rest;
    for (size_t k = 1; k < idx.size(); ++k) rest.push_back(idx[k]);
    std::vector<int> cols;
    for (size_t k = 0; k < idx.size(); ++k)
      if (k != c) cols.push_back(idx[k]);
    std::vector<std::vector<Polynomial>> block(rest.size(), std::vector<Polynomial>(rest.size()));
    for (size_t a = 0; a < rest.size(); ++a)
      for (size_t b = 0; b < cols.size(); ++b) block[a][b] = m[rest[a]][cols[b]];
    std::vector<int> ids(rest.size());
    for (size_t k = 0; k < ids.size(); ++k) ids[k] = static_cast<int>(k);
    Polynomial minor = poly_det(block, ids, d, ctx);
    Polynomial term = poly_mul(m[row][idx[c]], minor);
    for (const auto& [J, x] : term) poly_add_to(out, J, c % 2 ? -x : x);
  }
  return out;
}

std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// ---------------------------------------------------------------- window layout

struct Layout {
  int d, r, deg;
  std::vector<MultiIndex> mons;  // descending degree
  std::map<MultiIndex, int> pos;
  Layout(int d_, int r_, int deg_) : d(d_), r(r_), deg(deg_) {
    if (deg >= 0) {
      mons = monomials_upto(d, deg);
      std::reverse(mons.begin(), mons.end());
    }
    for (size_t i = 0; i < mons.size(); ++i) pos[mons[i]] = static_cast<int>(i);
  }
  int size() const { return static_cast<int>(mons.size()); }
  int index(int s, int j, int k) const { return (s * size() + j) * r + k; }
};

struct Sections {
  SeriesMatrix X0;
  std::vector<SeriesMatrix> XE;
  std::vector<SparseVec> vectors;
  long long decided = kInfVal;
};

Sections horizontal_sections(const ModelRing* R, int d, int r, const std::vector<SeriesMatrix>& M, const Series& s,
                             int D) {
  if (D < 1) throw ConfigMismatch("pd_cap must be >= 1");
  SparseMatrix d0 = window_differential(R, d, r, M, s, 0, D, D - 1);
  Echelon e(R, d0.row, d0.cols, d0.cols);
  auto K = e.kernel();
  int n = R->n();
  int free = 0;
  for (const auto& kv : K)
    if (kv.torsion == n) ++free;
  if ((static_cast<int>(K.size()) != r || free != r) && e.decided_precision() < R->ctx()->max_rel())
    throw PrecisionExhausted("horizontal sections: a pivot was decided at pi-adic precision " +
                             std::to_string(e.decided_precision()) + " and the kernel is not free of rank " +
                             std::to_string(r) + "; raise the precision");
  if (static_cast<int>(K.size()) != r || free != r)
    throw TruncationOverflow("horizontal sections: kernel has " + std::to_string(free) + " free and " +
                             std::to_string(K.size() - free) + " torsion generators, expected rank " +
                             std::to_string(r) + " within pd-degree " + std::to_string(D) + "; raise pd_cap or the precision");
  Layout lay(d, r, D);
  Sections out;
  out.decided = e.decided_precision();
  out.X0 = SeriesMatrix(R, r, r);
  out.XE.assign(static_cast<size_t>(d), SeriesMatrix(R, r, r));
  MultiIndex zero(static_cast<size_t>(d), 0);
  for (int g = 0; g < r; ++g) {
    std::map<int, const Series*> ent;
    for (const auto& [i, v] : K[g].v) ent[i] = &v;
    for (int k = 0; k < r; ++k) {
      auto it = ent.find(lay.index(0, lay.pos.at(zero), k));
      if (it != ent.end()) out.X0.at(k, g) = *it->second;
      for (int i = 0; i < d; ++i) {
        MultiIndex E = zero;
        E[i] = 1;
        auto jt = ent.find(lay.index(0, lay.pos.at(E), k));
        if (jt != ent.end()) out.XE[i].at(k, g) = *jt->second;
      }
    }
    out.vectors.push_back(K[g].v);
  }
  return out;
}

SeriesMatrix safe_inverse(const SeriesMatrix& m, const char* what) {
  try {
    return m.inverse();
  } catch (const PreconditionFailed&) {
    throw TruncationOverflow(std::string(what) + " is not invertible over B_n");
  }
}

Rational valuation_p(long long w, int e) { return Rational(std::min(w, kInfVal / 2), e); }

}  // namespace

// ---------------------------------------------------------------- data checks

void check_commuting(const std::vector<SeriesMatrix>& ops) {
  for (size_t i = 0; i < ops.size(); ++i)
    for (size_t j = i + 1; j < ops.size(); ++j) {
      SeriesMatrix c = ops[i] * ops[j] - ops[j] * ops[i];
      if (!c.is_zero())
        throw CommutationFailure("matrices " + std::to_string(i) + " and " + std::to_string(j) +
                                 " do not commute; residual valuation " +
                                 rational_str(Rational(c.gauss_w(), c.ring()->ctx()->e())));
    }
}

// ---------------------------------------------------------------- Hitchin base

HitchinPoint hitchin_invariants(const HiggsDatum& h) {
  check_commuting(h.theta);
  Ctx ctx = h.ring->ctx();
  int r = h.rank, d = h.dim;
  std::vector<std::vector<Polynomial>> m(static_cast<size_t>(r), std::vector<Polynomial>(static_cast<size_t>(r)));
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int i = 0; i < d; ++i) {
        MultiIndex J(static_cast<size_t>(d), 0);
        J[i] = 1;
        poly_add_to(m[a][b], J, h.theta[i].at(a, b)[0]);
      }
  HitchinPoint out;
  out.dim = d;
  out.rank = r;
  for (int k = 1; k <= r; ++k) {
    Polynomial ek;
    for (const auto& S : subsets(r, k)) {
      std::vector<std::vector<Polynomial>> block(S.size(), std::vector<Polynomial>(S.size()));
      for (size_t a = 0; a < S.size(); ++a)
        for (size_t b = 0; b < S.size(); ++b) block[a][b] = m[S[a]][S[b]];
      std::vector<int> ids(S.size());
      for (size_t x = 0; x < ids.size(); ++x) ids[x] = static_cast<int>(x);
      for (const auto& [J, c] : poly_det(block, ids, d, ctx)) poly_add_to(ek, J, c);
    }
    out.components.push_back(ek);
  }
  return out;
}

bool hitchin_equal(const HitchinPoint& a, const HitchinPoint& b) {
  if (a.dim != b.dim || a.rank != b.rank) return false;
  for (size_t k = 0; k < a.components.size(); ++k) {
    Polynomial diff = a.components[k];
    for (const auto& [J, c] : b.components[k]) poly_add_to(diff, J, -c);
    for (const auto& [J, c] : diff)
      if (!c.is_zero()) return false;
  }
  return true;
}

nlohmann::json hitchin_to_json(const HitchinPoint& h) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& poly : h.components) {
    nlohmann::json o = nlohmann::json::object();
    for (const auto& [J, c] : poly) o[nlohmann::json(J).dump()] = scalar_to_json(c);
    comps.push_back(o);
  }
  return {{"dim", h.dim}, {"rank", h.rank}, {"components", comps}};
}

HiggsDatum higgs_reduction(const ConnectionDatum& m) {
  HiggsDatum h;
  h.ring = model_ring(m.ring->ctx(), 1);
  h.rank = m.rank;
  h.dim = m.dim;
  for (const auto& x : m.nabla) h.theta.push_back(x.truncate(h.ring));
  return h;
}

SmallnessVerdict check_small_higgs(const HiggsDatum& h) {
  SmallnessVerdict v;
  HitchinPoint hp = hitchin_invariants(h);
  for (int i = 1; i <= h.rank; ++i) {
    for (const auto& [J, c] : hp.components[i - 1]) {
      if (c.is_zero()) {
        if (c.abs_precision() <= i)
          throw PrecisionExhausted("degree " + std::to_string(i) + " invariant is zero only to valuation " +
                                   rational_str(Rational(c.abs_precision(), h.ring->ctx()->e())));
        continue;
      }
      if (c.w() <= i) {
        v.witness = "degree " + std::to_string(i) + " invariant coefficient of x^" + nlohmann::json(J).dump() +
                    " has valuation " + c.valuation().str() + " <= " +
                    rational_str(Rational(i, h.ring->ctx()->e()));
        return v;
      }
    }
  }
  PAdicScalar pinv = PAdicScalar::pi(h.ring->ctx()).inverse();
  for (int i = 0; i < h.dim; ++i) {
    SeriesMatrix hat = h.theta[i].scale(h.ring->constant(pinv));
    std::string w;
    if (!residue_nilpotent(hat, h.ring->ctx()->p(), &w)) {
      v.witness = "theta_" + std::to_string(i + 1) + " / (zeta_p - 1): " + w;
      return v;
    }
  }
  v.small = true;
  return v;
}

SmallnessVerdict check_small_rep(const GammaRepDatum& g) {
  check_commuting(g.gamma);
  const ModelRing* R1 = model_ring(g.ring->ctx(), 1);
  Series c = R1->gamma_constant();
  Series cinv = c.inverse();
  SmallnessVerdict v;
  for (int i = 0; i < g.dim; ++i) {
    SeriesMatrix G = g.gamma[i].truncate(R1);
    SeriesMatrix hat = sub_identity(G).scale(cinv);
    std::string w;
    if (!residue_nilpotent(hat, g.ring->ctx()->p(), &w)) {
      v.theta_hat.clear();
      v.witness = "(gamma_" + std::to_string(i + 1) + " - 1) / rho_K(zeta_p - 1): " + w;
      return v;
    }
    SeriesMatrix L;
    try {
      L = matrix_log(G);
    } catch (const DivergentSeries& e) {
      throw NotSmall(std::string("log(gamma_") + std::to_string(i + 1) + ") diverges: " + e.what());
    }
    v.theta_hat.push_back(L.scale(cinv));
  }
  v.small = true;
  return v;
}

GammaRepDatum higgs_to_rep_closed(const HiggsDatum& h) {
  SmallnessVerdict v = check_small_higgs(h);
  if (!v.small) throw NotSmall(v.witness);
  GammaRepDatum g;
  g.ring = h.ring;
  g.rank = h.rank;
  g.dim = h.dim;
  Series rho = h.ring->constant(h.ring->rho());
  for (const auto& th : h.theta) g.gamma.push_back(matrix_exp(th.scale(rho)));
  return g;
}

// ---------------------------------------------------------------- exp / log

SeriesMatrix matrix_exp(const SeriesMatrix& x) {
  const ModelRing* R = x.ring();
  Ctx ctx = R->ctx();
  int n = R->n();
  long long T = std::min(x.abs_precision(), ctx->max_rel());
  long long wt = n > 1 ? coef_gauss(x, 1, n) : kInfVal;
  long long big = T + 4 + 2LL * n * (std::max(0LL, -std::min(wt, 0LL)) + 2);
  long long w0 = std::min(coef_gauss(x, 0, 1), big);
  wt = std::min(wt, big);
  if (w0 <= 1) throw DivergentSeries("matrix exponential diverges: valuation of the constant part <= 1/(p-1)");
  // v(X^k / k!) >= power_bound - (k - 1)
  auto ok = [&](long long k) { return power_bound(k, w0, wt, n) - (k - 1) >= T; };
  long long K = 1;
  auto window_ok = [&](long long k) {
    for (long long j = k; j <= k + n; ++j)
      if (!ok(j)) return false;
    return true;
  };
  while (!window_ok(K)) ++K;
  SeriesMatrix sum = SeriesMatrix::identity(R, x.rows()), term = sum;
  for (long long k = 1; k < K; ++k) {
    term = (term * x).scale(R->constant(PAdicScalar::from_int(ctx, k).inverse()));
    sum = sum + term;
  }
  return sum.cap_abs(T);
}

SeriesMatrix matrix_log(const SeriesMatrix& g) {
  const ModelRing* R = g.ring();
  Ctx ctx = R->ctx();
  int n = R->n(), e = ctx->e(), p = ctx->p();
  SeriesMatrix y = sub_identity(g);
  long long T = y.abs_precision();
  if (T >= kInfVal) return SeriesMatrix(R, g.rows(), g.cols());
  long long wt = n > 1 ? coef_gauss(y, 1, n) : kInfVal;
  long long big = T + 4 + 2LL * n * (std::max(0LL, -std::min(wt, 0LL)) + 2);
  long long w0 = std::min(coef_gauss(y, 0, 1), big);
  wt = std::min(wt, big);
  if (w0 <= 0) throw DivergentSeries("matrix logarithm diverges: valuation of (g - 1) mod t is <= 0");
  auto ok = [&](long long k) { return power_bound(k, w0, wt, n) - static_cast<long long>(e) * vp_int(k, p) >= T; };
  auto window_ok = [&](long long k) {
    for (long long j = k; j <= 4 * k + 4 * n + 64; ++j)
      if (!ok(j)) return false;
    return true;
  };
  long long K = 1;
  while (!window_ok(K)) ++K;
  SeriesMatrix sum(R, g.rows(), g.cols()), pw = y;
  for (long long k = 1; k < K; ++k) {
    SeriesMatrix term = pw.scale(R->constant(PAdicScalar::from_int(ctx, k).inverse()));
    sum = (k % 2) ? sum + term : sum - term;
    pw = pw * y;
  }
  return sum.cap_abs(T);
}

SeriesMatrix kron(const SeriesMatrix& a, const SeriesMatrix& b) {
  SeriesMatrix out(a.ring(), a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) out.at(i * b.rows() + k, j * b.cols() + l) = a.at(i, j) * b.at(k, l);
  return out;
}

// ---------------------------------------------------------------- window complexes

int window_index(int d, int r, int deg, int subset, const MultiIndex& J, int k) {
  Layout lay(d, r, deg);
  return lay.index(subset, lay.pos.at(J), k);
}

SparseMatrix window_differential(const ModelRing* ring, int d, int r, const std::vector<SeriesMatrix>& M,
                                 const Series& s, int q, int src_deg, int tgt_deg) {
  if (!M.empty() && static_cast<int>(M.size()) != d) throw ConfigMismatch("need one operator per direction");
  Layout src(d, r, src_deg), tgt(d, r, tgt_deg);
  auto Sq = subsets(d, q), Sq1 = subsets(d, q + 1);
  std::map<std::vector<int>, int> tidx;
  for (size_t i = 0; i < Sq1.size(); ++i) tidx[Sq1[i]] = static_cast<int>(i);
  SparseMatrix out;
  out.ring = ring;
  out.rows = static_cast<int>(Sq1.size()) * tgt.size() * r;
  out.cols = static_cast<int>(Sq.size()) * src.size() * r;
  out.row.resize(static_cast<size_t>(out.rows));
  bool s_zero = exact_zero(s);
  for (size_t si = 0; si < Sq.size(); ++si) {
    const auto& S = Sq[si];
    for (int i = 0; i < d; ++i) {
      if (std::find(S.begin(), S.end(), i) != S.end()) continue;
      int before = 0;
      for (int j : S)
        if (j < i) ++before;
      std::vector<int> T = S;
      T.push_back(i);
      std::sort(T.begin(), T.end());
      int ti = tidx.at(T);
      for (int j = 0; j < src.size(); ++j) {
        const MultiIndex& J = src.mons[j];
        int degJ = degree(J);
        for (int k = 0; k < r; ++k) {
          int col = src.index(static_cast<int>(si), j, k);
          if (!M.empty() && degJ <= tgt_deg) {
            int tj = tgt.pos.at(J);
            for (int b = 0; b < r; ++b) {
              const Series& v = M[i].at(b, k);
              if (exact_zero(v)) continue;
              out.row[tgt.index(ti, tj, b)].emplace_back(col, before % 2 ? -v : v);
            }
          }
          if (!s_zero && J[i] > 0 && degJ - 1 <= tgt_deg) {
            MultiIndex K = J;
            K[i] -= 1;
            out.row[tgt.index(ti, tgt.pos.at(K), k)].emplace_back(col, before % 2 ? -s : s);
          }
        }
      }
    }
  }
  for (auto& row : out.row)
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

ComplexData window_complex(const ModelRing* ring, int d, int r, const std::vector<SeriesMatrix>& M, const Series& s,
                           int D) {
  ComplexData c;
  c.ring = ring;
  for (int q = 0; q <= d; ++q) {
    Layout lay(d, r, D - q);
    c.ranks.push_back(static_cast<int>(subsets(d, q).size()) * lay.size() * r);
  }
  for (int q = 0; q < d; ++q) c.d.push_back(window_differential(ring, d, r, M, s, q, D - q, D - q - 1));
  return c;
}

// ---------------------------------------------------------------- RH functors

MicToRep mic_to_rep(const ConnectionDatum& m, int pd_cap) {
  check_commuting(m.nabla);
  SmallnessVerdict v = check_small_higgs(higgs_reduction(m));
  if (!v.small) throw NotSmall(v.witness);
  const ModelRing* R = m.ring;
  Sections S = horizontal_sections(R, m.dim, m.rank, m.nabla, -R->u(), pd_cap);
  SeriesMatrix X0inv = safe_inverse(S.X0, "W = 0 block of the horizontal sections");
  MicToRep out;
  out.basis = S.X0;
  out.decided = S.decided;
  out.rep.ring = R;
  out.rep.rank = m.rank;
  out.rep.dim = m.dim;
  Series c = R->gamma_constant();
  for (int i = 0; i < m.dim; ++i) {
    SeriesMatrix A = X0inv * S.XE[i];
    out.deriv.push_back(A);
    out.rep.gamma.push_back(matrix_exp(A.scale(c)));
  }
  return out;
}

RepToMic rep_to_mic(const GammaRepDatum& g, int pd_cap) {
  SmallnessVerdict v = check_small_rep(g);
  if (!v.small) throw NotSmall(v.witness);
  const ModelRing* R = g.ring;
  Ctx ctx = R->ctx();
  int d = g.dim, r = g.rank, n = R->n(), e = ctx->e();
  Series c = R->gamma_constant();
  std::vector<SeriesMatrix> L;
  for (const auto& G : g.gamma) L.push_back(matrix_log(G));
  Sections S = horizontal_sections(R, d, r, L, c, pd_cap);
  SeriesMatrix Y0inv = safe_inverse(S.X0, "W = 0 block of the invariants");
  RepToMic out;
  out.basis = S.X0;
  out.decided = S.decided;
  out.mic.ring = R;
  out.mic.rank = r;
  out.mic.dim = d;
  for (int i = 0; i < d; ++i) out.mic.nabla.push_back((Y0inv * S.XE[i]).scale(-R->u()));

  // residual of (gamma_i (x) shift_i - 1) on the window |K| <= D - 1, against the
  // tail bound of the omitted terms c^k/k! G y_{K + k E_i}
  Layout lay(d, r, pd_cap);
  long long wc = c.gauss_w();
  long long mu = kInfVal;
  Series cinv = c.inverse();
  for (const auto& l : L) mu = std::min(mu, l.scale(cinv).gauss_w());
  mu = std::min(mu, 0LL);
  std::vector<Series> ck{R->one()};
  for (int k = 1; k <= pd_cap; ++k) ck.push_back((ck.back() * c).scale(PAdicScalar::from_int(ctx, k).inverse()));
  for (const auto& vec : S.vectors) {
    std::map<MultiIndex, std::vector<Series>> blocks;
    long long gy = kInfVal;
    for (const auto& [idx, val] : vec) {
      int k = idx % r, j = idx / r;
      auto& b = blocks[lay.mons[j]];
      if (b.empty()) b.assign(static_cast<size_t>(r), R->zero());
      b[k] = val;
      gy = std::min(gy, val.gauss_w());
    }
    for (int i = 0; i < d; ++i)
      for (const auto& K : lay.mons) {
        int degK = degree(K);
        if (degK > pd_cap - 1) continue;
        std::vector<Series> res(static_cast<size_t>(r), R->zero());
        for (int k = 0; degK + k <= pd_cap; ++k) {
          MultiIndex J = K;
          J[i] += k;
          auto it = blocks.find(J);
          if (it == blocks.end()) continue;
          for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) res[a] += ck[k] * g.gamma[i].at(a, b) * it->second[b];
        }
        auto self = blocks.find(K);
        if (self != blocks.end())
          for (int a = 0; a < r; ++a) res[a] -= self->second[a];
        long long k0 = pd_cap - degK + 1;
        long long bound = kInfVal;
        long long fact_v = 0;
        for (long long k = 2; k < k0; ++k) fact_v += vp_int(k, ctx->p());
        for (long long k = k0; k <= k0 + 64; ++k) {
          if (k >= 2) fact_v += vp_int(k, ctx->p());
          bound = std::min(bound, k * (wc + mu) - e * fact_v + gy);
        }
        for (const auto& x : res) {
          long long w = x.gauss_w();
          long long prec = x.abs_precision();
          out.residual_margin = std::min(out.residual_margin, w - std::min(bound, prec));
        }
      }
  }
  (void)n;
  return out;
}

GammaRepDatum exponential_rep(const ConnectionDatum& m) {
  GammaRepDatum g;
  g.ring = m.ring;
  g.rank = m.rank;
  g.dim = m.dim;
  Series rho = m.ring->constant(m.ring->rho());
  for (const auto& x : m.nabla) g.gamma.push_back(matrix_exp(x.scale(rho)));
  return g;
}

namespace {

Rational defect(const SeriesMatrix& d) { return valuation_p(d.gauss_w(), d.ring()->ctx()->e()); }

SeriesMatrix standard_gamma(const MicToRep& a, int i) { return a.basis * a.rep.gamma[i] * a.basis.inverse(); }

}  // namespace

RoundtripReport roundtrip_check(const ConnectionDatum& m, int pd_cap, Rational required) {
  RoundtripReport rep;
  const ModelRing* R = m.ring;
  int e = R->ctx()->e();
  MicToRep a = mic_to_rep(m, pd_cap);
  RepToMic b = rep_to_mic(a.rep, pd_cap);
  rep.base_change_mic = a.basis * b.basis;
  rep.defect_mic = Rational(kInfVal / 2, e);
  for (int i = 0; i < m.dim; ++i)
    rep.defect_mic = std::min(rep.defect_mic,
                              defect(rep.base_change_mic * b.mic.nabla[i] - m.nabla[i] * rep.base_change_mic));

  GammaRepDatum g0 = exponential_rep(m);
  RepToMic c = rep_to_mic(g0, pd_cap);
  MicToRep f = mic_to_rep(c.mic, pd_cap);
  rep.base_change_rep = c.basis * f.basis;
  rep.defect_rep = Rational(kInfVal / 2, e);
  for (int i = 0; i < m.dim; ++i)
    rep.defect_rep = std::min(rep.defect_rep,
                              defect(rep.base_change_rep * f.rep.gamma[i] - g0.gamma[i] * rep.base_change_rep));

  HitchinPoint h0 = hitchin_invariants(higgs_reduction(m));
  bool same = hitchin_equal(h0, hitchin_invariants(higgs_reduction(b.mic))) &&
              hitchin_equal(h0, hitchin_invariants(higgs_reduction(c.mic)));
  SmallnessVerdict sv = check_small_rep(a.rep);
  HiggsDatum from_rep;
  from_rep.ring = model_ring(R->ctx(), 1);
  from_rep.rank = m.rank;
  from_rep.dim = m.dim;
  for (const auto& th : sv.theta_hat) from_rep.theta.push_back(th.scale(from_rep.ring->u()));
  same = same && hitchin_equal(h0, hitchin_invariants(from_rep));
  rep.hitchin_preserved = same;

  // tensor square and dual
  ConnectionDatum tens{R, m.rank * m.rank, m.dim, {}}, dual{R, m.rank, m.dim, {}};
  SeriesMatrix I = SeriesMatrix::identity(R, m.rank);
  for (const auto& x : m.nabla) {
    tens.nabla.push_back(kron(x, I) + kron(I, x));
    dual.nabla.push_back(x.transpose().scale(R->from_int(-1)));
  }
  MicToRep at = mic_to_rep(tens, pd_cap), ad = mic_to_rep(dual, pd_cap);
  for (int i = 0; i < m.dim; ++i) {
    SeriesMatrix gs = standard_gamma(a, i);
    Rational dt = defect(standard_gamma(at, i) - kron(gs, gs));
    Rational dd = defect(standard_gamma(ad, i) - gs.transpose().inverse());
    if (dt < required || dd < required) rep.tensor_dual_ok = false;
  }

  rep.pass = rep.defect_mic >= required && rep.defect_rep >= required && rep.hitchin_preserved && rep.tensor_dual_ok;
  if (!rep.pass) {
    rep.failure = "defects " + rational_str(rep.defect_mic) + ", " + rational_str(rep.defect_rep) +
                  (rep.hitchin_preserved ? "" : "; Hitchin invariants changed") +
                  (rep.tensor_dual_ok ? "" : "; tensor/dual compatibility failed");
  }
  return rep;
}

nlohmann::json roundtrip_to_json(const RoundtripReport& r) {
  auto val = [](const Rational& x) {
    return x >= Rational(kInfVal / 4, 1) ? std::string("inf") : rational_str(x);
  };
  nlohmann::json j{{"pass", r.pass},
                   {"defect_mic", val(r.defect_mic)},
                   {"defect_rep", val(r.defect_rep)},
                   {"hitchin_preserved", r.hitchin_preserved},
                   {"tensor_dual", r.tensor_dual_ok}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

// ---------------------------------------------------------------- cohomology

CohomologyReport gamma_cohomology(const GammaRepDatum& g) {
  std::vector<SeriesMatrix> ops;
  for (const auto& G : g.gamma) ops.push_back(sub_identity(G));
  return cohomology_compute(koszul_build(g.ring, ops));
}

CohomologyReport de_rham_cohomology(const ConnectionDatum& m) {
  return cohomology_compute(koszul_build(m.ring, m.nabla));
}

// ---------------------------------------------------------------- Poincare lemma

namespace {

Series random_coefficient(const ModelRing* R, std::mt19937_64& rng) {
  Series s = R->zero();
  for (int k = 0; k < R->n(); ++k)
    if (rng() % 4) s[k] = random_scalar(R->ctx(), rng, -2, 6);
  return s;
}

}  // namespace

PoincareReport poincare_check(const ModelRing* R, int d, int D, int samples, std::mt19937_64& rng) {
  PoincareReport rep;
  Series s = -R->u();
  const std::vector<SeriesMatrix> none;
  {
    SparseMatrix d0 = window_differential(R, d, 1, none, s, 0, D - 1, D - 2);
    Echelon e(R, d0.row, d0.cols, d0.cols);
    auto K = e.kernel();
    Layout lay(d, 1, D - 1);
    MultiIndex zero(static_cast<size_t>(d), 0);
    int zpos = lay.index(0, lay.pos.at(zero), 0);
    rep.h0_is_constants = K.size() == 1 && K[0].torsion == R->n() && K[0].v.size() == 1 &&
                          K[0].v[0].first == zpos && K[0].v[0].second.t_order() == 0;
  }
  auto subs_q = [&](int q) { return subsets(d, q); };
  for (int q = 1; q <= d; ++q) {
    Layout cl(d, 1, D - 1), el(d, 1, D);
    // cocycle generators in Lambda^q (x) P_{<= D-1}
    std::vector<SparseVec> gens;
    int csize = static_cast<int>(subs_q(q).size()) * cl.size();
    if (q < d) {
      SparseMatrix dq = window_differential(R, d, 1, none, s, q, D - 1, D - 2);
      Echelon e(R, dq.row, dq.cols, dq.cols);
      for (auto& kv : e.kernel()) gens.push_back(kv.v);
    } else {
      for (int i = 0; i < csize; ++i) gens.push_back({{i, R->one()}});
    }
    std::vector<std::vector<Series>> omegas;
    for (int smp = 0; smp < samples; ++smp) {
      std::vector<Series> w(static_cast<size_t>(csize), R->zero());
      for (const auto& gvec : gens) {
        if (rng() % 3 == 0) continue;
        Series coef = random_coefficient(R, rng);
        for (const auto& [i, v] : gvec) w[i] += coef * v;
      }
      omegas.push_back(std::move(w));
    }
    SparseMatrix dprev = window_differential(R, d, 1, none, s, q - 1, D, D - 1);
    std::vector<SparseVec> rows = dprev.row;
    int ncols = dprev.cols;
    for (int smp = 0; smp < samples; ++smp)
      for (int i = 0; i < csize; ++i)
        if (!omegas[smp][i].is_zero()) rows[i].emplace_back(ncols + smp, omegas[smp][i]);
    Echelon e(R, rows, ncols + samples, ncols);
    auto Sprev = subs_q(q - 1), Sq = subs_q(q);
    int certified = 0;
    for (int smp = 0; smp < samples; ++smp) {
      ++rep.cocycles;
      auto x = e.solve(ncols + smp);
      if (!x) continue;
      // rebuild eta as PD elements and apply the connection directly
      std::vector<PDElement> eta(Sprev.size(), PDElement(R, d, D));
      for (const auto& [idx, v] : *x) {
        int si = idx / el.size(), j = idx % el.size();
        eta[si].add_term(el.mons[j], v);
      }
      bool ok = true;
      for (size_t ti = 0; ti < Sq.size() && ok; ++ti) {
        const auto& T = Sq[ti];
        PDElement lhs(R, d, D);
        for (int i : T) {
          std::vector<int> S;
          int before = 0;
          for (int j : T)
            if (j != i) {
              S.push_back(j);
              if (j < i) ++before;
            }
          int si = static_cast<int>(std::find(Sprev.begin(), Sprev.end(), S) - Sprev.begin());
          PDElement term = pd_connection(eta[si]).comps[i];
          lhs = before % 2 ? lhs - term : lhs + term;
        }
        PDElement rhs(R, d, D);
        for (int j = 0; j < cl.size(); ++j) rhs.add_term(cl.mons[j], omegas[smp][ti * cl.size() + j]);
        ok = lhs.equals(rhs);
      }
      if (ok) ++certified;
    }
    rep.coboundaries += certified;
    rep.per_degree.push_back(certified);
  }
  return rep;
}

// ---------------------------------------------------------------- devissage

DevissageVerdict devissage_lift(const ModelRing* R, int gens, const std::vector<SparseVec>& relations) {
  int m = R->n();
  DevissageVerdict v;
  int lenN = span_length(R, relations, gens);
  std::vector<int> L(static_cast<size_t>(m + 1), 0);
  for (int j = 0; j < m; ++j) {
    std::vector<SparseVec> g = relations;
    Series tj = R->one().shift_up(j);
    for (int i = 0; i < gens; ++i) g.push_back({{i, tj}});
    L[j] = span_length(R, g, gens) - lenN;
  }
  for (int j = 0; j < m; ++j) v.graded_lengths.push_back(L[j] - L[j + 1]);
  v.rank = v.graded_lengths.empty() ? 0 : v.graded_lengths[0];
  for (int j = 1; j < m; ++j)
    if (v.graded_lengths[j] != v.rank) {
      v.failing_n = j;
      return v;
    }
  // lift a basis of M/tM: generators outside the pivot columns of the relations mod t
  const ModelRing* R1 = model_ring(R->ctx(), 1);
  std::vector<SparseVec> red;
  for (const auto& rel : relations) {
    SparseVec x;
    for (const auto& [i, s] : rel) x.emplace_back(i, s.truncate(1));
    red.push_back(x);
  }
  Echelon e(R1, red, gens, gens);
  std::vector<bool> piv(static_cast<size_t>(gens), false);
  for (int c : e.pivot_columns()) piv[c] = true;
  for (int i = 0; i < gens; ++i)
    if (!piv[i]) v.basis.push_back({{i, R->one()}});
  std::vector<SparseVec> g = relations;
  for (const auto& b : v.basis) g.push_back(b);
  bool generates = span_length(R, g, gens) == gens * m;
  bool free = L[0] == static_cast<int>(v.basis.size()) * m;
  v.projective = generates && free && static_cast<int>(v.basis.size()) == v.rank;
  return v;
}

// ---------------------------------------------------------------- annihilation

AnnihilationVerdict annihilation_check(const GammaRepDatum& g, int D) {
  if (g.dim != 1 || g.ring->n() != 1) throw ConfigMismatch("annihilation check needs d = 1 and t_order 1");
  const ModelRing* R = g.ring;
  Ctx ctx = R->ctx();
  int r = g.rank;
  if (g.gamma[0].gauss_w() < 0) throw PreconditionFailed("gamma is not integral");
  // work modulo p^N: the invariant tails exp(-theta W) then end below degree D
  long long T = ctx->max_rel();
  SeriesMatrix G = g.gamma[0].cap_abs(T);
  int K = D - ctx->N() - (r - 1);
  if (K < 0)
    throw TruncationOverflow("pd_cap " + std::to_string(D) + " leaves no reliable window; need at least " +
                             std::to_string(ctx->N() + r - 1));
  Series c = R->gamma_constant();
  std::vector<Series> ck{R->one()};
  for (int k = 1; k <= D; ++k) ck.push_back((ck.back() * c).scale(PAdicScalar::from_int(ctx, k).inverse()));
  int ncols = (D + 1) * r;
  std::vector<SparseVec> rows(static_cast<size_t>(ncols));
  // column (m, k): (gamma - 1)(e_k W^[m]) = sum_j c^j/j! G e_k W^[m-j] - e_k W^[m]
  for (int m = 0; m <= D; ++m)
    for (int k = 0; k < r; ++k) {
      int col = m * r + k;
      for (int j = 0; j <= m; ++j)
        for (int b = 0; b < r; ++b) {
          Series v = ck[j] * G.at(b, k);
          if (j == 0 && b == k) v -= R->one();
          v = v.cap_abs(T);
          if (!v.is_zero()) rows[(m - j) * r + b].emplace_back(col, v);
        }
    }
  AnnihilationVerdict out;
  out.window = (K + 1) * r;
  for (int q = 0; q < out.window; ++q) rows[q].emplace_back(ncols + q, c);
  for (auto& row : rows) std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Echelon e(R, rows, ncols + out.window, ncols, OrderMode::p_adic, T);
  for (int q = 0; q < out.window; ++q)
    if (e.solve(ncols + q)) ++out.solved;
  out.holds = out.solved == out.window;
  return out;
}

// ---------------------------------------------------------------- generator

namespace {

Series random_integral(const ModelRing* R, std::mt19937_64& rng, int density) {
  Series s = R->zero();
  for (int k = 0; k < R->n(); ++k)
    if (static_cast<int>(rng() % 4) < density) s[k] = random_scalar(R->ctx(), rng, 0, 2);
  return s;
}

}  // namespace

ConnectionDatum generate_connection(const ModelRing* R, int r, int d, std::mt19937_64& rng, bool small) {
  Ctx ctx = R->ctx();
  int n = R->n();
  SeriesMatrix A(R, r, r);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) A.at(i, j) = random_integral(R, rng, 2);
  SeriesMatrix P = SeriesMatrix::identity(R, r);
  for (int k = 0; k < 2 * r && r > 1; ++k) {
    int i = static_cast<int>(rng() % r), j = static_cast<int>(rng() % r);
    if (i == j) continue;
    SeriesMatrix E = SeriesMatrix::identity(R, r);
    E.at(i, j) = random_integral(R, rng, 2);
    P = P * E;
  }
  SeriesMatrix Pinv = P.inverse();
  std::vector<SeriesMatrix> powers{SeriesMatrix::identity(R, r)};
  for (int k = 1; k < r; ++k) powers.push_back(powers.back() * A);
  ConnectionDatum m;
  m.ring = R;
  m.rank = r;
  m.dim = d;
  for (int i = 0; i < d; ++i) {
    Series lambda = R->zero();
    if (small || i > 0) {
      // p^a * unit * t^j with random t-order j (j = n gives 0)
      int a = 1 + static_cast<int>(rng() % 2);
      int j = static_cast<int>(rng() % (n + 1));
      if (j < n) {
        Series unit = random_integral(R, rng, 4);
        unit[0] = random_scalar(ctx, rng, 0, 0);
        PAdicScalar pa = PAdicScalar::from_int(ctx, ctx->p()).pow(static_cast<unsigned>(a));
        lambda = unit.scale(pa).shift_up(j);
      }
    } else {
      lambda = R->one();
    }
    SeriesMatrix th = SeriesMatrix::identity(R, r).scale(lambda);
    for (int k = 1; k < r; ++k) {
      long long a = static_cast<long long>(rng() % 5) - 2;
      if (a) th = th + powers[k].scale(R->from_int(a));
    }
    m.nabla.push_back((P * th * Pinv).scale(R->u()));
  }
  return m;
}

// ---------------------------------------------------------------- JSON

nlohmann::json matrices_to_json(const std::vector<SeriesMatrix>& ms) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : ms) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(series_to_json(m.at(i, j)));
      rows.push_back(row);
    }
    out.push_back(rows);
  }
  return out;
}

std::vector<SeriesMatrix> matrices_from_json(const ModelRing* R, int rank, const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("expected a list of matrices");
  std::vector<SeriesMatrix> out;
  for (const auto& mj : j) {
    if (!mj.is_array() || static_cast<int>(mj.size()) != rank) throw InputError("matrix must have rank rows");
    SeriesMatrix m(R, rank, rank);
    for (int a = 0; a < rank; ++a) {
      if (!mj[a].is_array() || static_cast<int>(mj[a].size()) != rank)
        throw InputError("matrix row must have rank entries");
      for (int b = 0; b < rank; ++b) m.at(a, b) = series_from_json(R->ctx(), R->n(), mj[a][b]);
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace prh
