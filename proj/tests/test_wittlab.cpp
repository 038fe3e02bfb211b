#include <doctest.h>

#include <nlohmann/json.hpp>

#include "prh/wittlab.hpp"

using namespace prh;

namespace {

PerfectBase mono(int p, int e = 3) { return PerfectBase::perfect_monomial(p, {"x", "y", "z"}, e); }

WittVector random_witt(const PerfectBase& B, int m, std::mt19937_64& rng) {
  std::vector<BaseElem> c;
  for (int i = 0; i < m; ++i) c.push_back(B.random(rng, 1 + static_cast<int>(rng() % 2), 1));
  return WittVector(B, c);
}

BaseElem monomial(const PerfectBase& B, std::vector<long long> key, long c = 1) {
  BaseElem a;
  a.terms[key] = c;
  return B.reduce(a);
}

mpz_class binom(int n, int k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return r;
}

}  // namespace

TEST_CASE("Teichmueller representatives") {
  std::mt19937_64 rng(1);
  for (int p : {2, 3, 5}) {
    PerfectBase B = mono(p);
    for (int m = 1; m <= 3; ++m) {
      CHECK(teichmueller(B, B.one(), m).equals(witt_from_int(B, m, 1)));
      for (int it = 0; it < 5; ++it) {
        BaseElem x = B.random(rng, 1, 2), y = B.random(rng, 1, 2);
        CHECK(witt_product(teichmueller(B, x, m), teichmueller(B, y, m)).equals(teichmueller(B, B.mul(x, y), m)));
        CHECK(frobenius_shift(teichmueller(B, x, m), Shift::phi).equals(teichmueller(B, B.frob(x), m)));
      }
    }
    PerfectBase L = B.lift();
    BaseElem x = L.variable(0);
    auto w = ghost(teichmueller(L, x, 3));
    CHECK(L.equals(w[0], x));
    CHECK(L.equals(w[1], L.pow(x, static_cast<unsigned long>(p))));
    CHECK(L.equals(w[2], L.pow(x, static_cast<unsigned long>(p * p))));
  }
}

TEST_CASE("universal polynomials against closed forms") {
  for (int p : {2, 3, 5}) {
    const auto& S = universal_polynomials(p, 2, WittOp::sum);
    const auto& P = universal_polynomials(p, 2, WittOp::product);
    // S_1 = X_1 + Y_1 - sum_{0<k<p} binom(p,k)/p X_0^k Y_0^{p-k}
    IntPoly s1;
    auto key = [](int x0, int x1, int y0, int y1) {
      std::vector<int> k(8, 0);
      k[0] = x0;
      k[1] = x1;
      k[4] = y0;
      k[5] = y1;
      return k;
    };
    s1[key(0, 1, 0, 0)] = 1;
    s1[key(0, 0, 0, 1)] = 1;
    for (int k = 1; k < p; ++k) s1[key(k, 0, p - k, 0)] = -binom(p, k) / p;
    CHECK(S[1] == s1);
    IntPoly p1{{key(p, 0, 0, 1), 1}, {key(0, 1, p, 0), 1}, {key(0, 1, 0, 1), p}};
    CHECK(P[1] == p1);
  }
  CHECK_THROWS_AS(universal_polynomials(2, 5, WittOp::sum), SizeLimit);
}

TEST_CASE("characteristic 2 carry") {
  PerfectBase B = mono(2);
  BaseElem x = B.variable(0), y = B.variable(1);
  WittVector s = witt_sum(teichmueller(B, x, 2), teichmueller(B, y, 2));
  CHECK(B.equals(s[0], B.add(x, y)));
  CHECK(B.equals(s[1], B.mul(x, y)));
}

TEST_CASE("Witt ring axioms") {
  std::mt19937_64 rng(2);
  std::vector<PerfectBase> bases{mono(2), mono(3), PerfectBase::finite_field(2, 3), PerfectBase::finite_field(3, 2),
                                 PerfectBase::finite_field(5, 1)};
  for (const auto& B : bases)
    for (int m = 1; m <= 3; ++m)
      for (int it = 0; it < 4; ++it) {
        WittVector a = random_witt(B, m, rng), b = random_witt(B, m, rng), c = random_witt(B, m, rng);
        WittVector zero = witt_zero(B, m), one = witt_from_int(B, m, 1);
        CHECK(witt_sum(a, zero).equals(a));
        CHECK(witt_product(a, one).equals(a));
        CHECK(witt_sum(a, b).equals(witt_sum(b, a)));
        CHECK(witt_sum(witt_sum(a, b), c).equals(witt_sum(a, witt_sum(b, c))));
        CHECK(witt_product(a, b).equals(witt_product(b, a)));
        CHECK(witt_product(witt_product(a, b), c).equals(witt_product(a, witt_product(b, c))));
        CHECK(witt_product(a, witt_sum(b, c)).equals(witt_sum(witt_product(a, b), witt_product(a, c))));
        CHECK(witt_sum(a, witt_neg(a)).equals(zero));
        // phi o V = V o phi = p
        WittVector pa = witt_product(witt_from_int(B, m, B.p()), a);
        CHECK(frobenius_shift(frobenius_shift(a, Shift::V), Shift::phi).equals(pa));
        CHECK(frobenius_shift(frobenius_shift(a, Shift::phi), Shift::V).equals(pa));
      }
  // p = 3, length 2: 3 = (0, 1) but 2 is not of that form
  PerfectBase B = mono(3);
  CHECK(witt_from_int(B, 2, 3).equals(WittVector(B, {B.zero(), B.one()})));
  CHECK_FALSE(witt_from_int(B, 2, 2).equals(WittVector(B, {B.zero(), B.one()})));
  CHECK_THROWS_AS(witt_sum(witt_zero(mono(3), 2), witt_zero(mono(5), 2)), ConfigMismatch);
  CHECK_THROWS_AS(witt_zero(B, 5), SizeLimit);
}

TEST_CASE("ghost map is a ring homomorphism on lifted bases") {
  std::mt19937_64 rng(3);
  for (int p : {2, 3}) {
    PerfectBase L = mono(p).lift();
    for (int m = 1; m <= 3; ++m)
      for (int it = 0; it < 6; ++it) {
        WittVector a = random_witt(L, m, rng), b = random_witt(L, m, rng);
        auto ga = ghost(a), gb = ghost(b), gs = ghost(witt_sum(a, b)), gp = ghost(witt_product(a, b));
        auto gn = ghost(witt_neg(a));
        for (int j = 0; j < m; ++j) {
          CHECK(L.equals(gs[j], L.add(ga[j], gb[j])));
          CHECK(L.equals(gp[j], L.mul(ga[j], gb[j])));
          CHECK(L.equals(gn[j], L.neg(ga[j])));
        }
      }
    // V(1) has ghost components (0, p, p, ...)
    auto gv = ghost(frobenius_shift(witt_from_int(L, 3, 1), Shift::V));
    CHECK(gv[0].terms.empty());
    CHECK(L.equals(gv[1], L.from_int(p)));
    CHECK(L.equals(gv[2], L.from_int(p)));
  }
  CHECK_THROWS_AS(ghost(witt_zero(mono(2), 2)), ConfigMismatch);
}

TEST_CASE("Teichmueller difference expansion") {
  for (int p : {2, 3}) {
    PerfectBase B = PerfectBase::perfect_monomial(p, {"X", "Y"}, 2);
    TeichDifference t = teich_difference_expansion(B, 3);
    REQUIRE(t.P.size() == 3);
    CHECK(B.equals(t.P[0], B.sub(B.variable(0), B.variable(1))));
    for (int n = 0; n < 3; ++n) CHECK(t.divisible[n]);
    // the quotient times X^{1/p^n} - Y^{1/p^n} gives P_n back
    BaseElem u = B.variable(0), v = B.variable(1);
    for (int n = 0; n < 3; ++n) {
      CHECK(B.equals(B.mul(t.quotients[n], B.sub(u, v)), t.P[n]));
      if (n == 2) break;
      u = B.root(u);
      v = B.root(v);
    }
  }
  // p = 3, m = 2 against the ghost equation d_1 = (X^3 - Y^3 - (X - Y)^3) / 3 = X^2 Y - X Y^2
  {
    PerfectBase B = PerfectBase::perfect_monomial(3, {"X", "Y"}, 1);
    TeichDifference t = teich_difference_expansion(B, 2);
    long long s = 3;
    std::map<std::pair<int, int>, mpz_class> d1;
    for (int k = 0; k <= 3; ++k) {
      mpz_class c = binom(3, k) * ((3 - k) % 2 ? -1 : 1);
      if (k == 3) c -= 1;
      if (k == 0) c -= -1;
      d1[{k, 3 - k}] -= c;
    }
    BaseElem expect;
    for (const auto& [e, c] : d1) {
      if (c == 0) continue;
      mpz_class q = c / 3;
      expect = B.add(expect, monomial(B, {e.first * s, e.second * s}, q.get_si()));
    }
    expect = B.root(expect);
    CHECK(B.equals(t.P[1], expect));
    // P_1 = X^{2/3} Y^{1/3} - X^{1/3} Y^{2/3}, quotient X^{1/3} Y^{1/3}
    CHECK(B.equals(t.quotients[1], monomial(B, {1, 1})));
  }
  CHECK_THROWS_AS(teich_difference_expansion(PerfectBase::perfect_monomial(2, {"X", "Y"}, 1), 3), ConfigMismatch);
  CHECK_THROWS_AS(teich_difference_expansion(PerfectBase::finite_field(2, 2), 2), ConfigMismatch);
}

TEST_CASE("finite fields and JSON") {
  PerfectBase F = PerfectBase::finite_field(2, 3);
  BaseElem a = F.variable(0);
  // the Frobenius has order 3 and the root inverts it
  CHECK(F.equals(F.frob(F.frob(F.frob(a))), a));
  CHECK(F.equals(F.root(F.frob(a)), a));
  CHECK_FALSE(F.equals(F.frob(a), a));
  nlohmann::json j = witt_to_json(teichmueller(mono(2), mono(2).variable(0), 2));
  CHECK(j["components"][0] == "x");
  CHECK(j["length"] == 2);
}
