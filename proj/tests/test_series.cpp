#include <doctest.h>

#include <nlohmann/json.hpp>

#include "prh/series.hpp"

using namespace prh;

namespace {

Ctx field(int p, int N = 8) { return FieldContext::get({p, N, 1, Rational(0)}); }

Series random_series(const ModelRing& R, std::mt19937_64& rng) {
  Series s = R.zero();
  for (int k = 0; k < R.n(); ++k)
    if (rng() % 3) s[k] = random_scalar(R.ctx(), rng, 0, 4);
  return s;
}

PDElement random_pd(const ModelRing& R, int d, int D, int maxdeg, std::mt19937_64& rng,
                    PDBasis basis = PDBasis::divided) {
  PDElement a(&R, d, D, basis);
  for (const auto& J : monomials_upto(d, maxdeg))
    if (rng() % 2) a.add_term(J, random_series(R, rng));
  return a;
}

MultiIndex mi(std::initializer_list<int> l) { return MultiIndex(l); }

}  // namespace

TEST_CASE("model ring distinguished elements") {
  for (int p : {2, 3, 5}) {
    Ctx c = field(p);
    ModelRing R(c, 3);
    CHECK(R.u()[0].equals(PAdicScalar::pi(c)));
    CHECK((R.u() * R.xi()).equals(R.t()));
    CHECK(R.rho().valuation().value == Rational(1, p - 1));
    // mod t the Gamma constant is rho_K (zeta_p - 1)
    CHECK(R.gamma_constant()[0].equals(R.rho() * PAdicScalar::pi(c)));
    CHECK(R.t().t_order() == 1);
  }
}

TEST_CASE("truncated series units and exact division") {
  std::mt19937_64 rng(1);
  ModelRing R(field(3), 4);
  for (int it = 0; it < 50; ++it) {
    Series a = random_series(R, rng);
    a[0] = random_scalar(R.ctx(), rng, 0, 0);
    CHECK((a * a.inverse()).equals(R.one()));
    Series b = random_series(R, rng);
    Series ta = a.shift_up(2), tb = (b * a).shift_up(2);
    Series q = div_exact(tb, ta);
    CHECK((q * ta).equals(tb));
  }
}

TEST_CASE("divided power multiplication law") {
  ModelRing R(field(3), 2);
  auto w2 = PDElement::monomial(&R, 1, 8, mi({2}), R.one());
  auto w3 = PDElement::monomial(&R, 1, 8, mi({3}), R.one());
  auto prod = pd_multiply(w2, w3);
  CHECK(prod.equals(PDElement::monomial(&R, 1, 8, mi({5}), R.from_int(10))));
  CHECK_FALSE(prod.equals(PDElement::monomial(&R, 1, 8, mi({5}), R.from_int(1))));

  std::mt19937_64 rng(2);
  auto a = random_pd(R, 2, 5, 5, rng);
  CHECK(pd_multiply(a, PDElement::constant(&R, 2, 5, R.one())).equals(a));

  // (W_1 + W_2)^k = k! sum_{a+b=k} W^{[a,b]}
  const int D = 6;
  auto s = PDElement::variable(&R, 2, D, 0) + PDElement::variable(&R, 2, D, 1);
  auto pw = PDElement::constant(&R, 2, D, R.one());
  long long fact = 1;
  for (int k = 1; k <= D; ++k) {
    pw = pd_multiply(pw, s);
    fact *= k;
    PDElement expect(&R, 2, D);
    for (int i = 0; i <= k; ++i) expect.add_term(mi({i, k - i}), R.from_int(fact));
    CHECK(pw.equals(expect));
  }
}

TEST_CASE("n! W^[n] equals the n-th power") {
  ModelRing R(field(5), 1);
  auto w = PDElement::variable(&R, 1, 7, 0);
  auto pw = w;
  long long fact = 1;
  for (int n = 2; n <= 7; ++n) {
    pw = pd_multiply(pw, w);
    fact *= n;
    CHECK(pw.equals(PDElement::monomial(&R, 1, 7, mi({n}), R.from_int(fact))));
  }
}

TEST_CASE("products above the cap lower the reliable degree") {
  ModelRing R(field(3), 1);
  auto w = PDElement::monomial(&R, 1, 4, mi({3}), R.one());
  auto sq = pd_multiply(w, w);
  CHECK(sq.reliable() == 4);
  CHECK(sq.is_zero());
}

TEST_CASE("connection in W coordinates") {
  ModelRing R(field(3), 2);
  auto one = PDElement::constant(&R, 2, 4, R.one());
  for (const auto& c : pd_connection(one).comps) CHECK(c.is_zero());
  Form f = pd_connection(PDElement::variable(&R, 2, 4, 0));
  CHECK(f.twist.k == -1);
  CHECK(f.comps[0].equals(PDElement::constant(&R, 2, 4, -R.u())));
  CHECK(f.comps[1].is_zero());

  std::mt19937_64 rng(3);
  for (int it = 0; it < 30; ++it) {
    auto a = random_pd(R, 2, 6, 3, rng), b = random_pd(R, 2, 6, 3, rng);
    Form dab = pd_connection(pd_multiply(a, b));
    Form da = pd_connection(a), db = pd_connection(b);
    for (int i = 0; i < 2; ++i) CHECK(dab.comps[i].equals(pd_multiply(a, db.comps[i]) + pd_multiply(b, da.comps[i])));
    // d o d = 0: the mixed components commute
    CHECK(pd_connection(da.comps[1]).comps[0].equals(pd_connection(da.comps[0]).comps[1]));
  }
}

TEST_CASE("connection in U coordinates and the coordinate change") {
  for (int p : {2, 3}) {
    ModelRing R(field(p), 3);
    auto one = PDElement::constant(&R, 1, 6, R.one());
    CHECK(pd_connection_U(one).comps[0].is_zero());
    auto U = PDElement::variable(&R, 1, 6, 0);
    auto expect = PDElement::constant(&R, 1, 6, R.u()) + U.scale(R.xi());
    CHECK(pd_connection_U(U).comps[0].equals(expect));

    // U_1 in W coordinates: -W_1 + s W_1^[2] - s^2 W_1^[3] ..., s = xi/u
    Series s = R.xi() * R.u().inverse();
    auto img = coordinate_change_UW(U, CoordDirection::U_to_W);
    CHECK(img.coeff(mi({1})).equals(-R.one()));
    CHECK(img.coeff(mi({2})).equals(s));
    CHECK(img.coeff(mi({3})).equals(-(s * s)));

    CHECK(coordinate_change_UW(PDElement(&R, 1, 6), CoordDirection::U_to_W).is_zero());
    CHECK(coordinate_change_UW(one, CoordDirection::U_to_W).equals(one));

    std::mt19937_64 rng(4);
    for (int it = 0; it < 20; ++it) {
      auto a = random_pd(R, 2, 5, 5, rng);
      auto w = coordinate_change_UW(a, CoordDirection::U_to_W);
      CHECK(coordinate_change_UW(w, CoordDirection::W_to_U).equals(a));
      Form fu = pd_connection_U(a);
      Form fw = pd_connection(w);
      for (int i = 0; i < 2; ++i) CHECK(coordinate_change_UW(fu.comps[i], CoordDirection::U_to_W).equals(fw.comps[i]));
    }
  }
}

TEST_CASE("eliminating W_0") {
  ModelRing R(field(3), 2);
  const int D = 5;
  auto w0 = PDElement::variable(&R, 2, D, 0);
  auto lin = eliminate_w0(w0, RelationKind::linear, 1);
  CHECK(lin.equals(-PDElement::variable(&R, 1, D, 0)));

  auto v0 = PDElement::variable(&R, 2, D, 0, PDBasis::ordinary);
  auto mul = eliminate_w0(v0, RelationKind::multiplicative, 1);
  for (int k = 1; k <= D; ++k) CHECK(mul.coeff(mi({k})).equals(R.from_int(k % 2 ? -1 : 1)));

  // the relation itself maps to zero
  for (int r = 0; r <= 2; ++r) {
    PDElement rel(&R, 3, D);
    for (int i = 0; i <= r; ++i) rel = rel + PDElement::variable(&R, 3, D, i);
    CHECK(eliminate_w0(rel, RelationKind::linear, r).is_zero());
    PDElement prod = PDElement::constant(&R, 3, D, R.one(), PDBasis::ordinary);
    for (int i = 0; i <= r; ++i)
      prod = pd_multiply(prod, PDElement::constant(&R, 3, D, R.one(), PDBasis::ordinary) +
                                   PDElement::variable(&R, 3, D, i, PDBasis::ordinary));
    prod = prod - PDElement::constant(&R, 3, D, R.one(), PDBasis::ordinary);
    CHECK(eliminate_w0(prod, RelationKind::multiplicative, r).is_zero());
  }
  CHECK_THROWS_AS(eliminate_w0(w0, RelationKind::linear, 2), ConfigMismatch);
}

TEST_CASE("Gamma shift") {
  std::mt19937_64 rng(6);
  for (int p : {2, 3, 5}) {
    ModelRing R(field(p), 2);
    auto a = random_pd(R, 2, 5, 5, rng);
    CHECK(gamma_shift(a, 0, 0).equals(a));
    auto w = PDElement::variable(&R, 2, 5, 1);
    auto expect = w + PDElement::constant(&R, 2, 5, R.u() * R.u());
    CHECK(gamma_shift(w, 1, 1).equals(expect));
    CHECK_FALSE(gamma_shift(w, 1, 1).equals(w));
    CHECK_FALSE(gamma_shift(w, 0, 1).equals(expect));
    for (int it = 0; it < 10; ++it) {
      auto b = random_pd(R, 2, 5, 5, rng);
      CHECK(gamma_shift(gamma_shift(b, 0, 2), 0, 3).equals(gamma_shift(b, 0, 5)));
      Form lhs = pd_connection(gamma_shift(b, 1, 1));
      Form rhs = pd_connection(b);
      for (int i = 0; i < 2; ++i) CHECK(lhs.comps[i].equals(gamma_shift(rhs.comps[i], 1, 1)));
    }
  }
}

TEST_CASE("PD element JSON round trip") {
  std::mt19937_64 rng(8);
  ModelRing R(field(3), 2);
  auto a = random_pd(R, 2, 4, 4, rng);
  nlohmann::json j = pd_to_json(a);
  CHECK(j["dim"] == 2);
  CHECK(j["cap"] == 4);
  auto b = pd_from_json(&R, j);
  CHECK(pd_to_json(b) == j);
  CHECK(a.equals(b));
}
