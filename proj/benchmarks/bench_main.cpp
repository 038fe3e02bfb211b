#include <benchmark/benchmark.h>

#include <random>

#include "prh/localrh.hpp"
#include "prh/logchart.hpp"
#include "prh/wittlab.hpp"

using namespace prh;

namespace {

Ctx field(int p) { return FieldContext::get({p, 8, 1, Rational(0)}); }

void BM_ScalarMul(benchmark::State& st) {
  Ctx ctx = field(static_cast<int>(st.range(0)));
  PAdicScalar a = PAdicScalar::from_rational(ctx, 7, 3) + PAdicScalar::pi(ctx);
  PAdicScalar b = PAdicScalar::zeta(ctx);
  for (auto _ : st) benchmark::DoNotOptimize(a * b);
}
BENCHMARK(BM_ScalarMul)->Arg(2)->Arg(3)->Arg(5);

void BM_MicToRep(benchmark::State& st) {
  const ModelRing* R = model_ring(field(3), static_cast<int>(st.range(0)));
  std::mt19937_64 rng(1);
  ConnectionDatum m = generate_connection(R, 2, 2, rng);
  for (auto _ : st) benchmark::DoNotOptimize(mic_to_rep(m, 4));
}
BENCHMARK(BM_MicToRep)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Roundtrip(benchmark::State& st) {
  const ModelRing* R = model_ring(field(3), 2);
  std::mt19937_64 rng(2);
  ConnectionDatum m = generate_connection(R, static_cast<int>(st.range(0)), 1, rng);
  for (auto _ : st) benchmark::DoNotOptimize(roundtrip_check(m, 4, Rational(6)));
}
BENCHMARK(BM_Roundtrip)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_WittProduct(benchmark::State& st) {
  PerfectBase B = PerfectBase::perfect_monomial(static_cast<int>(st.range(0)), {"x", "y"}, 2);
  std::mt19937_64 rng(3);
  std::vector<BaseElem> ca, cb;
  for (int i = 0; i < 3; ++i) {
    ca.push_back(B.random(rng, 2, 1));
    cb.push_back(B.random(rng, 2, 1));
  }
  WittVector a(B, ca), b(B, cb);
  universal_polynomials(B.p(), 3, WittOp::product);
  for (auto _ : st) benchmark::DoNotOptimize(witt_product(a, b));
}
BENCHMARK(BM_WittProduct)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_ExactifySkeleton(benchmark::State& st) {
  MonoidMap f = skeleton_map(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(exactify(f));
}
BENCHMARK(BM_ExactifySkeleton)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
