#include "prh/cli.hpp"

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "prh/localrh.hpp"
#include "prh/logchart.hpp"
#include "prh/wittlab.hpp"

namespace prh::cli {

namespace {

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

void check_bounds(const RunConfig& c) {
  if (!is_prime(c.p)) throw InputError("--p must be a prime");
  if (c.precision < 1 || c.t_order < 1 || c.pd_cap < 1 || c.rank < 1 || c.dim < 1 || c.length < 1 ||
      c.instances < 1 || c.workers < 1)
    throw InputError("all bounds must be positive");
  if (c.dim > 3) throw SizeLimit("--dim is capped at 3");
  if (c.pd_cap > 8) throw SizeLimit("--pd-cap is capped at 8");
  if (c.t_order > 3) throw SizeLimit("--t-order is capped at 3");
  if (c.rank > 3) throw SizeLimit("--rank is capped at 3");
  if (c.length > 3) throw SizeLimit("Witt length is capped at 3");
  if (c.precision > 64) throw SizeLimit("--precision is capped at 64");
}

std::mt19937_64 instance_rng(unsigned long long seed, size_t index) {
  std::seed_seq seq{static_cast<unsigned>(seed), static_cast<unsigned>(seed >> 32), static_cast<unsigned>(index)};
  return std::mt19937_64(seq);
}

// f(i) for i < count on `workers` threads; results keep index order, the first failing index rethrows
template <class F>
std::vector<nlohmann::json> parallel_map(size_t count, int workers, F&& f) {
  std::vector<nlohmann::json> out(count);
  std::vector<std::exception_ptr> errs(count);
  auto body = [&](size_t start) {
    for (size_t i = start; i < count; i += static_cast<size_t>(workers)) {
      try {
        out[i] = f(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(body, static_cast<size_t>(w));
  body(0);
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string line_offset(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", offset " + std::to_string(col);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string text = ss.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": parse error at " + line_offset(text, e.byte));
  }
}

nlohmann::json config_json(const RunConfig& c) {
  return {{"p", c.p},           {"precision", c.precision}, {"t_order", c.t_order}, {"pd_cap", c.pd_cap},
          {"rank", c.rank},     {"dim", c.dim},             {"length", c.length},   {"seed", c.seed},
          {"instances", c.instances}, {"workers", c.workers}, {"in", c.in}};
}

Ctx field(const RunConfig& c) { return FieldContext::get({c.p, c.precision, 1, Rational(0)}); }

// ---------------------------------------------------------------- roundtrip

nlohmann::json roundtrip_instance(const ConnectionDatum& m, const RunConfig& c, size_t index) {
  nlohmann::json r{{"index", index}, {"rank", m.rank}, {"dim", m.dim}};
  SmallnessVerdict gate = check_small_higgs(higgs_reduction(m));
  if (!gate.small) {
    r["status"] = "rejected";
    r["error"] = "NotSmall";
    r["witness"] = gate.witness;
    return r;
  }
  RoundtripReport rt = roundtrip_check(m, c.pd_cap, Rational(c.precision - 2));
  MicToRep a = mic_to_rep(m, c.pd_cap);
  CompareVerdict cmp = complex_compare(gamma_cohomology(a.rep), de_rham_cohomology(m));
  r["defect_mic"] = rational_str(rt.defect_mic);
  r["defect_rep"] = rational_str(rt.defect_rep);
  r["hitchin_preserved"] = rt.hitchin_preserved;
  r["tensor_dual_ok"] = rt.tensor_dual_ok;
  r["cohomology_equal"] = cmp.equal;
  if (!rt.failure.empty()) r["failure"] = rt.failure;
  if (!cmp.equal) r["cohomology_detail"] = cmp.detail;
  r["status"] = rt.pass && cmp.equal ? "pass" : "fail";
  return r;
}

nlohmann::json cmd_roundtrip(const RunConfig& c) {
  Ctx ctx = field(c);
  const ModelRing* R = model_ring(ctx, c.t_order);
  std::vector<ConnectionDatum> data;
  if (!c.in.empty()) {
    nlohmann::json j = read_json(c.in);
    const nlohmann::json& list = j.contains("instances") ? j.at("instances") : nlohmann::json::array({j});
    for (const auto& inst : list) {
      ConnectionDatum m;
      m.ring = R;
      try {
        m.rank = inst.at("rank").get<int>();
        m.dim = inst.at("dim").get<int>();
        m.nabla = matrices_from_json(R, m.rank, inst.at("nabla"));
      } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("instance: ") + e.what());
      }
      if (m.rank < 1 || m.rank > 3 || m.dim < 1 || m.dim > 3) throw SizeLimit("instance rank/dim outside 1..3");
      if (static_cast<int>(m.nabla.size()) != m.dim) throw InputError("instance needs dim matrices");
      data.push_back(std::move(m));
    }
  } else {
    for (int i = 0; i < c.instances; ++i) {
      auto rng = instance_rng(c.seed, static_cast<size_t>(i));
      data.push_back(generate_connection(R, c.rank, c.dim, rng));
    }
  }
  auto results = parallel_map(data.size(), c.workers, [&](size_t i) { return roundtrip_instance(data[i], c, i); });
  bool pass = true;
  for (const auto& r : results) pass = pass && r["status"] == "pass";
  return {{"instances", results}, {"pass", pass}};
}

// ---------------------------------------------------------------- poincare

nlohmann::json cmd_poincare(const RunConfig& c) {
  const ModelRing* R = model_ring(field(c), c.t_order);
  auto rng = instance_rng(c.seed, 0);
  PoincareReport rep = poincare_check(R, c.dim, c.pd_cap, c.instances, rng);
  bool pass = rep.h0_is_constants && rep.cocycles == rep.coboundaries;
  return {{"h0_is_constants", rep.h0_is_constants},
          {"cocycles", rep.cocycles},
          {"coboundaries", rep.coboundaries},
          {"per_degree", rep.per_degree},
          {"pass", pass}};
}

// ---------------------------------------------------------------- witt

nlohmann::json witt_instance(const RunConfig& c, size_t index) {
  auto rng = instance_rng(c.seed, index);
  int m = c.length;
  PerfectBase B = PerfectBase::perfect_monomial(c.p, {"x", "y"}, 2);
  PerfectBase L = B.lift();
  auto vec = [&](const PerfectBase& base) {
    std::vector<BaseElem> comps;
    for (int i = 0; i < m; ++i) comps.push_back(base.random(rng, 2, 1));
    return WittVector(base, comps);
  };
  BaseElem x = B.random(rng, 1, 2), y = B.random(rng, 1, 2);
  bool teich = witt_product(teichmueller(B, x, m), teichmueller(B, y, m)).equals(teichmueller(B, B.mul(x, y), m));
  WittVector a = vec(B), b = vec(B);
  WittVector pa = witt_product(witt_from_int(B, m, c.p), a);
  bool shifts = frobenius_shift(frobenius_shift(a, Shift::V), Shift::phi).equals(pa) &&
                frobenius_shift(frobenius_shift(a, Shift::phi), Shift::V).equals(pa);
  bool ring = witt_sum(a, witt_neg(a)).equals(witt_zero(B, m)) && witt_sum(a, b).equals(witt_sum(b, a));
  WittVector la = vec(L), lb = vec(L);
  auto ga = ghost(la), gb = ghost(lb), gs = ghost(witt_sum(la, lb)), gp = ghost(witt_product(la, lb));
  bool ghost_ok = true;
  for (int j = 0; j < m; ++j)
    ghost_ok = ghost_ok && L.equals(gs[j], L.add(ga[j], gb[j])) && L.equals(gp[j], L.mul(ga[j], gb[j]));
  return {{"index", index},       {"teichmueller", teich}, {"phi_V", shifts},
          {"ring", ring},         {"ghost", ghost_ok},     {"pass", teich && shifts && ring && ghost_ok}};
}

nlohmann::json cmd_witt(const RunConfig& c) {
  int m = c.length;
  PerfectBase B = PerfectBase::perfect_monomial(c.p, {"X", "Y"}, std::max(m - 1, 0));
  TeichDifference t = teich_difference_expansion(B, m);
  nlohmann::json P = nlohmann::json::array();
  bool divisible = true;
  for (int n = 0; n < m; ++n) {
    P.push_back({{"n", n},
                 {"P", B.str(t.P[n])},
                 {"divisible", static_cast<bool>(t.divisible[n])},
                 {"quotient", B.str(t.quotients[n])}});
    divisible = divisible && t.divisible[n];
  }
  auto results = parallel_map(static_cast<size_t>(c.instances), c.workers, [&](size_t i) { return witt_instance(c, i); });
  bool pass = divisible;
  for (const auto& r : results) pass = pass && r["pass"].get<bool>();
  return {{"teichmueller_difference", P}, {"random", results}, {"pass", pass}};
}

// ---------------------------------------------------------------- monoid

MonoidMap map_from_json(const nlohmann::json& j) {
  MonoidMap f;
  try {
    f.source = monoid_from_json(j.at("source"));
    f.target = monoid_from_json(j.at("target"));
    f.images = j.at("images").get<std::vector<ExpVec>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("monoid map: ") + e.what());
  }
  return f;
}

void check_rank(const FGMonoid& m) {
  if (group_completion(m).free_rank > 4) throw SizeLimit("lattice rank is capped at 4");
}

nlohmann::json cmd_monoid(const RunConfig& c) {
  nlohmann::json corpus = c.in.empty() ? builtin_monoid_corpus() : read_json(c.in);
  bool pass = true;
  nlohmann::json monoids = nlohmann::json::array(), maps = nlohmann::json::array(), charts = nlohmann::json::array();
  for (const auto& e : corpus.value("monoids", nlohmann::json::array())) {
    FGMonoid m = monoid_from_json(e.contains("monoid") ? e.at("monoid") : e);
    check_rank(m);
    GroupCompletion g = group_completion(m);
    bool integral = is_integral(m), saturated = is_saturated(m);
    nlohmann::json r{{"monoid", monoid_to_json(m)},
                     {"integral", integral},
                     {"saturated", saturated},
                     {"gp_free_rank", g.free_rank},
                     {"gp_torsion", g.torsion}};
    bool ok = !saturated || integral;
    if (e.contains("integral")) ok = ok && e["integral"].get<bool>() == integral;
    if (e.contains("saturated")) ok = ok && e["saturated"].get<bool>() == saturated;
    r["pass"] = ok;
    pass = pass && ok;
    monoids.push_back(r);
  }
  for (const auto& e : corpus.value("maps", nlohmann::json::array())) {
    MonoidMap f = map_from_json(e);
    check_rank(f.source);
    check_rank(f.target);
    Exactification x = exactify(f);
    nlohmann::json r = exactification_to_json(x);
    bool ok = x.ok();
    if (e.contains("kernel_size")) ok = ok && e["kernel_size"].get<size_t>() == x.kernel.size();
    r["pass"] = ok;
    pass = pass && ok;
    maps.push_back(r);
  }
  for (const auto& e : corpus.value("charts", nlohmann::json::array())) {
    OmegaLog o = omega_log_basis(chart_from_json(e));
    nlohmann::json r = omega_to_json(o);
    bool ok = static_cast<int>(o.basis.size()) == o.d;
    r["pass"] = ok;
    pass = pass && ok;
    charts.push_back(r);
  }
  return {{"monoids", monoids}, {"maps", maps}, {"charts", charts}, {"pass", pass}};
}

}  // namespace

nlohmann::json builtin_monoid_corpus() {
  return nlohmann::json::parse(R"({
  "monoids": [
    {"monoid": {"gens": 2, "relations": []}, "integral": true, "saturated": true},
    {"monoid": {"gens": 2, "relations": [[[3, 0], [0, 2]]]}, "integral": true, "saturated": false},
    {"monoid": {"gens": 2, "relations": [[[2, 0], [0, 2]]]}, "integral": true, "saturated": false},
    {"monoid": {"gens": 3, "relations": [[[1, 0, 1], [0, 1, 1]]]}, "integral": false, "saturated": false},
    {"monoid": {"gens": 3, "relations": [[[1, 0, 1], [0, 2, 0]]]}, "integral": true, "saturated": true},
    {"monoid": {"gens": 3, "relations": [[[2, 0, 1], [0, 3, 0]]]}, "integral": true, "saturated": false}
  ],
  "maps": [
    {"source": {"gens": 2, "relations": []}, "target": {"gens": 2, "relations": []},
     "images": [[1, 0], [0, 1]], "kernel_size": 0},
    {"source": {"gens": 2, "relations": []}, "target": {"gens": 1, "relations": []},
     "images": [[1], [1]], "kernel_size": 1},
    {"source": {"gens": 3, "relations": [[[1, 1, 0], [0, 0, 1]]]}, "target": {"gens": 1, "relations": []},
     "images": [[1], [1], [2]], "kernel_size": 1},
    {"source": {"gens": 3, "relations": []}, "target": {"gens": 3, "relations": [[[1, 0, 1], [0, 2, 0]]]},
     "images": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "kernel_size": 1}
  ],
  "charts": [
    {"d": 2, "r": 0, "a": "1"},
    {"d": 2, "r": 1, "a": "1/2"},
    {"d": 3, "r": 3, "a": "2/3"}
  ]
})");
}

Outcome run(const RunConfig& cfg) {
  Outcome o;
  o.report = {{"schema", kSchema}, {"command", cfg.command}, {"config", config_json(cfg)}};
  try {
    check_bounds(cfg);
    nlohmann::json body;
    if (cfg.command == "roundtrip") body = cmd_roundtrip(cfg);
    else if (cfg.command == "poincare") body = cmd_poincare(cfg);
    else if (cfg.command == "witt") body = cmd_witt(cfg);
    else if (cfg.command == "monoid") body = cmd_monoid(cfg);
    else throw InputError("unknown command " + cfg.command);
    o.code = body["pass"].get<bool>() ? kPass : kFailure;
    o.report["result"] = body;
    o.report["pass"] = body["pass"];
    return o;
  } catch (const InputError& e) {
    o.code = kInputError;
    o.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const ConfigMismatch& e) {
    o.code = kInputError;
    o.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const SizeLimit& e) {
    o.code = kResourceLimit;
    o.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const TruncationOverflow& e) {
    o.code = kResourceLimit;
    o.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const PrecisionExhausted& e) {
    o.code = kResourceLimit;
    o.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const Error& e) {
    o.code = kFailure;
    o.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  }
  o.report["pass"] = false;
  return o;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"prh: verification driver"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto add_flags = [&](CLI::App* s) {
    s->add_option("--p", cfg.p, "residue characteristic");
    s->add_option("--precision", cfg.precision, "p-adic precision N");
    s->add_option("--t-order", cfg.t_order, "t-adic truncation n");
    s->add_option("--pd-cap", cfg.pd_cap, "divided-power degree cap D");
    s->add_option("--rank", cfg.rank, "rank r of generated instances");
    s->add_option("--dim", cfg.dim, "dimension d");
    s->add_option("--length", cfg.length, "Witt vector length");
    s->add_option("--seed", cfg.seed, "generator seed");
    s->add_option("--instances", cfg.instances, "number of generated instances or samples");
    s->add_option("--in", cfg.in, "instance file (JSON)");
    s->add_option("--out", cfg.out, "report file (JSON); stdout if absent");
    s->add_option("--workers", cfg.workers, "worker threads");
  };
  const std::pair<const char*, const char*> commands[] = {
      {"roundtrip", "generate or read small instances and check mic -> rep -> mic"},
      {"poincare", "exactness of the divided-power de Rham complex on random cocycles"},
      {"witt", "Witt vector identities over a perfect monomial base"},
      {"monoid", "integrality, saturation and exactification on a monoid corpus"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help));
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "prh: " << e.what() << "\n";
    return kInputError;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  Outcome o = run(cfg);
  if (o.report.contains("error")) err << "prh: " << o.report["error"]["kind"].get<std::string>() << ": "
                                      << o.report["error"]["message"].get<std::string>() << "\n";
  std::string text = o.report.dump(2) + "\n";
  if (cfg.out.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.out);
    if (!f) {
      err << "prh: cannot write " << cfg.out << "\n";
      return kInputError;
    }
    f << text;
  }
  return o.code;
}

}  // namespace prh::cli
