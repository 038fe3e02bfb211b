#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "prh/cli.hpp"

namespace {

struct Run {
  int code = 0;
  std::string out, err;
  nlohmann::json report() const { return nlohmann::json::parse(out); }
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "prh");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = prh::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const char* name) { return std::string(PRH_TOOLS_DATA) + "/" + name; }

}  // namespace

TEST_CASE("roundtrip command") {
  Run zero = run({"roundtrip", "--in", data("theta_zero.json"), "--p", "3"});
  CHECK(zero.code == 0);
  CHECK(zero.report()["schema"] == 1);

  Run gen = run({"roundtrip", "--seed", "42", "--instances", "50", "--p", "3", "--rank", "2", "--workers", "4"});
  CHECK(gen.code == 0);
  auto rep = gen.report();
  CHECK(rep["config"]["seed"] == 42);
  REQUIRE(rep["result"]["instances"].size() == 50);
  for (const auto& i : rep["result"]["instances"]) {
    CHECK(i["status"] == "pass");
    CHECK(i.contains("defect_mic"));
  }

  Run bad = run({"roundtrip", "--in", data("not_small_p3.json"), "--p", "3"});
  CHECK(bad.code == 1);
  CHECK(bad.report()["result"]["instances"][0]["error"] == "NotSmall");
}

TEST_CASE("reports are byte-stable") {
  std::vector<std::string> args{"roundtrip", "--seed", "7", "--instances", "6", "--p", "2", "--dim", "2", "--workers", "3"};
  CHECK(run(args).out == run(args).out);
  // the worker count only shows up in the echoed config
  auto one = run({"roundtrip", "--seed", "7", "--instances", "6", "--p", "2", "--dim", "2"}).report();
  auto three = run(args).report();
  CHECK(one["result"] == three["result"]);
}

TEST_CASE("poincare, witt and monoid commands") {
  Run pc = run({"poincare", "--dim", "1", "--pd-cap", "4", "--t-order", "1", "--instances", "5"});
  CHECK(pc.code == 0);
  CHECK(pc.report()["result"]["h0_is_constants"] == true);

  Run w = run({"witt", "--p", "2", "--length", "2", "--instances", "5"});
  CHECK(w.code == 0);
  CHECK(w.report()["result"]["teichmueller_difference"][1]["divisible"] == true);

  Run m = run({"monoid"});
  CHECK(m.code == 0);
  CHECK(m.report()["result"]["maps"].size() == 4);
}

TEST_CASE("exit codes for bad input and limits") {
  CHECK(run({"poincare", "--dim", "4"}).code == 3);
  CHECK(run({"witt", "--length", "4"}).code == 3);
  CHECK(run({"roundtrip", "--p", "4"}).code == 2);
  CHECK(run({"roundtrip", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);

  std::string path = "prh_cli_malformed.json";
  {
    std::ofstream f(path);
    f << "{\n  \"instances\": [\n    {\"rank\": 1,, }\n  ]\n}\n";
  }
  Run r = run({"roundtrip", "--in", path});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);
  std::remove(path.c_str());

  std::string out = "prh_cli_out.json";
  CHECK(run({"monoid", "--out", out}).code == 0);
  std::ifstream f(out);
  nlohmann::json j = nlohmann::json::parse(f);
  CHECK(j["pass"] == true);
  std::remove(out.c_str());
}
