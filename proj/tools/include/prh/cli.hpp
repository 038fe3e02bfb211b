#pragma once

#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

namespace prh::cli {

struct RunConfig {
  std::string command;
  int p = 3;
  int precision = 8;
  int t_order = 1;
  int pd_cap = 4;
  int rank = 2;
  int dim = 1;
  int length = 2;  // Witt length
  unsigned long long seed = 42;
  int instances = 10;
  std::string in, out;
  int workers = 1;
};

enum ExitCode { kPass = 0, kFailure = 1, kInputError = 2, kResourceLimit = 3 };

struct Outcome {
  int code = kPass;
  nlohmann::json report;
};

inline constexpr int kSchema = 1;

// Runs one command; library errors are mapped to exit codes and an error report.
Outcome run(const RunConfig& cfg);

// Full command line: parse, run, write the report to --out or `out`.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

nlohmann::json builtin_monoid_corpus();

}  // namespace prh::cli
