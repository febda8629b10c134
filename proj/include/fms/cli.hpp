#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fms/measures.hpp"

namespace fms {

struct RunConfig {
  std::string subcommand;
  std::string system_path;
  std::string out_dir;  // empty: reports go to stdout only
  std::optional<std::uint64_t> seed;
  bool json = false;

  // Caps.
  std::uint64_t word_budget = kDefaultWordBudget;
  std::size_t max_breakpoints = 256;
  std::size_t max_samples = 1'000'000;
  std::size_t max_steps = 100'000'000;

  // cylinders / xi
  std::string x = "1";
  std::string y;
  std::size_t depth = 2;
  bool include_zero = false;
  std::size_t n_exact = 10;
  std::size_t n_mc = 2000;
  std::size_t num_samples = 4000;
  double drift_z = 4.0;
  unsigned threads = 1;

  // partition
  std::size_t lift_depth = 6;

  // simulate
  std::string x0 = "1";
  std::size_t steps = 1000;
  std::vector<std::string> functions = {"x"};

  // rate
  std::optional<std::string> b;
  std::optional<double> bound;
  std::size_t cloud = 4000;
  std::size_t n_max = 30;
  std::size_t burn_in = 100;
  double slack = 0.1;
};

enum ExitStatus : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitBudget = 2,
  kExitInvariant = 3,
};

// Runs one subcommand. Reports go to `out` (and to files under out_dir),
// diagnostics to `err`. Returns the process exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace fms
