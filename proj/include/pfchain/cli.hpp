#pragma once

// Batch front end: argument parsing, experiment dispatch, artifact writing.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfchain {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumeric = 2, kExitCap = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --help: carries the help text, exits 0
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  std::string command;  // census gap expansion simulate sweep bounds verify
  std::optional<std::string> out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  unsigned threads = 1;

  int n = 3;
  std::size_t len = 8;
  std::string chain = "nonlocal";
  std::string gate = "pf";
  std::string order = "standard";
  double tol = 1e-10;
  bool exact = true;

  std::size_t depth = 2;

  std::uint64_t traj = 10000;
  std::uint64_t tmax = 100000;
  double gamma = 0.1;
  std::string init = "max";
  std::optional<std::string> state;
  std::vector<int> charges{1};
  bool track_depth = true;
  std::optional<std::size_t> cone;
  std::vector<std::size_t> match;
  bool per_trajectory = false;
  std::vector<std::size_t> lens;

  std::string curve = "gap_upper";
  bool headline = false;
  bool bipartite = false;
  std::vector<double> times;

  std::string suite = "all";
  std::size_t max_len = 8;
  std::uint64_t samples = 200000;

  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> settings;  // resolved option values
};

// Throws UsageError with the offending flag or config line.
ExperimentSpec parse_args(const std::vector<std::string>& args);

// Runs a parsed spec; primary output goes to `out` unless spec.out is set.
int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

// parse + run with exit-code mapping
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace pfchain
