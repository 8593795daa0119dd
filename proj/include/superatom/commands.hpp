#ifndef SUPERATOM_COMMANDS_HPP
#define SUPERATOM_COMMANDS_HPP

// Command implementations behind the `superatom` CLI. Each returns the
// report it writes so tests can inspect it without parsing files.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "superatom/io.hpp"

namespace superatom::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kNonConvergence = 3,
  kIo = 4,
};

/// Seed for a named sub-run (a prepared state, a basis) of one master seed.
std::uint64_t derived_seed(std::uint64_t master_seed, const std::string& tag);

struct RabiScan {
  std::vector<double> t_ns;
  std::vector<double> population;
  double pi_time_ns = 0.0;
  double peak_time_ns = 0.0;
};

RabiScan rabi_scan(const RunConfig& cfg);
std::string rabi_csv(const RabiScan& scan);

Json cmd_rabi(const RunConfig& cfg, std::ostream& log);
Json cmd_burst(const RunConfig& cfg, std::ostream& log);
Json cmd_tomo(const RunConfig& cfg, std::ostream& log);

struct FitRequest {
  std::string points_path;
  FitMode mode = FitMode::FreeSpace;
  std::optional<double> fixed_p;
  double chain = 1.0;
  std::optional<double> predict_finesse;
  std::vector<DataPoint> measured;  // compared against the cavity prediction
  bool verbose = false;
};

Json cmd_fit(const RunConfig& cfg, const FitRequest& req, std::ostream& log);

struct CalibrateRequest {
  std::map<std::string, double> targets;
  std::vector<std::string> free;
};

/// "name=value,name=value" into a target map.
std::map<std::string, double> parse_targets(const std::string& text);

Json cmd_calibrate(const RunConfig& cfg, const CalibrateRequest& req, std::ostream& log);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace superatom::cli

#endif
