#ifndef SUPERATOM_IO_HPP
#define SUPERATOM_IO_HPP

// Run configuration and the file formats documented in docs/FORMATS.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "superatom/analysis.hpp"
#include "superatom/burst.hpp"
#include "superatom/fitting.hpp"
#include "superatom/model.hpp"

namespace superatom {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  BurstParams burst;

  RabiParams<double> rabi{2.0 * 3.14159265358979323846 * 2.9e6, 0.0, 1.0};
  double scan_start_ns = 0.0;
  double scan_stop_ns = 1000.0;
  double scan_step_ns = 1.0;

  double od = 1.9;
  double efficiency_k = 0.1662;
  double efficiency_p = 1.0;
  double finesse = 19.5;
  double eta_cavity_output = 0.80;
  double eta_fiber = 0.859;
  double eta_pockels = 0.85;
  double eta_spd = 0.68;
  double eta_freespace_collection = 0.90;

  GeometryParams geometry{9.0, 6.5};

  std::uint64_t n_trials = 100000;
  std::uint64_t master_seed = 20211;
  int threshold = 1;
  double x_basis_phase_rad = 1.57079632679489661923;
  std::optional<double> peak_window_start_ns;
  std::optional<double> peak_window_stop_ns;
  // Thread count for simulation; not serialized, output does not depend on it.
  unsigned workers = 0;
  std::string output_dir = "out";
  std::string state = "D";
  std::string basis = "Z";
  std::vector<std::string> burst_states = {"r1", "r2"};
  bool exact_probabilities = false;

  /// Throws ValidationError listing every offending field.
  void validate() const;

  BasisConvention<double> convention() const { return {x_basis_phase_rad}; }
  PeakWindow peak_window() const;
  LossChain cavity_chain() const;
};

Json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

Json to_json(const BurstParams& p);
BurstParams burst_params_from_json(const Json& j);

/// r1, r2, D, A, R, L, or "a,b[,phi]" for a|r1> + b e^{i phi}|r2> (normalized).
QubitState<double> parse_state_spec(const std::string& spec);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Columns trial_index,branch,total,repeat_index,timestamp_ns. Trials without
/// clicks get one row with repeat_index and timestamp_ns set to -1.
std::string dataset_csv(const Dataset& ds);
Json dataset_summary(const Dataset& ds);
void write_dataset(const Dataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& summary_path);
/// Rebuilds a dataset from its CSV and JSON summary. Timestamps come back at
/// the CSV's integer-nanosecond resolution.
Dataset read_dataset(const std::filesystem::path& csv_path,
                     const std::filesystem::path& summary_path);

std::string histogram_csv(std::span<const std::uint64_t> hist);
std::string profile_csv(const TemporalProfile& profile);

/// x,y[,sigma] rows; an optional header line is skipped.
std::vector<DataPoint> parse_points_csv(const std::string& text);
std::vector<DataPoint> read_points_csv(const std::filesystem::path& path);

Json to_json(const FitResult& fit, bool with_trace);
Json to_json(const TomographyResult& tomo);
Json to_json(const QubitState<double>& state);

}  // namespace superatom

#endif
