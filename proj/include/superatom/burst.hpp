#ifndef SUPERATOM_BURST_HPP
#define SUPERATOM_BURST_HPP

// Blockade-conditioned photon-burst readout: a seeded Monte Carlo engine and
// the closed-form mixture model it is checked against.
//
// One trial, in order:
//   1. superatom preparation succeeds with eta_prep; a failed preparation
//      behaves like an unblockaded ensemble (PREP_FAIL);
//   2. the basis pulse is applied and the projected level drawn from the
//      Born rule, with a classical flip of (1 - F) per pi of pulse area;
//   3. each of n_repeats excite/retrieve cycles clicks with p_click, unless
//      the |r2> excitation still blockades it; that excitation survives each
//      cycle with s_surv;
//   4. dark counts are added per trial (one click, uniform in the window) or
//      per repeat.
// With probability p_burst_fail a trial yields no signal photons at all
// (dark counts excepted), which models shot-to-shot dropouts of the
// retrieval channel.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "superatom/qubit.hpp"

namespace superatom {

enum class DarkMode { PerTrial, PerRepeat };

DarkMode parse_dark_mode(const std::string& s);
const char* to_string(DarkMode mode);

struct BurstParams {
  int n_repeats = 12;
  double burst_window_ns = 4800.0;
  double p_click = 2.63 / 12.0;
  double s_surv = 1.0;
  double p_dark = 0.012;
  DarkMode dark_mode = DarkMode::PerTrial;
  double eta_prep = 0.955;
  double mw_transfer_fidelity = 0.997;
  double p_burst_fail = 0.0;
  double emission_tau_ns = 50.0;
  double bin_size_ns = 2.5;
  double phase_jitter_rad = 0.0;

  double repeat_period_ns() const { return burst_window_ns / n_repeats; }
  int max_total() const { return dark_mode == DarkMode::PerTrial ? n_repeats + 1 : 2 * n_repeats; }

  /// Throws ValidationError listing every offending field.
  void validate() const;
};

enum class Branch { Unblocked, Blocked, PrepFail, DarkOnly };

const char* to_string(Branch b);
Branch parse_branch(const std::string& s);

struct Click {
  int repeat_index = 0;
  double time_ns = 0.0;

  bool operator==(const Click&) const = default;
};

struct BurstRecord {
  std::vector<Click> clicks;  // sorted by time
  Branch branch = Branch::Unblocked;

  int total() const { return static_cast<int>(clicks.size()); }
  bool operator==(const BurstRecord&) const = default;
};

struct Dataset {
  std::vector<BurstRecord> records;
  QubitState<double> prepared_state;
  MeasurementBasis<double> basis;
  BurstParams params;
  std::uint64_t seed = 0;

  std::size_t size() const { return records.size(); }
};

// Counter-based substream derivation: trial i of a run with master seed s
// always draws from the same generator, whatever the thread schedule.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t index);

class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed) : engine_(seed) {}
  static TrialRng substream(std::uint64_t master_seed, std::uint64_t index) {
    return TrialRng(substream_seed(master_seed, index));
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Flip probability of a classical MW error for a pulse of area theta.
double mw_flip_probability(double theta, double transfer_fidelity);

/// Probability that the measured level is |r2> (blockading), given a
/// successful preparation. Includes MW flips and, when phase jitter is
/// configured, the Gaussian average over the readout phase.
double blockade_probability(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                            const BurstParams& params);

BurstRecord simulate_trial(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                           const BurstParams& params, TrialRng& rng);

/// workers == 0 uses the hardware concurrency.
Dataset simulate_dataset(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                         std::size_t n_trials, const BurstParams& params,
                         std::uint64_t master_seed, unsigned workers = 0);

struct ExpectedStatistics {
  double mean_photons = 0.0;
  double prob_zero = 0.0;
  double prob_geq1 = 0.0;
  // Mean photons over trials whose superatom preparation succeeded.
  double mean_given_prep_success = 0.0;
  double weight_prep_fail = 0.0;
  double weight_blocked = 0.0;
  double weight_unblocked = 0.0;
  Eigen::VectorXd distribution;  // P(N = k), k = 0..max_total
};

ExpectedStatistics expected_statistics(const QubitState<double>& state,
                                       const MeasurementBasis<double>& basis,
                                       const BurstParams& params);

struct TemporalProfile {
  double bin_size_ns = 2.5;
  std::vector<std::uint64_t> counts;

  double bin_start_ns(std::size_t i) const { return static_cast<double>(i) * bin_size_ns; }
  std::uint64_t total() const;
};

TemporalProfile temporal_profile(const Dataset& ds);

/// Counts of trials by total photon number, indexed 0..max_total.
std::vector<std::uint64_t> photon_histogram(const Dataset& ds);

double mean_photons(const Dataset& ds);
double fraction_with_at_least(const Dataset& ds, int threshold);

}  // namespace superatom

#endif
