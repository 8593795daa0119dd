#include "superatom/burst.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "superatom/errors.hpp"

namespace superatom {

namespace {

using Eigen::VectorXd;

// P(k successes in n trials), k = 0..n.
VectorXd binomial_pmf(int n, double p) {
  VectorXd pmf(n + 1);
  double coeff = 1.0;
  for (int k = 0; k <= n; ++k) {
    pmf(k) = coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
    coeff = coeff * (n - k) / (k + 1);
  }
  return pmf;
}

VectorXd convolve(const VectorXd& a, const VectorXd& b) {
  VectorXd out = VectorXd::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) out(i + j) += a(i) * b(j);
  return out;
}

VectorXd padded(const VectorXd& v, Eigen::Index size) {
  VectorXd out = VectorXd::Zero(size);
  out.head(v.size()) = v;
  return out;
}

double mean_of(const VectorXd& pmf) {
  return pmf.dot(VectorXd::LinSpaced(pmf.size(), 0.0, static_cast<double>(pmf.size() - 1)));
}

double probability_r1_at_phase_offset(const QubitState<double>& state,
                                      const MeasurementBasis<double>& basis, double offset) {
  const auto plus =
      apply_unitary(rotation_unitary(basis.pulse.theta, basis.pulse.phi + offset), QubitState<double>::r1());
  return born_probability(state, plus);
}

double combine_flips(double a, double b) { return a + b - 2.0 * a * b; }

double flip_probability(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                        const BurstParams& params) {
  return combine_flips(
      mw_flip_probability(preparation_pulse_area(state), params.mw_transfer_fidelity),
      mw_flip_probability(basis.pulse.theta, params.mw_transfer_fidelity));
}

// Truncated exponential on (0, period) with time constant tau.
double emission_delay(double u, double tau, double period) {
  return -tau * std::log1p(-u * (-std::expm1(-period / tau)));
}

}  // namespace

DarkMode parse_dark_mode(const std::string& s) {
  if (s == "per_trial") return DarkMode::PerTrial;
  if (s == "per_repeat") return DarkMode::PerRepeat;
  throw ValidationError("unknown dark_mode '" + s + "' (expected per_trial or per_repeat)");
}

const char* to_string(DarkMode mode) {
  return mode == DarkMode::PerTrial ? "per_trial" : "per_repeat";
}

const char* to_string(Branch b) {
  switch (b) {
    case Branch::Unblocked: return "UNBLOCKED";
    case Branch::Blocked: return "BLOCKED";
    case Branch::PrepFail: return "PREP_FAIL";
    case Branch::DarkOnly: return "DARK_ONLY";
  }
  return "?";
}

Branch parse_branch(const std::string& s) {
  if (s == "UNBLOCKED") return Branch::Unblocked;
  if (s == "BLOCKED") return Branch::Blocked;
  if (s == "PREP_FAIL") return Branch::PrepFail;
  if (s == "DARK_ONLY") return Branch::DarkOnly;
  throw ValidationError("unknown branch label '" + s + "'");
}

void BurstParams::validate() const {
  std::vector<std::string> bad;
  auto prob = [&](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) bad.push_back(std::string(name) + " must be in [0,1]");
  };
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) bad.push_back(std::string(name) + " must be > 0");
  };
  if (n_repeats < 1) bad.push_back("n_repeats must be >= 1");
  positive("burst_window_ns", burst_window_ns);
  positive("emission_tau_ns", emission_tau_ns);
  positive("bin_size_ns", bin_size_ns);
  prob("p_click", p_click);
  prob("s_surv", s_surv);
  prob("p_dark", p_dark);
  prob("eta_prep", eta_prep);
  prob("mw_transfer_fidelity", mw_transfer_fidelity);
  prob("p_burst_fail", p_burst_fail);
  if (!(phase_jitter_rad >= 0.0) || !std::isfinite(phase_jitter_rad))
    bad.push_back("phase_jitter_rad must be >= 0");
  if (bad.empty()) return;
  std::ostringstream msg;
  msg << "invalid burst parameters:";
  for (const auto& b : bad) msg << "\n  - " << b;
  throw ValidationError(msg.str());
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(~index));
}

double mw_flip_probability(double theta, double transfer_fidelity) {
  return std::clamp((1.0 - transfer_fidelity) * theta / std::numbers::pi, 0.0, 1.0);
}

double blockade_probability(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                            const BurstParams& params) {
  double p_r1 = probability_r1_at_phase_offset(state, basis, 0.0);
  if (params.phase_jitter_rad > 0.0 && basis.pulse.theta > 0.0) {
    // P(delta) = A + R cos(delta + c), so E[P] over N(0, sigma^2) shrinks the
    // oscillating part by exp(-sigma^2 / 2).
    const double p_pi = probability_r1_at_phase_offset(state, basis, std::numbers::pi);
    const double damping = std::exp(-0.5 * params.phase_jitter_rad * params.phase_jitter_rad);
    p_r1 = 0.5 * (p_r1 + p_pi) + damping * 0.5 * (p_r1 - p_pi);
  }
  const double eps = flip_probability(state, basis, params);
  return (1.0 - p_r1) * (1.0 - eps) + p_r1 * eps;
}

BurstRecord simulate_trial(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                           const BurstParams& params, TrialRng& rng) {
  BurstRecord rec;
  const double period = params.repeat_period_ns();

  const bool prepared = rng.bernoulli(params.eta_prep);
  bool blocked = false;
  if (prepared) {
    double p_r1;
    if (params.phase_jitter_rad > 0.0 && basis.pulse.theta > 0.0) {
      p_r1 = probability_r1_at_phase_offset(state, basis, params.phase_jitter_rad * rng.normal());
    } else {
      p_r1 = probability_r1_at_phase_offset(state, basis, 0.0);
    }
    const double eps = flip_probability(state, basis, params);
    blocked = rng.bernoulli((1.0 - p_r1) * (1.0 - eps) + p_r1 * eps);
  }
  const bool dropout = rng.bernoulli(params.p_burst_fail);

  bool blocking = blocked;
  for (int j = 0; j < params.n_repeats; ++j) {
    if (blocking && !rng.bernoulli(params.s_surv)) blocking = false;
    if (blocking) continue;
    if (rng.bernoulli(params.p_click) && !dropout) {
      const double t = j * period + emission_delay(rng.uniform(), params.emission_tau_ns, period);
      rec.clicks.push_back({j, t});
    }
  }
  const bool any_signal = !rec.clicks.empty();

  if (params.dark_mode == DarkMode::PerTrial) {
    if (rng.bernoulli(params.p_dark)) {
      const double t = rng.uniform() * params.burst_window_ns;
      const int j = std::min(params.n_repeats - 1, static_cast<int>(t / period));
      rec.clicks.push_back({j, t});
    }
  } else {
    for (int j = 0; j < params.n_repeats; ++j) {
      if (rng.bernoulli(params.p_dark)) rec.clicks.push_back({j, (j + rng.uniform()) * period});
    }
  }
  std::sort(rec.clicks.begin(), rec.clicks.end(),
            [](const Click& a, const Click& b) { return a.time_ns < b.time_ns; });

  if (!prepared) {
    rec.branch = Branch::PrepFail;
  } else if (blocked) {
    rec.branch = (!any_signal && !rec.clicks.empty()) ? Branch::DarkOnly : Branch::Blocked;
  } else {
    rec.branch = Branch::Unblocked;
  }
  return rec;
}

Dataset simulate_dataset(const QubitState<double>& state, const MeasurementBasis<double>& basis,
                         std::size_t n_trials, const BurstParams& params,
                         std::uint64_t master_seed, unsigned workers) {
  require(n_trials >= 1, "simulate_dataset: n_trials must be >= 1");
  params.validate();

  Dataset ds;
  ds.prepared_state = state;
  ds.basis = basis;
  ds.params = params;
  ds.seed = master_seed;
  ds.records.resize(n_trials);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      TrialRng rng = TrialRng::substream(master_seed, i);
      ds.records[i] = simulate_trial(state, basis, params, rng);
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_trials));
  if (workers <= 1) {
    run_range(0, n_trials);
    return ds;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n_trials, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
  }  // joins
  return ds;
}

ExpectedStatistics expected_statistics(const QubitState<double>& state,
                                       const MeasurementBasis<double>& basis,
                                       const BurstParams& params) {
  params.validate();
  const int n = params.n_repeats;
  const double f = params.p_burst_fail;
  const double s = params.s_surv;

  VectorXd unblocked = (1.0 - f) * binomial_pmf(n, params.p_click);
  unblocked(0) += f;

  // Blockade lost at the survival check before repeat j (1-based) leaves
  // n - j + 1 open repeats.
  VectorXd blocked = VectorXd::Zero(n + 1);
  blocked(0) = std::pow(s, n);
  for (int j = 1; j <= n; ++j) {
    const int open = n - j + 1;
    VectorXd tail = (1.0 - f) * binomial_pmf(open, params.p_click);
    tail(0) += f;
    blocked.head(open + 1) += std::pow(s, j - 1) * (1.0 - s) * tail;
  }

  const double q2 = blockade_probability(state, basis, params);
  ExpectedStatistics out;
  out.weight_prep_fail = 1.0 - params.eta_prep;
  out.weight_blocked = params.eta_prep * q2;
  out.weight_unblocked = params.eta_prep * (1.0 - q2);

  const VectorXd signal =
      (out.weight_prep_fail + out.weight_unblocked) * unblocked + out.weight_blocked * blocked;
  const VectorXd success = (1.0 - q2) * unblocked + q2 * blocked;

  VectorXd dark;
  if (params.dark_mode == DarkMode::PerTrial) {
    dark.resize(2);
    dark << 1.0 - params.p_dark, params.p_dark;
  } else {
    dark = binomial_pmf(n, params.p_dark);
  }

  out.distribution = padded(convolve(signal, dark), params.max_total() + 1);
  out.mean_photons = mean_of(out.distribution);
  out.prob_zero = out.distribution(0);
  out.prob_geq1 = 1.0 - out.prob_zero;
  out.mean_given_prep_success = mean_of(convolve(success, dark));
  return out;
}

std::uint64_t TemporalProfile::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

TemporalProfile temporal_profile(const Dataset& ds) {
  require(!ds.records.empty(), "temporal_profile: empty dataset");
  TemporalProfile prof;
  prof.bin_size_ns = ds.params.bin_size_ns;
  const auto n_bins =
      static_cast<std::size_t>(std::ceil(ds.params.burst_window_ns / prof.bin_size_ns - 1e-9));
  prof.counts.assign(n_bins, 0);
  for (const auto& rec : ds.records) {
    for (const auto& c : rec.clicks) {
      auto bin = static_cast<std::size_t>(std::max(0.0, c.time_ns) / prof.bin_size_ns);
      prof.counts[std::min(bin, n_bins - 1)] += 1;
    }
  }
  return prof;
}

std::vector<std::uint64_t> photon_histogram(const Dataset& ds) {
  require(!ds.records.empty(), "photon_histogram: empty dataset");
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(ds.params.max_total()) + 1, 0);
  for (const auto& rec : ds.records) {
    const auto n = static_cast<std::size_t>(rec.total());
    if (n >= hist.size()) hist.resize(n + 1, 0);
    hist[n] += 1;
  }
  return hist;
}

double mean_photons(const Dataset& ds) {
  require(!ds.records.empty(), "mean_photons: empty dataset");
  double sum = 0.0;
  for (const auto& rec : ds.records) sum += rec.total();
  return sum / static_cast<double>(ds.records.size());
}

double fraction_with_at_least(const Dataset& ds, int threshold) {
  require(!ds.records.empty(), "fraction_with_at_least: empty dataset");
  std::size_t hits = 0;
  for (const auto& rec : ds.records) hits += rec.total() >= threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ds.records.size());
}

}  // namespace superatom
