#include "superatom/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "superatom/errors.hpp"

namespace superatom {

Outcome classify(const BurstRecord& record, int threshold) {
  require(threshold >= 1, "classify: threshold must be >= 1");
  return record.total() >= threshold ? Outcome::R1 : Outcome::R2;
}

DiscriminationResult make_discrimination(double p_r2_given_r2, double p_r1_given_r1) {
  DiscriminationResult r;
  r.p_r2_given_r2 = p_r2_given_r2;
  r.p_r1_given_r1 = p_r1_given_r1;
  r.raw_fidelity = 0.5 * (p_r2_given_r2 + p_r1_given_r1);
  return r;
}

DiscriminationResult discrimination(const Dataset& ds_r1, const Dataset& ds_r2, int threshold) {
  require(!ds_r1.records.empty() && !ds_r2.records.empty(),
          "discrimination: datasets must be nonempty");
  std::size_t r1_hits = 0;
  for (const auto& rec : ds_r1.records) r1_hits += classify(rec, threshold) == Outcome::R1;
  std::size_t r2_hits = 0;
  for (const auto& rec : ds_r2.records) r2_hits += classify(rec, threshold) == Outcome::R2;
  return make_discrimination(static_cast<double>(r2_hits) / ds_r2.records.size(),
                             static_cast<double>(r1_hits) / ds_r1.records.size());
}

DiscriminationResult corrected_conditionals(const DiscriminationResult& observed,
                                            double p0_given_r1, double eta_prep) {
  require(eta_prep > 0.0 && eta_prep <= 1.0, "corrected_conditionals: eta_prep must be in (0,1]");
  require(is_probability(p0_given_r1), "corrected_conditionals: p0_given_r1 must be in [0,1]");
  const double raw = (observed.p_r2_given_r2 - (1.0 - eta_prep) * p0_given_r1) / eta_prep;
  const double clipped = std::clamp(raw, 0.0, 1.0);
  DiscriminationResult out = make_discrimination(clipped, observed.p_r1_given_r1);
  out.clamped = clipped != raw;
  if (out.clamped) {
    std::clog << "warning: corrected P(0|r2) = " << raw
              << " fell outside [0,1]; the preparation model does not match the data\n";
  }
  return out;
}

double corrected_mean_photons(double mean_r2, double mean_r1, double eta_prep) {
  require(eta_prep > 0.0 && eta_prep <= 1.0, "corrected_mean_photons: eta_prep must be in (0,1]");
  return (mean_r2 - (1.0 - eta_prep) * mean_r1) / eta_prep;
}

PeakWindow default_peak_window(const BurstParams& params) {
  return {0.0, std::min(params.repeat_period_ns(), 3.0 * params.emission_tau_ns)};
}

double window_area(const TemporalProfile& profile, const PeakWindow& window) {
  require(window.stop_ns > window.start_ns, "peak window must have positive width");
  constexpr double eps = 1e-9;
  double area = 0.0;
  for (std::size_t i = 0; i < profile.counts.size(); ++i) {
    const double t = profile.bin_start_ns(i);
    if (t >= window.start_ns - eps && t < window.stop_ns - eps) area += profile.counts[i];
  }
  return area;
}

double prep_efficiency_from_peaks(const TemporalProfile& profile_r1,
                                  const TemporalProfile& profile_r2, const PeakWindow& window) {
  require(profile_r1.bin_size_ns == profile_r2.bin_size_ns &&
              profile_r1.counts.size() == profile_r2.counts.size(),
          "prep_efficiency_from_peaks: profiles must share binning");
  const double a1 = window_area(profile_r1, window);
  require(a1 > 0.0, "prep_efficiency_from_peaks: |r1> first peak is empty");
  const double a2 = window_area(profile_r2, window);
  return std::clamp(1.0 - a2 / a1, 0.0, 1.0);
}

double poisson_pmf(int n, double mean) {
  require(mean >= 0.0, "poisson_pmf: mean must be >= 0");
  require(n >= 0, "poisson_pmf: n must be >= 0");
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double fit_poisson(std::span<const std::uint64_t> histogram) {
  double weight = 0.0;
  double moment = 0.0;
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    weight += static_cast<double>(histogram[k]);
    moment += static_cast<double>(k) * static_cast<double>(histogram[k]);
  }
  require(weight > 0.0, "fit_poisson: histogram is empty");
  return moment / weight;
}

StokesVector<double> stokes_from_basis_probs(std::span<const BasisProbability> probs) {
  require(probs.size() == 3, "stokes_from_basis_probs: need exactly three bases");
  Eigen::Matrix3d axes;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    require(is_probability(probs[i].p_plus), "basis probability must be in [0,1]");
    axes.row(i) = bloch_vector(probs[i].basis.plus_state).transpose();
    rhs(i) = 2.0 * probs[i].p_plus - 1.0;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(axes);
  require(lu.isInvertible(), "readout bases do not span the Bloch sphere");
  return lu.solve(rhs);
}

DensityMatrix2<double> project_physical(const DensityMatrix2<double>& rho) {
  require((rho - rho.adjoint()).norm() <= 1e-10, "project_physical: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<DensityMatrix2<double>> eig(rho);
  const Eigen::Vector2d values = eig.eigenvalues();
  if (values.minCoeff() >= 0.0) return rho;
  const Eigen::Vector2d clipped = values.cwiseMax(0.0);
  const auto& vecs = eig.eigenvectors();
  DensityMatrix2<double> out =
      vecs * clipped.cast<Complex<double>>().asDiagonal() * vecs.adjoint();
  out /= out.trace().real();
  return 0.5 * (out + out.adjoint());
}

double state_fidelity(const DensityMatrix2<double>& rho, const QubitState<double>& psi) {
  const auto& v = psi.amplitudes();
  return std::clamp(v.dot(rho * v).real(), 0.0, 1.0);
}

TomographyResult reconstruct(std::vector<BasisProbability> basis_probs,
                             const QubitState<double>& target) {
  TomographyResult out;
  out.basis_probs = std::move(basis_probs);
  out.stokes_raw = stokes_from_basis_probs(out.basis_probs);
  out.density = project_physical(density_from_stokes(out.stokes_raw));
  out.stokes = stokes_from_density(out.density);
  out.fidelity = state_fidelity(out.density, target);
  return out;
}

}  // namespace superatom
