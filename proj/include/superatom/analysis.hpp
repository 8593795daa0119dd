#ifndef SUPERATOM_ANALYSIS_HPP
#define SUPERATOM_ANALYSIS_HPP

// Photon-count analysis: threshold discrimination, preparation-corrected
// fidelity, first-peak preparation estimate, Poisson fits and Stokes
// tomography with physicality projection.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "superatom/burst.hpp"
#include "superatom/qubit.hpp"

namespace superatom {

enum class Outcome { R1, R2 };

/// N >= threshold photons reads out |r1>; fewer reads out |r2>.
Outcome classify(const BurstRecord& record, int threshold = 1);

struct DiscriminationResult {
  double p_r2_given_r2 = 0.0;
  double p_r1_given_r1 = 0.0;
  double raw_fidelity = 0.0;  // unweighted mean of the two conditionals
  bool clamped = false;
};

DiscriminationResult make_discrimination(double p_r2_given_r2, double p_r1_given_r1);

DiscriminationResult discrimination(const Dataset& ds_r1, const Dataset& ds_r2, int threshold = 1);

/// Removes the failed-preparation admixture from the |r2> conditional:
/// P(0|r2) = (P_obs(0|r2) - (1 - eta) p0_given_r1) / eta, clamped to [0,1].
DiscriminationResult corrected_conditionals(const DiscriminationResult& observed,
                                            double p0_given_r1, double eta_prep);

/// Mean photon number of the |r2> run with the failed-preparation share removed.
double corrected_mean_photons(double mean_r2, double mean_r1, double eta_prep);

struct PeakWindow {
  double start_ns = 0.0;
  double stop_ns = 0.0;
};

/// First repeat, cut at three emission time constants.
PeakWindow default_peak_window(const BurstParams& params);

double window_area(const TemporalProfile& profile, const PeakWindow& window);

/// 1 - (first-peak area of the |r2> run) / (first-peak area of the |r1> run).
double prep_efficiency_from_peaks(const TemporalProfile& profile_r1,
                                  const TemporalProfile& profile_r2, const PeakWindow& window);

double poisson_pmf(int n, double mean);

/// Maximum-likelihood Poisson mean of a photon-number histogram.
double fit_poisson(std::span<const std::uint64_t> histogram);

// ---------------------------------------------------------------------------
// Tomography. Stokes convention: s = (<X>, <Y>, <Z>) with |r1> at +Z,
// |D> at +X and |R> at +Y.

template <typename Scalar = double>
using StokesVector = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar = double>
using DensityMatrix2 = Matrix2c<Scalar>;

template <typename Scalar>
StokesVector<Scalar> stokes_from_probs(Scalar p_r1, Scalar p_d, Scalar p_r) {
  return {Scalar(2) * p_d - Scalar(1), Scalar(2) * p_r - Scalar(1), Scalar(2) * p_r1 - Scalar(1)};
}

struct BasisProbability {
  MeasurementBasis<double> basis;
  double p_plus = 0.0;  // probability of reading out the basis plus-state
};

/// Solves n_B . s = 2 p_B - 1 for three readout bases with independent
/// Bloch axes n_B. Reduces to stokes_from_probs for the default convention.
StokesVector<double> stokes_from_basis_probs(std::span<const BasisProbability> probs);

template <typename Scalar>
DensityMatrix2<Scalar> density_from_stokes(const StokesVector<Scalar>& s) {
  using C = Complex<Scalar>;
  DensityMatrix2<Scalar> rho;
  rho << C(Scalar(1) + s(2), 0), C(s(0), -s(1)),
         C(s(0), s(1)), C(Scalar(1) - s(2), 0);
  return rho / Scalar(2);
}

template <typename Scalar>
StokesVector<Scalar> stokes_from_density(const DensityMatrix2<Scalar>& rho) {
  return {Scalar(2) * rho(1, 0).real(), Scalar(2) * rho(1, 0).imag(),
          (rho(0, 0) - rho(1, 1)).real()};
}

/// Clips negative eigenvalues and renormalizes the trace. For a qubit this is
/// the radial shrink of the Bloch vector onto the unit sphere.
DensityMatrix2<double> project_physical(const DensityMatrix2<double>& rho);

double state_fidelity(const DensityMatrix2<double>& rho, const QubitState<double>& psi);

struct TomographyResult {
  std::vector<BasisProbability> basis_probs;
  StokesVector<double> stokes_raw = StokesVector<double>::Zero();
  StokesVector<double> stokes = StokesVector<double>::Zero();  // after projection
  DensityMatrix2<double> density = DensityMatrix2<double>::Zero();
  double fidelity = 0.0;
};

TomographyResult reconstruct(std::vector<BasisProbability> basis_probs,
                             const QubitState<double>& target);

}  // namespace superatom

#endif
