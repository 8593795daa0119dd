#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "superatom/analysis.hpp"

using namespace superatom;

namespace {

BurstRecord record_with(int total) {
  BurstRecord r;
  for (int i = 0; i < total; ++i) r.clicks.push_back({i, 400.0 * i + 10.0});
  return r;
}

Dataset dataset_of(const std::vector<int>& totals) {
  Dataset ds;
  for (int t : totals) ds.records.push_back(record_with(t));
  return ds;
}

QubitState<double> random_state(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  return QubitState<double>::normalized({n(gen), n(gen)}, {n(gen), n(gen)});
}

std::vector<BasisProbability> exact_probs(const QubitState<double>& psi, double x_phase = std::numbers::pi / 2) {
  std::vector<BasisProbability> out;
  for (auto label : {BasisLabel::Z, BasisLabel::X, BasisLabel::Y}) {
    const auto b = make_basis<double>(label, {x_phase});
    out.push_back({b, born_probability(psi, b.plus_state)});
  }
  return out;
}

}  // namespace

TEST(Classify, ThresholdAtOnePhoton) {
  EXPECT_EQ(classify(record_with(0)), Outcome::R2);
  EXPECT_EQ(classify(record_with(1)), Outcome::R1);
  EXPECT_EQ(classify(record_with(12)), Outcome::R1);
  EXPECT_EQ(classify(record_with(1), 2), Outcome::R2);
  EXPECT_THROW(classify(record_with(1), 0), ValidationError);
}

TEST(Discrimination, PerfectDatasets) {
  const auto r = discrimination(dataset_of({1, 3, 12}), dataset_of({0, 0}));
  EXPECT_EQ(r.p_r1_given_r1, 1.0);
  EXPECT_EQ(r.p_r2_given_r2, 1.0);
  EXPECT_EQ(r.raw_fidelity, 1.0);
}

TEST(Discrimination, CountsExactFrequencies) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> tot(0, 4);
  std::vector<int> a(997), b(503);
  for (int& x : a) x = tot(gen);
  for (int& x : b) x = tot(gen);
  for (int threshold : {1, 2, 3}) {
    const double hits_a = std::count_if(a.begin(), a.end(), [&](int t) { return t >= threshold; });
    const double miss_b = std::count_if(b.begin(), b.end(), [&](int t) { return t < threshold; });
    const auto r = discrimination(dataset_of(a), dataset_of(b), threshold);
    EXPECT_NEAR(r.p_r1_given_r1, hits_a / a.size(), 1e-15);
    EXPECT_NEAR(r.p_r2_given_r2, miss_b / b.size(), 1e-15);
    EXPECT_NEAR(r.raw_fidelity, 0.5 * (r.p_r1_given_r1 + r.p_r2_given_r2), 1e-15);
  }
}

TEST(Discrimination, SwappedInputsGiveComplements) {
  const auto a = dataset_of({0, 1, 2, 3, 0, 5});
  const auto b = dataset_of({0, 0, 1, 0});
  const auto fwd = discrimination(a, b);
  const auto rev = discrimination(b, a);
  EXPECT_NEAR(rev.p_r1_given_r1, 1 - fwd.p_r2_given_r2, 1e-15);
  EXPECT_NEAR(rev.p_r2_given_r2, 1 - fwd.p_r1_given_r1, 1e-15);
  EXPECT_NEAR(rev.raw_fidelity, 1 - fwd.raw_fidelity, 1e-15);
}

TEST(Discrimination, RejectsEmptyDataset) {
  EXPECT_THROW(discrimination(Dataset{}, dataset_of({0})), ValidationError);
}

TEST(Correction, PublishedInputs) {
  const auto r = corrected_conditionals(make_discrimination(0.908, 0.918), 0.082, 0.955);
  EXPECT_NEAR(r.p_r2_given_r2, (0.908 - 0.045 * 0.082) / 0.955, 1e-15);
  EXPECT_NEAR(r.p_r2_given_r2, 0.9469, 1e-4);
  EXPECT_EQ(r.p_r1_given_r1, 0.918);
  EXPECT_NEAR(r.raw_fidelity, 0.9325, 1e-4);
  EXPECT_FALSE(r.clamped);
}

TEST(Correction, UnitEfficiencyIsIdentity) {
  const auto obs = make_discrimination(0.8, 0.7);
  const auto r = corrected_conditionals(obs, 0.3, 1.0);
  EXPECT_EQ(r.p_r2_given_r2, obs.p_r2_given_r2);
  EXPECT_EQ(r.raw_fidelity, obs.raw_fidelity);
}

TEST(Correction, RecoversSyntheticMixture) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double truth = u(gen), fail = u(gen), eta = 0.05 + 0.95 * u(gen);
    const double observed = eta * truth + (1 - eta) * fail;
    const auto r = corrected_conditionals(make_discrimination(observed, 0.9), fail, eta);
    EXPECT_NEAR(r.p_r2_given_r2, truth, 1e-12);
  }
}

TEST(Correction, ClampsAndFlags) {
  const auto r = corrected_conditionals(make_discrimination(0.01, 0.9), 0.9, 0.5);
  EXPECT_EQ(r.p_r2_given_r2, 0.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_THROW(corrected_conditionals(make_discrimination(0.5, 0.5), 0.1, 0.0), ValidationError);
}

TEST(Correction, MeanPhotonsOfBlockadedBranch) {
  const double m = corrected_mean_photons(0.19, 2.63, 0.955);
  EXPECT_NEAR(m, (0.19 - 0.045 * 2.63) / 0.955, 1e-15);
  EXPECT_NEAR(m, 0.075, 5e-4);
}

TEST(PeakEstimate, RatioCases) {
  TemporalProfile r1{2.5, std::vector<std::uint64_t>(200, 0)};
  TemporalProfile r2 = r1;
  r1.counts[3] = 1000;
  r2.counts[3] = 45;
  const PeakWindow w{0.0, 100.0};
  EXPECT_NEAR(prep_efficiency_from_peaks(r1, r2, w), 0.955, 1e-15);
  EXPECT_EQ(prep_efficiency_from_peaks(r1, r1, w), 0.0);
  r2.counts[3] = 0;
  EXPECT_EQ(prep_efficiency_from_peaks(r1, r2, w), 1.0);
  TemporalProfile empty{2.5, std::vector<std::uint64_t>(200, 0)};
  EXPECT_THROW(prep_efficiency_from_peaks(empty, r2, w), ValidationError);
}

TEST(PeakEstimate, WindowIsHalfOpenOnBinStarts) {
  TemporalProfile p{2.5, {1, 2, 4, 8}};
  EXPECT_EQ(window_area(p, {0.0, 5.0}), 3.0);
  EXPECT_EQ(window_area(p, {2.5, 10.0}), 14.0);
  EXPECT_THROW(window_area(p, {5.0, 5.0}), ValidationError);
}

TEST(PeakEstimate, DefaultWindowIsEarlyPartOfFirstRepeat) {
  const BurstParams p;
  const auto w = default_peak_window(p);
  EXPECT_EQ(w.start_ns, 0.0);
  EXPECT_EQ(w.stop_ns, 150.0);
}

TEST(Poisson, ProbabilityOfZero) {
  EXPECT_NEAR(poisson_pmf(0, 2.63), std::exp(-2.63), 1e-15);
  EXPECT_NEAR(poisson_pmf(0, 2.63), 0.0721, 5e-5);
  EXPECT_EQ(poisson_pmf(0, 0.0), 1.0);
  EXPECT_EQ(poisson_pmf(3, 0.0), 0.0);
  EXPECT_NEAR(poisson_pmf(4, 2.63), std::exp(-2.63) * std::pow(2.63, 4) / 24, 1e-15);
  EXPECT_THROW(poisson_pmf(0, -1.0), ValidationError);
}

TEST(Poisson, FitIsSampleMean) {
  std::vector<std::uint64_t> hist;
  for (int k = 0; k < 40; ++k) hist.push_back(static_cast<std::uint64_t>(std::llround(1e12 * poisson_pmf(k, 2.63))));
  EXPECT_NEAR(fit_poisson(hist), 2.63, 1e-9);
  const std::vector<std::uint64_t> h{3, 5, 0, 2};
  EXPECT_NEAR(fit_poisson(h), (5.0 + 6.0) / 10.0, 1e-15);
  EXPECT_THROW(fit_poisson(std::vector<std::uint64_t>{0, 0}), ValidationError);
}

TEST(Stokes, AxisStates) {
  EXPECT_LT((stokes_from_probs(1.0, 0.5, 0.5) - Eigen::Vector3d(0, 0, 1)).norm(), 1e-15);
  EXPECT_LT((stokes_from_probs(0.5, 1.0, 0.5) - Eigen::Vector3d(1, 0, 0)).norm(), 1e-15);
}

TEST(Stokes, UnequalSuperposition) {
  const auto psi = QubitState<double>::normalized(0.88, 0.48);
  const auto probs = exact_probs(psi);
  const auto s = stokes_from_probs(probs[0].p_plus, probs[1].p_plus, probs[2].p_plus);
  const double n = 0.88 * 0.88 + 0.48 * 0.48;
  EXPECT_NEAR(s(0), 2 * 0.88 * 0.48 / n, 1e-12);
  EXPECT_NEAR(s(1), 0.0, 1e-12);
  EXPECT_NEAR(s(2), (0.88 * 0.88 - 0.48 * 0.48) / n, 1e-12);
  EXPECT_LT((stokes_from_basis_probs(probs) - s).norm(), 1e-12);
}

TEST(Stokes, BasisSolveHandlesOtherPhaseConventions) {
  std::mt19937_64 gen(31);
  for (double x_phase : {0.0, 0.7, std::numbers::pi / 2}) {
    const auto psi = random_state(gen);
    const auto s = stokes_from_basis_probs(exact_probs(psi, x_phase));
    EXPECT_LT((s - bloch_vector(psi)).norm(), 1e-12) << x_phase;
  }
}

TEST(Density, FromStokes) {
  const auto mixed = density_from_stokes<double>(Eigen::Vector3d::Zero());
  EXPECT_LT((mixed - 0.5 * DensityMatrix2<double>::Identity()).norm(), 1e-15);
  const auto up = density_from_stokes<double>(Eigen::Vector3d(0, 0, 1));
  DensityMatrix2<double> expected = DensityMatrix2<double>::Zero();
  expected(0, 0) = 1.0;
  EXPECT_LT((up - expected).norm(), 1e-15);
}

TEST(Density, StokesRoundTrip) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d s(u(gen), u(gen), u(gen));
    const auto rho = density_from_stokes(s);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-15);
    EXPECT_LT((rho - rho.adjoint()).norm(), 1e-15);
    EXPECT_LT((stokes_from_density(rho) - s).norm(), 1e-12);
  }
}

TEST(Projection, PhysicalStateUnchanged) {
  const auto rho = density_from_stokes<double>(Eigen::Vector3d(0.3, -0.2, 0.5));
  EXPECT_LT((project_physical(rho) - rho).norm(), 1e-15);
}

TEST(Projection, RadialShrinkToUnitSphere) {
  auto s = stokes_from_density(project_physical(density_from_stokes<double>(Eigen::Vector3d(1.2, 0, 0))));
  EXPECT_LT((s - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);
  const Eigen::Vector3d v(0.6, 0.8, 0.6);
  s = stokes_from_density(project_physical(density_from_stokes(v)));
  EXPECT_LT((s - v / v.norm()).norm(), 1e-12);
}

TEST(Projection, IdempotentAndPositive) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    const auto once = project_physical(density_from_stokes<double>(Eigen::Vector3d(u(gen), u(gen), u(gen))));
    const auto twice = project_physical(once);
    EXPECT_LT((once - twice).norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<DensityMatrix2<double>> eig(once);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR(once.trace().real(), 1.0, 1e-12);
  }
}

TEST(Projection, RejectsNonHermitian) {
  DensityMatrix2<double> rho = DensityMatrix2<double>::Identity() * 0.5;
  rho(0, 1) = 0.3;
  EXPECT_THROW(project_physical(rho), ValidationError);
}

TEST(Fidelity, PureAndMixed) {
  std::mt19937_64 gen(3);
  const auto psi = random_state(gen);
  const DensityMatrix2<double> pure = psi.amplitudes() * psi.amplitudes().adjoint();
  EXPECT_NEAR(state_fidelity(pure, psi), 1.0, 1e-12);
  EXPECT_NEAR(state_fidelity(0.5 * DensityMatrix2<double>::Identity(), psi), 0.5, 1e-15);
}

TEST(Tomography, ExactRoundTripRandomStates) {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 200; ++i) {
    const auto psi = random_state(gen);
    const auto t = reconstruct(exact_probs(psi), psi);
    EXPECT_NEAR(t.fidelity, 1.0, 1e-10);
  }
}
