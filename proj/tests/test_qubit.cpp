#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "superatom/qubit.hpp"

using namespace superatom;

namespace {

constexpr double kPi = std::numbers::pi;

QubitState<double> random_state(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  return QubitState<double>::normalized({n(gen), n(gen)}, {n(gen), n(gen)});
}

void expect_matrix_near(const Matrix2c<double>& a, const Matrix2c<double>& b, double tol) {
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), tol) << "a=\n" << a << "\nb=\n" << b;
}

}  // namespace

TEST(State, RejectsUnnormalizedAmplitudes) {
  EXPECT_THROW(QubitState<double>(0.88, 0.48), ValidationError);
  EXPECT_THROW(QubitState<double>::normalized(0.0, 0.0), ValidationError);
  const auto s = QubitState<double>::normalized(0.88, 0.48);
  EXPECT_NEAR(s.population_r1() + s.population_r2(), 1.0, 1e-15);
}

TEST(RotationTest, ZeroAreaIsIdentity) {
  expect_matrix_near(rotation_unitary(0.0, 1.234), Matrix2c<double>::Identity(), 1e-15);
}

TEST(RotationTest, PiPulseTransfersPopulation) {
  const auto out = prepare_state(Rotation<double>(kPi, 0.0));
  EXPECT_NEAR(out.population_r2(), 1.0, 1e-15);
}

TEST(RotationTest, HalfPiPulseSplitsPopulation) {
  const auto out = prepare_state(Rotation<double>(kPi / 2, 0.0));
  EXPECT_NEAR(out.population_r1(), 0.5, 1e-15);
  EXPECT_NEAR(out.population_r2(), 0.5, 1e-15);
}

TEST(RotationTest, IsUnitary) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (int i = 0; i < 50; ++i) {
    const auto m = rotation_unitary(u(gen), u(gen));
    expect_matrix_near(m.adjoint() * m, Matrix2c<double>::Identity(), 1e-12);
  }
}

TEST(RotationTest, OppositePhaseUndoesPulse) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (int i = 0; i < 50; ++i) {
    const double th = u(gen), ph = u(gen);
    expect_matrix_near(rotation_unitary(th, ph + kPi) * rotation_unitary(th, ph),
                       Matrix2c<double>::Identity(), 1e-10);
  }
}

TEST(RotationTest, SameAxisAreasAdd) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, kPi);
  for (int i = 0; i < 50; ++i) {
    const double a = u(gen), b = u(gen), ph = 2 * u(gen);
    expect_matrix_near(rotation_unitary(a, ph) * rotation_unitary(b, ph), rotation_unitary(a + b, ph),
                       1e-10);
  }
}

TEST(RotationTest, PhaseWrapsAndAreaValidated) {
  EXPECT_NEAR(Rotation<double>(1.0, -kPi / 2).phi, 1.5 * kPi, 1e-15);
  EXPECT_NEAR(Rotation<double>(1.0, 5 * kPi).phi, kPi, 1e-12);
  EXPECT_THROW(Rotation<double>(-0.1, 0.0), ValidationError);
  EXPECT_THROW(Rotation<double>(7.0, 0.0), ValidationError);
}

TEST(Prepare, ZeroAreaGivesR1) {
  EXPECT_NEAR(born_probability(prepare_state(Rotation<double>(0.0, 0.0)), QubitState<double>::r1()), 1.0,
              1e-15);
}

TEST(Prepare, HalfPiGivesDiagonalUpToPhase) {
  const auto s = prepare_state(Rotation<double>(kPi / 2, kPi / 2));
  EXPECT_NEAR(born_probability(s, states::diagonal()), 1.0, 1e-12);
}

TEST(Prepare, PulseAreaForUnequalSuperposition) {
  const auto target = QubitState<double>::normalized(0.88, 0.48);
  const double theta = preparation_pulse_area(target);
  const auto s = prepare_state(Rotation<double>(theta, kPi / 2));
  // (0.88^2, 0.48^2) / (0.88^2 + 0.48^2)
  EXPECT_NEAR(s.population_r1(), 0.7744 / 1.0048, 1e-12);
  EXPECT_NEAR(s.population_r2(), 0.2304 / 1.0048, 1e-12);
  EXPECT_NEAR(born_probability(s, target), 1.0, 1e-12);

  // Unnormalized split, with 2 acos(0.88) as the pulse area.
  const auto raw = prepare_state(Rotation<double>(2 * std::acos(0.88), kPi / 2));
  EXPECT_NEAR(raw.population_r1(), 0.7744, 1e-12);
  EXPECT_NEAR(raw.population_r2(), 0.2256, 1e-12);
}

TEST(Basis, ZHasNoPulse) {
  const auto b = make_basis<double>(BasisLabel::Z);
  EXPECT_EQ(b.pulse.theta, 0.0);
  EXPECT_NEAR(born_probability(b.plus_state, QubitState<double>::r1()), 1.0, 1e-15);
}

TEST(Basis, InversePulseMapsPlusStateToR1) {
  const std::pair<BasisLabel, QubitState<double>> cases[] = {
      {BasisLabel::X, states::diagonal()}, {BasisLabel::Y, states::right()}};
  for (const auto& [label, plus] : cases) {
    const auto rot = basis_rotation<double>(label, {});
    EXPECT_NEAR(rot.theta, kPi / 2, 1e-15);
    const Matrix2c<double> inv = rotation_unitary(rot).adjoint();
    EXPECT_NEAR(born_probability(apply_unitary(inv, plus), QubitState<double>::r1()), 1.0, 1e-10)
        << to_string(label);
  }
  const auto x = basis_rotation<double>(BasisLabel::X, {});
  const auto y = basis_rotation<double>(BasisLabel::Y, {});
  EXPECT_NEAR(y.phi - x.phi, kPi / 2, 1e-15);
}

TEST(Basis, EveryBasisUndoesItsOwnPlusState) {
  for (double x_phase : {0.0, kPi / 2, 1.0}) {
    for (auto label : {BasisLabel::Z, BasisLabel::X, BasisLabel::Y}) {
      const auto b = make_basis<double>(label, {x_phase});
      const Matrix2c<double> inv = rotation_unitary(b.pulse).adjoint();
      EXPECT_NEAR(born_probability(apply_unitary(inv, b.plus_state), QubitState<double>::r1()), 1.0,
                  1e-10);
      EXPECT_NEAR(born_probability(b.plus_state, b.minus_state), 0.0, 1e-15);
    }
  }
}

TEST(Basis, ParsesLabels) {
  EXPECT_EQ(parse_basis("Y"), BasisLabel::Y);
  EXPECT_STREQ(to_string(BasisLabel::X), "X");
  EXPECT_THROW(parse_basis("W"), ValidationError);
}

TEST(Born, BasisStateOverlaps) {
  const auto r1 = QubitState<double>::r1();
  EXPECT_EQ(born_probability(r1, r1), 1.0);
  EXPECT_EQ(born_probability(r1, QubitState<double>::r2()), 0.0);
}

TEST(Born, DiagonalOverlapOfUnequalSuperposition) {
  const auto s = QubitState<double>::normalized(0.88, 0.48);
  const double expected = (0.88 + 0.48) * (0.88 + 0.48) / 2.0 / (0.88 * 0.88 + 0.48 * 0.48);
  EXPECT_NEAR(born_probability(s, states::diagonal()), expected, 1e-14);
  EXPECT_NEAR(born_probability(s, states::diagonal()), 0.9204, 1e-4);
}

TEST(Born, OrthonormalPairSumsToOne) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (int i = 0; i < 100; ++i) {
    const auto psi = random_state(gen);
    const auto u2 = rotation_unitary(u(gen) / 2, u(gen));
    const auto a = apply_unitary(u2, QubitState<double>::r1());
    const auto b = apply_unitary(u2, QubitState<double>::r2());
    EXPECT_NEAR(born_probability(psi, a) + born_probability(psi, b), 1.0, 1e-12);
  }
}

TEST(Bloch, NamedStatesPointAlongAxes) {
  EXPECT_LT((bloch_vector(states::diagonal()) - Eigen::Vector3d(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((bloch_vector(states::right()) - Eigen::Vector3d(0, 1, 0)).norm(), 1e-15);
  EXPECT_LT((bloch_vector(QubitState<double>::r1()) - Eigen::Vector3d(0, 0, 1)).norm(), 1e-15);
}

TEST(Templates, FloatRotation) {
  const auto s = prepare_state(Rotation<float>(std::numbers::pi_v<float>, 0.0f));
  EXPECT_NEAR(s.population_r2(), 1.0f, 1e-6f);
}
