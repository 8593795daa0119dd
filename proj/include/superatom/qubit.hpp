#ifndef SUPERATOM_QUBIT_HPP
#define SUPERATOM_QUBIT_HPP

// MW Raman rotations on the {|r1>, |r2>} qubit and the Z/X/Y measurement
// bases used for readout and tomography.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "superatom/errors.hpp"

namespace superatom {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using Matrix2c = Eigen::Matrix<Complex<Scalar>, 2, 2>;

template <typename Scalar>
using Vector2c = Eigen::Matrix<Complex<Scalar>, 2, 1>;

/// Normalized amplitude pair a_r1|r1> + a_r2|r2>. Global phase is not
/// canonicalized; compare states through born_probability.
template <typename Scalar = double>
class QubitState {
 public:
  static constexpr Scalar kNormTolerance = Scalar(1e-9);

  QubitState() : amps_(Complex<Scalar>(1), Complex<Scalar>(0)) {}

  QubitState(Complex<Scalar> a_r1, Complex<Scalar> a_r2) : amps_(a_r1, a_r2) {
    using std::abs;
    require(abs(amps_.squaredNorm() - Scalar(1)) <= kNormTolerance,
            "QubitState amplitudes must be normalized");
  }

  explicit QubitState(const Vector2c<Scalar>& amps) : QubitState(amps(0), amps(1)) {}

  /// Rescales arbitrary (nonzero) amplitudes onto the unit sphere.
  static QubitState normalized(Complex<Scalar> a_r1, Complex<Scalar> a_r2) {
    Vector2c<Scalar> v(a_r1, a_r2);
    const Scalar n = v.norm();
    require(n > Scalar(0), "QubitState: zero amplitude vector");
    return QubitState(v / n);
  }

  static QubitState r1() { return QubitState(Complex<Scalar>(1), Complex<Scalar>(0)); }
  static QubitState r2() { return QubitState(Complex<Scalar>(0), Complex<Scalar>(1)); }

  Complex<Scalar> a_r1() const { return amps_(0); }
  Complex<Scalar> a_r2() const { return amps_(1); }
  const Vector2c<Scalar>& amplitudes() const { return amps_; }

  Scalar population_r1() const { return std::norm(amps_(0)); }
  Scalar population_r2() const { return std::norm(amps_(1)); }

 private:
  Vector2c<Scalar> amps_;
};

/// MW pulse with area theta and relative phase phi. phi is wrapped into
/// [0, 2pi) on construction.
template <typename Scalar = double>
struct Rotation {
  Scalar theta{};
  Scalar phi{};

  Rotation() = default;
  Rotation(Scalar theta_, Scalar phi_) : theta(theta_), phi(wrap(phi_)) {
    constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    require(theta >= Scalar(0) && theta <= two_pi + Scalar(1e-12),
            "Rotation.theta must be in [0, 2pi]");
  }

  static Scalar wrap(Scalar phi) {
    constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    Scalar w = std::fmod(phi, two_pi);
    if (w < Scalar(0)) w += two_pi;
    if (w >= two_pi) w = Scalar(0);
    return w;
  }
};

/// U(theta, phi) = [[cos, -i e^{-i phi} sin], [-i e^{i phi} sin, cos]] with
/// half-angle arguments. U(theta, phi + pi) is the inverse pulse.
template <typename Scalar>
Matrix2c<Scalar> rotation_unitary(Scalar theta, Scalar phi) {
  using C = Complex<Scalar>;
  const Scalar c = std::cos(theta / 2);
  const Scalar s = std::sin(theta / 2);
  const C minus_i(0, -1);
  Matrix2c<Scalar> u;
  u << C(c), minus_i * std::polar(s, -phi),
       minus_i * std::polar(s, phi), C(c);
  return u;
}

template <typename Scalar>
Matrix2c<Scalar> rotation_unitary(const Rotation<Scalar>& rot) {
  return rotation_unitary(rot.theta, rot.phi);
}

template <typename Scalar>
QubitState<Scalar> apply_unitary(const Matrix2c<Scalar>& u, const QubitState<Scalar>& state) {
  Vector2c<Scalar> out = u * state.amplitudes();
  return QubitState<Scalar>(out / out.norm());
}

template <typename Scalar>
QubitState<Scalar> prepare_state(const Rotation<Scalar>& rot) {
  return apply_unitary(rotation_unitary(rot), QubitState<Scalar>::r1());
}

/// Pulse area that takes |r1> to the populations of `state`.
template <typename Scalar>
Scalar preparation_pulse_area(const QubitState<Scalar>& state) {
  using std::abs;
  const Scalar a = std::min(Scalar(1), abs(state.a_r1()));
  return Scalar(2) * std::acos(a);
}

template <typename Scalar>
Scalar born_probability(const QubitState<Scalar>& state, const QubitState<Scalar>& outcome) {
  return std::norm(outcome.amplitudes().dot(state.amplitudes()));
}

/// Bloch vector (<X>, <Y>, <Z>) with |r1> at +Z, |D> at +X, |R> at +Y.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> bloch_vector(const QubitState<Scalar>& state) {
  const Complex<Scalar> coh = std::conj(state.a_r1()) * state.a_r2();
  return {Scalar(2) * coh.real(), Scalar(2) * coh.imag(),
          state.population_r1() - state.population_r2()};
}

enum class BasisLabel { Z, X, Y };

inline BasisLabel parse_basis(const std::string& label) {
  if (label == "Z" || label == "z") return BasisLabel::Z;
  if (label == "X" || label == "x") return BasisLabel::X;
  if (label == "Y" || label == "y") return BasisLabel::Y;
  throw ValidationError("unknown measurement basis '" + label + "'");
}

inline const char* to_string(BasisLabel label) {
  switch (label) {
    case BasisLabel::Z: return "Z";
    case BasisLabel::X: return "X";
    case BasisLabel::Y: return "Y";
  }
  return "?";
}

/// MW phase assigned to the X readout pulse; the Y pulse sits a quarter turn
/// later. With the rotation convention above, pi/2 makes the X plus-state
/// (|r1> + |r2>)/sqrt2.
template <typename Scalar = double>
struct BasisConvention {
  Scalar x_phase = std::numbers::pi_v<Scalar> / 2;
};

template <typename Scalar>
Rotation<Scalar> basis_rotation(BasisLabel label,
                                const BasisConvention<Scalar>& conv = {}) {
  constexpr Scalar half_pi = std::numbers::pi_v<Scalar> / 2;
  switch (label) {
    case BasisLabel::Z: return {Scalar(0), Scalar(0)};
    case BasisLabel::X: return {half_pi, conv.x_phase};
    case BasisLabel::Y: return {half_pi, conv.x_phase + half_pi};
  }
  throw ValidationError("unknown measurement basis");
}

/// Readout basis; plus_state maps to |r1> (photon burst) under the inverse
/// of the basis pulse.
template <typename Scalar = double>
struct MeasurementBasis {
  BasisLabel label{BasisLabel::Z};
  Rotation<Scalar> pulse{};
  QubitState<Scalar> plus_state{};
  QubitState<Scalar> minus_state{QubitState<Scalar>::r2()};
};

template <typename Scalar = double>
MeasurementBasis<Scalar> make_basis(BasisLabel label, const BasisConvention<Scalar>& conv = {}) {
  MeasurementBasis<Scalar> b;
  b.label = label;
  b.pulse = basis_rotation(label, conv);
  const Matrix2c<Scalar> u = rotation_unitary(b.pulse);
  b.plus_state = apply_unitary(u, QubitState<Scalar>::r1());
  b.minus_state = apply_unitary(u, QubitState<Scalar>::r2());
  return b;
}

namespace states {

template <typename Scalar = double>
QubitState<Scalar> diagonal() {
  const Scalar h = std::sqrt(Scalar(0.5));
  return {Complex<Scalar>(h), Complex<Scalar>(h)};
}
template <typename Scalar = double>
QubitState<Scalar> antidiagonal() {
  const Scalar h = std::sqrt(Scalar(0.5));
  return {Complex<Scalar>(h), Complex<Scalar>(-h)};
}
template <typename Scalar = double>
QubitState<Scalar> right() {
  const Scalar h = std::sqrt(Scalar(0.5));
  return {Complex<Scalar>(h), Complex<Scalar>(0, h)};
}
template <typename Scalar = double>
QubitState<Scalar> left() {
  const Scalar h = std::sqrt(Scalar(0.5));
  return {Complex<Scalar>(h), Complex<Scalar>(0, -h)};
}

}  // namespace states

}  // namespace superatom

#endif
