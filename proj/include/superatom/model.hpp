#ifndef SUPERATOM_MODEL_HPP
#define SUPERATOM_MODEL_HPP

// Closed-form physics of the cavity-enhanced superatom: collective Rabi
// dynamics, retrieval-efficiency saturation and loss-chain composition.
// Everything here is pure and header-only so it can be instantiated for
// any floating-point scalar.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "superatom/errors.hpp"

namespace superatom {

template <typename Scalar = double>
struct RabiParams {
  Scalar omega{};      // rad/s
  Scalar gamma{};      // 1/s, envelope damping
  Scalar amplitude{1}; // contrast

  void validate() const {
    require(omega > Scalar(0), "RabiParams.omega must be > 0");
    require(gamma >= Scalar(0), "RabiParams.gamma must be >= 0");
    require(is_probability(amplitude), "RabiParams.amplitude must be in [0,1]");
  }
};

/// Saturating retrieval model p*C/(C+1) with C = k * OD * enhancement.
/// enhancement is 1 in free space and 2F/pi inside the ring cavity.
template <typename Scalar = double>
struct EfficiencyModel {
  Scalar k{};
  Scalar p{1};
  Scalar enhancement{1};

  void validate() const {
    require(k > Scalar(0), "EfficiencyModel.k must be > 0");
    require(is_probability(p), "EfficiencyModel.p must be in [0,1]");
    require(enhancement >= Scalar(1), "EfficiencyModel.enhancement must be >= 1");
  }
};

struct LossStage {
  std::string name;
  double efficiency{1.0};
};

// Ordered efficiencies between the atoms and the detector click.
class LossChain {
 public:
  LossChain() = default;
  LossChain(std::initializer_list<LossStage> stages) {
    for (const auto& s : stages) add(s.name, s.efficiency);
  }

  LossChain& add(std::string name, double efficiency) {
    require(is_probability(efficiency), "loss stage '" + name + "' must be in [0,1]");
    stages_.push_back({std::move(name), efficiency});
    return *this;
  }

  LossChain concat(const LossChain& other) const {
    LossChain out = *this;
    for (const auto& s : other.stages_) out.stages_.push_back(s);
    return out;
  }

  const std::vector<LossStage>& stages() const { return stages_; }

 private:
  std::vector<LossStage> stages_;
};

struct GeometryParams {
  double blockade_radius_um{};
  double excitation_radius_um{};

  void validate() const {
    require(blockade_radius_um > 0, "blockade_radius must be > 0");
    require(excitation_radius_um > 0, "excitation_radius must be > 0");
  }
};

/// Excited-state population a*sin^2(omega t/2)*exp(-gamma t).
template <typename Scalar>
Scalar rabi_population(Scalar t, const RabiParams<Scalar>& params) {
  require(t >= Scalar(0), "rabi_population: t must be >= 0");
  params.validate();
  using std::exp;
  using std::sin;
  const Scalar s = sin(params.omega * t / Scalar(2));
  return params.amplitude * s * s * exp(-params.gamma * t);
}

template <typename Scalar>
Scalar pi_pulse_duration(Scalar omega) {
  require(omega > Scalar(0), "pi_pulse_duration: omega must be > 0");
  return std::numbers::pi_v<Scalar> / omega;
}

/// Cooperativity enhancement 2F/pi of a ring cavity with finesse F.
template <typename Scalar>
Scalar cavity_enhancement(Scalar finesse) {
  require(finesse > Scalar(0), "cavity_enhancement: finesse must be > 0");
  return Scalar(2) * finesse / std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
Scalar cooperativity(Scalar od, const EfficiencyModel<Scalar>& model) {
  return model.k * od * model.enhancement;
}

template <typename Scalar>
Scalar saturating_efficiency(Scalar od, const EfficiencyModel<Scalar>& model) {
  require(od >= Scalar(0), "saturating_efficiency: od must be >= 0");
  model.validate();
  const Scalar c = cooperativity(od, model);
  return model.p * c / (c + Scalar(1));
}

/// Slope k for which p*C/(C+1) equals `efficiency` at `od`.
template <typename Scalar>
Scalar slope_for_efficiency(Scalar efficiency, Scalar od, Scalar p = Scalar(1),
                            Scalar enhancement = Scalar(1)) {
  require(od > Scalar(0), "slope_for_efficiency: od must be > 0");
  require(efficiency > Scalar(0) && efficiency < p,
          "slope_for_efficiency: efficiency must lie in (0, p)");
  const Scalar ratio = efficiency / p;
  return ratio / (Scalar(1) - ratio) / (od * enhancement);
}

inline double chain_efficiency(const LossChain& chain) {
  double product = 1.0;
  for (const auto& s : chain.stages()) product *= s.efficiency;
  return product;
}

inline bool blockade_regime_ok(const GeometryParams& geom) {
  geom.validate();
  return geom.blockade_radius_um > geom.excitation_radius_um;
}

}  // namespace superatom

#endif
