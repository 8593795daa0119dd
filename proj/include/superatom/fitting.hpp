#ifndef SUPERATOM_FITTING_HPP
#define SUPERATOM_FITTING_HPP

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superatom/burst.hpp"
#include "superatom/model.hpp"

namespace superatom {

struct DataPoint {
  double x = 0.0;  // optical depth
  double y = 0.0;  // efficiency
  std::optional<double> sigma;

  void validate() const;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) settings.
struct LeastSquaresOptions {
  double gradient_tol = 1e-10;
  double step_tol = 1e-12;
  int max_iterations = 500;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  bool record_trace = false;
};

struct IterateRecord {
  int iteration = 0;
  Eigen::VectorXd params;
  double residual_norm = 0.0;
  double damping = 0.0;
  bool accepted = false;
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  double residual_norm = 0.0;
  double gradient_norm = 0.0;
  double jacobian_condition = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string termination;
  std::vector<IterateRecord> trace;

  double param(const std::string& name) const;
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Minimizes 0.5*|r(x)|^2 from `init`. The Jacobian is taken by central
/// differences with step max(1e-6, 1e-6*|x_i|). Terminates on gradient norm,
/// step norm or the iteration cap; a stalled step counts as converged only if
/// the gradient norm is below sqrt(gradient_tol).
FitResult minimize_residuals(const ResidualFunction& residuals, const Eigen::VectorXd& init,
                             const LeastSquaresOptions& opts = {},
                             std::vector<std::string> names = {});

using CurveModel = std::function<double(double x, const Eigen::VectorXd& params)>;

/// Curve fit of model(x, params) to the points, weighted by 1/sigma when
/// sigmas are present.
FitResult least_squares(const CurveModel& model, std::span<const DataPoint> points,
                        const Eigen::VectorXd& init, const LeastSquaresOptions& opts = {},
                        std::vector<std::string> names = {});

// ---------------------------------------------------------------------------
// Efficiency versus optical depth.

enum class FitMode { FreeSpace, Cavity };

FitMode parse_fit_mode(const std::string& s);
const char* to_string(FitMode mode);

struct OdFitOptions {
  FitMode mode = FitMode::FreeSpace;
  double finesse = 19.5;
  // Fix the ceiling p instead of fitting it.
  std::optional<double> fixed_p;
  // Collection chain multiplying the intrinsic model; 1 fits the data as
  // intrinsic efficiencies.
  double chain = 1.0;
  std::optional<double> init_k;
  std::optional<double> init_p;
  LeastSquaresOptions solver;
};

struct OdCurveFit {
  FitResult result;  // params in natural units: k[, p]
  EfficiencyModel<double> model;
  double chain = 1.0;
  FitMode mode = FitMode::FreeSpace;

  double predict(double od) const { return chain * saturating_efficiency(od, model); }
};

/// Fits chain * p * C / (C + 1), C = k * OD * enhancement, with enhancement
/// 2F/pi in cavity mode. k and p are fitted through softplus / logistic
/// transforms.
OdCurveFit fit_od_curve(std::span<const DataPoint> points, const OdFitOptions& opts = {});

/// Same k and p, different cooperativity enhancement.
OdCurveFit predict_with_enhancement(const OdCurveFit& freespace_fit, double enhancement);

/// Shared-k cavity prediction with enhancement 2F/pi.
OdCurveFit predict_cavity_from_freespace(const OdCurveFit& freespace_fit, double finesse);

struct GapReport {
  std::vector<double> od;
  std::vector<double> measured;
  std::vector<double> predicted;
  std::vector<double> gap;  // 1 - measured / predicted
  double mean_gap = 0.0;
};

GapReport prediction_gap(const OdCurveFit& prediction, std::span<const DataPoint> measured);

// ---------------------------------------------------------------------------
// Burst calibration against headline readout observables.

/// Headline readout observables: |r1> and |r2> prepared and read out in Z.
/// Keys: mean_r1, mean_r2, p0_r2, p_geq1_r1, p0_r1, raw_fidelity,
/// mean_r2_prep_success.
std::map<std::string, double> burst_observables(const BurstParams& params);

bool is_calibration_target(const std::string& name);
bool is_calibration_parameter(const std::string& name);

struct CalibrationResult {
  BurstParams params;
  FitResult fit;  // params in natural units
  std::map<std::string, double> achieved;
  std::map<std::string, double> residuals;  // achieved - target
};

/// Least squares of the analytic observables against `targets`, varying the
/// named `free` parameters of `fixed`. Throws ConvergenceError, with the
/// per-target residuals, when the optimizer does not converge.
CalibrationResult calibrate_burst(const std::map<std::string, double>& targets,
                                  const std::vector<std::string>& free, const BurstParams& fixed,
                                  const LeastSquaresOptions& opts = {});

}  // namespace superatom

#endif
