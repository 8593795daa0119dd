#include "superatom/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "superatom/errors.hpp"
#include "superatom/qubit.hpp"

namespace superatom {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bool all_finite(const VectorXd& v) { return v.allFinite(); }

VectorXd evaluate(const ResidualFunction& f, const VectorXd& x) {
  VectorXd r = f(x);
  if (!all_finite(r)) {
    std::ostringstream msg;
    msg << "least squares: non-finite residual at params [" << x.transpose() << "]";
    throw ConvergenceError(msg.str());
  }
  return r;
}

MatrixXd central_jacobian(const ResidualFunction& f, const VectorXd& x, Eigen::Index m) {
  MatrixXd jac(m, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 6e-6 * std::max(1.0, std::abs(x(i)));
    VectorXd hi = x;
    VectorXd lo = x;
    hi(i) += h;
    lo(i) -= h;
    jac.col(i) = (evaluate(f, hi) - evaluate(f, lo)) / (2.0 * h);
  }
  return jac;
}

double condition_number(const MatrixXd& jac) {
  if (jac.cols() == 0) return 1.0;
  Eigen::JacobiSVD<MatrixXd> svd(jac);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (sv.size() < jac.cols() || smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

double softplus(double u) { return u > 30.0 ? u : std::log1p(std::exp(u)); }
double softplus_inverse(double k) { return k > 30.0 ? k : std::log(std::expm1(k)); }
double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void DataPoint::validate() const {
  require(std::isfinite(x) && x >= 0.0, "data point x (OD) must be >= 0");
  require(std::isfinite(y) && is_probability(y), "data point y must be in [0,1]");
  if (sigma) require(*sigma > 0.0 && std::isfinite(*sigma), "data point sigma must be > 0");
}

double FitResult::param(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return params(static_cast<Eigen::Index>(i));
  throw ValidationError("fit has no parameter '" + name + "'");
}

FitResult minimize_residuals(const ResidualFunction& residuals, const VectorXd& init,
                             const LeastSquaresOptions& opts, std::vector<std::string> names) {
  require(init.allFinite(), "least squares: initial guess must be finite");
  FitResult out;
  out.names = std::move(names);

  VectorXd x = init;
  VectorXd r = evaluate(residuals, x);
  require(r.size() >= x.size(), "least squares: fewer residuals than parameters");

  MatrixXd jac = central_jacobian(residuals, x, r.size());
  VectorXd grad = jac.transpose() * r;
  double lambda = opts.initial_damping;
  auto record = [&](int it, const VectorXd& p, double norm, bool accepted) {
    if (opts.record_trace) out.trace.push_back({it, p, norm, lambda, accepted});
  };
  record(0, x, r.norm(), true);

  out.termination = "max_iterations";
  int it = 0;
  if (x.size() == 0 || grad.norm() < opts.gradient_tol) {
    out.termination = "gradient";
  } else {
    constexpr int kPolishSteps = 8;
    int polish = -1;
    while (it < opts.max_iterations) {
      ++it;
      const MatrixXd normal = jac.transpose() * jac;
      VectorXd scale = normal.diagonal();
      const double floor = std::max(1e-300, 1e-12 * scale.maxCoeff());
      scale = scale.cwiseMax(floor);
      MatrixXd damped = normal;
      damped.diagonal() += lambda * scale;
      const VectorXd step = damped.ldlt().solve(-grad);

      const double tol = polish < 0 ? opts.step_tol : 1e-15;
      if (step.norm() < tol * (x.norm() + tol)) {
        if (polish < 0) out.termination = "step";
        break;
      }
      const VectorXd trial = x + step;
      const VectorXd r_trial = evaluate(residuals, trial);
      // while polishing the cost is flat to rounding, so only a real rise rejects
      const double slack = polish < 0 ? 1.0 : 1.0 + 1e-12;
      if (r_trial.squaredNorm() < r.squaredNorm() * slack) {
        x = trial;
        r = r_trial;
        lambda = std::max(lambda / opts.damping_factor, 1e-15);
        record(it, x, r.norm(), true);
        jac = central_jacobian(residuals, x, r.size());
        grad = jac.transpose() * r;
        // Below the gradient tolerance, keep taking the (now nearly
        // undamped) steps while they still lower the cost, so the estimate
        // does not depend on how the residuals happen to be scaled.
        if (polish >= 0 && ++polish >= kPolishSteps) break;
        if (polish < 0 && grad.norm() < opts.gradient_tol) {
          out.termination = "gradient";
          polish = 0;
        }
      } else {
        if (polish >= 0) break;
        lambda *= opts.damping_factor;
        record(it, trial, r_trial.norm(), false);
        if (lambda > 1e16) {
          out.termination = "damping";
          break;
        }
      }
    }
  }

  out.params = x;
  out.residuals = r;
  out.residual_norm = r.norm();
  out.gradient_norm = grad.norm();
  out.jacobian_condition = condition_number(jac);
  out.iterations = it;
  out.converged = out.gradient_norm < opts.gradient_tol ||
                  (out.termination != "max_iterations" &&
                   out.gradient_norm < std::sqrt(opts.gradient_tol));
  return out;
}

FitResult least_squares(const CurveModel& model, std::span<const DataPoint> points,
                        const VectorXd& init, const LeastSquaresOptions& opts,
                        std::vector<std::string> names) {
  require(points.size() >= static_cast<std::size_t>(init.size()),
          "least squares: underdetermined (fewer points than parameters)");
  for (const auto& p : points) p.validate();
  auto residuals = [&](const VectorXd& params) {
    VectorXd r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& pt = points[i];
      r(static_cast<Eigen::Index>(i)) = (model(pt.x, params) - pt.y) / pt.sigma.value_or(1.0);
    }
    return r;
  };
  return minimize_residuals(residuals, init, opts, std::move(names));
}

FitMode parse_fit_mode(const std::string& s) {
  if (s == "freespace") return FitMode::FreeSpace;
  if (s == "cavity") return FitMode::Cavity;
  throw ValidationError("unknown fit mode '" + s + "' (expected freespace or cavity)");
}

const char* to_string(FitMode mode) { return mode == FitMode::FreeSpace ? "freespace" : "cavity"; }

OdCurveFit fit_od_curve(std::span<const DataPoint> points, const OdFitOptions& opts) {
  require(!points.empty(), "fit_od_curve: no data points");
  require(opts.chain > 0.0 && opts.chain <= 1.0, "fit_od_curve: chain must be in (0,1]");
  if (opts.fixed_p) require(*opts.fixed_p > 0.0 && *opts.fixed_p <= 1.0, "fixed p must be in (0,1]");
  for (const auto& p : points) p.validate();

  const double enhancement =
      opts.mode == FitMode::Cavity ? cavity_enhancement(opts.finesse) : 1.0;
  const bool fit_p = !opts.fixed_p.has_value();

  double max_y = 0.0;
  double od_at_max = 0.0;
  for (const auto& p : points) {
    if (p.y > max_y) {
      max_y = p.y;
      od_at_max = p.x;
    }
  }
  const double p0 =
      opts.fixed_p.value_or(opts.init_p.value_or(std::clamp(1.5 * max_y / opts.chain, 0.05, 0.95)));
  double k0 = 0.2;
  if (opts.init_k) {
    k0 = *opts.init_k;
  } else if (od_at_max > 0.0 && max_y > 0.0 && max_y / opts.chain < p0) {
    k0 = slope_for_efficiency(max_y / opts.chain, od_at_max, p0, enhancement);
  }
  require(k0 > 0.0 && p0 > 0.0 && p0 < 1.0 + 1e-15, "fit_od_curve: invalid initial guess");

  auto unpack = [&](const VectorXd& v) {
    EfficiencyModel<double> m;
    m.k = softplus(v(0));
    m.p = fit_p ? logistic(v(1)) : *opts.fixed_p;
    m.enhancement = enhancement;
    return m;
  };
  auto model = [&](double od, const VectorXd& v) {
    const auto m = unpack(v);
    const double c = m.k * od * m.enhancement;
    return opts.chain * m.p * c / (c + 1.0);
  };

  VectorXd init(fit_p ? 2 : 1);
  init(0) = softplus_inverse(k0);
  if (fit_p) init(1) = logit(std::min(p0, 1.0 - 1e-9));

  OdCurveFit out;
  out.result = least_squares(model, points, init, opts.solver,
                             fit_p ? std::vector<std::string>{"k", "p"}
                                   : std::vector<std::string>{"k"});
  out.model = unpack(out.result.params);
  out.chain = opts.chain;
  out.mode = opts.mode;
  out.result.params(0) = out.model.k;
  if (fit_p) out.result.params(1) = out.model.p;
  for (auto& rec : out.result.trace) {
    const auto m = unpack(rec.params);
    rec.params(0) = m.k;
    if (fit_p) rec.params(1) = m.p;
  }
  return out;
}

OdCurveFit predict_with_enhancement(const OdCurveFit& freespace_fit, double enhancement) {
  require(enhancement >= 1.0, "enhancement must be >= 1");
  OdCurveFit out = freespace_fit;
  out.model.enhancement = freespace_fit.model.enhancement * enhancement;
  out.mode = enhancement > 1.0 ? FitMode::Cavity : freespace_fit.mode;
  return out;
}

OdCurveFit predict_cavity_from_freespace(const OdCurveFit& freespace_fit, double finesse) {
  require(freespace_fit.mode == FitMode::FreeSpace, "prediction needs a free-space fit");
  require(freespace_fit.result.converged, "prediction needs a converged free-space fit");
  return predict_with_enhancement(freespace_fit, cavity_enhancement(finesse));
}

GapReport prediction_gap(const OdCurveFit& prediction, std::span<const DataPoint> measured) {
  GapReport rep;
  double sum = 0.0;
  for (const auto& pt : measured) {
    pt.validate();
    const double pred = prediction.predict(pt.x);
    require(pred > 0.0, "prediction_gap: predicted efficiency is zero");
    rep.od.push_back(pt.x);
    rep.measured.push_back(pt.y);
    rep.predicted.push_back(pred);
    rep.gap.push_back(1.0 - pt.y / pred);
    sum += rep.gap.back();
  }
  if (!rep.gap.empty()) rep.mean_gap = sum / static_cast<double>(rep.gap.size());
  return rep;
}

std::map<std::string, double> burst_observables(const BurstParams& params) {
  const auto z = make_basis<double>(BasisLabel::Z);
  const auto r1 = expected_statistics(QubitState<double>::r1(), z, params);
  const auto r2 = expected_statistics(QubitState<double>::r2(), z, params);
  return {
      {"mean_r1", r1.mean_photons},
      {"mean_r2", r2.mean_photons},
      {"p0_r1", r1.prob_zero},
      {"p0_r2", r2.prob_zero},
      {"p_geq1_r1", r1.prob_geq1},
      {"raw_fidelity", 0.5 * (r2.prob_zero + r1.prob_geq1)},
      {"mean_r2_prep_success", r2.mean_given_prep_success},
  };
}

namespace {

const std::vector<std::string> kTargets = {"mean_r1", "mean_r2", "p0_r2", "p_geq1_r1"};
const std::vector<std::string> kParameters = {"p_click", "s_surv", "p_dark", "eta_prep",
                                              "p_burst_fail"};

double& field(BurstParams& p, const std::string& name) {
  if (name == "p_click") return p.p_click;
  if (name == "s_surv") return p.s_surv;
  if (name == "p_dark") return p.p_dark;
  if (name == "eta_prep") return p.eta_prep;
  if (name == "p_burst_fail") return p.p_burst_fail;
  throw ValidationError("'" + name + "' is not a calibratable parameter");
}

double interior_start(const std::string& name, double v) {
  if (v > 1e-6 && v < 1.0 - 1e-6) return v;
  if (v >= 1.0 - 1e-6) return name == "s_surv" ? 0.99 : 1.0 - 1e-3;
  return 1e-3;
}

}  // namespace

bool is_calibration_target(const std::string& name) {
  return std::find(kTargets.begin(), kTargets.end(), name) != kTargets.end();
}

bool is_calibration_parameter(const std::string& name) {
  return std::find(kParameters.begin(), kParameters.end(), name) != kParameters.end();
}

CalibrationResult calibrate_burst(const std::map<std::string, double>& targets,
                                  const std::vector<std::string>& free, const BurstParams& fixed,
                                  const LeastSquaresOptions& opts) {
  require(!targets.empty(), "calibrate_burst: no targets");
  for (const auto& [name, value] : targets) {
    require(is_calibration_target(name), "unsupported calibration target '" + name + "'");
    require(std::isfinite(value), "calibration target '" + name + "' must be finite");
  }
  for (const auto& name : free)
    require(is_calibration_parameter(name), "'" + name + "' is not a calibratable parameter");
  require(free.size() <= targets.size(),
          "calibrate_burst: more free parameters than targets (underdetermined)");
  fixed.validate();

  auto params_at = [&](const VectorXd& v) {
    BurstParams p = fixed;
    for (std::size_t i = 0; i < free.size(); ++i)
      field(p, free[i]) = logistic(v(static_cast<Eigen::Index>(i)));
    return p;
  };
  auto residuals = [&](const VectorXd& v) {
    const auto obs = burst_observables(params_at(v));
    VectorXd r(static_cast<Eigen::Index>(targets.size()));
    Eigen::Index i = 0;
    for (const auto& [name, value] : targets) r(i++) = obs.at(name) - value;
    return r;
  };

  VectorXd init(static_cast<Eigen::Index>(free.size()));
  BurstParams start = fixed;
  for (std::size_t i = 0; i < free.size(); ++i)
    init(static_cast<Eigen::Index>(i)) = logit(interior_start(free[i], field(start, free[i])));

  CalibrationResult out;
  out.fit = minimize_residuals(residuals, init, opts, free);
  out.params = params_at(out.fit.params);
  for (std::size_t i = 0; i < free.size(); ++i)
    out.fit.params(static_cast<Eigen::Index>(i)) = field(out.params, free[i]);

  const auto obs = burst_observables(out.params);
  for (const auto& [name, value] : targets) {
    out.achieved[name] = obs.at(name);
    out.residuals[name] = obs.at(name) - value;
  }
  if (!out.fit.converged) {
    std::ostringstream msg;
    msg << "calibration did not converge (" << out.fit.termination << ", gradient norm "
        << out.fit.gradient_norm << "):";
    for (const auto& [name, res] : out.residuals)
      msg << "\n  " << name << ": target " << targets.at(name) << ", achieved "
          << out.achieved.at(name) << ", residual " << res;
    throw ConvergenceError(msg.str());
  }
  return out;
}

}  // namespace superatom
