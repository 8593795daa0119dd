#include "superatom/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "superatom/errors.hpp"

namespace superatom::cli {

namespace fs = std::filesystem;

namespace {

std::string percent(double p, int digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f%%", digits, 100.0 * p);
  return buf;
}

Json report_header(const RunConfig& cfg, const char* command) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = to_json(cfg);
  j["config_hash"] = config_hash(cfg);
  return j;
}

struct Check {
  std::string name;
  double value;
  double lower;
  double upper;
};

Json check_table(const std::vector<Check>& checks, std::ostream& log) {
  Json table = Json::array();
  for (const auto& c : checks) {
    const bool pass = c.value >= c.lower && c.value <= c.upper;
    table.push_back({{"check", c.name},
                     {"value", c.value},
                     {"lower", c.lower},
                     {"upper", c.upper},
                     {"pass", pass}});
    log << "  [" << (pass ? "PASS" : "FAIL") << "] " << c.name << " = " << c.value << " (band "
        << c.lower << " .. " << c.upper << ")\n";
  }
  return table;
}

double prob_at_least(const ExpectedStatistics& stats, int threshold) {
  double below = 0.0;
  for (int k = 0; k < threshold && k < stats.distribution.size(); ++k) below += stats.distribution(k);
  return 1.0 - below;
}

std::string state_tag(const std::string& spec) {
  std::string tag;
  for (char c : spec) tag += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return tag;
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// States are separated by ';'. A plain comma list is accepted when every item
// is a named state, since "a,b,phi" specs contain commas themselves.
std::vector<std::string> split_state_list(const std::string& text) {
  if (text.find(';') != std::string::npos) return split_on(text, ';');
  auto named = split_on(text, ',');
  for (const auto& s : named) {
    if (s != "r1" && s != "r2" && s != "D" && s != "A" && s != "R" && s != "L") return {text};
  }
  return named;
}

}  // namespace

std::uint64_t derived_seed(std::uint64_t master_seed, const std::string& tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return substream_seed(master_seed, h);
}

RabiScan rabi_scan(const RunConfig& cfg) {
  cfg.rabi.validate();
  require(cfg.scan_step_ns > 0.0, "scan_step_ns must be > 0");
  require(cfg.scan_start_ns >= 0.0, "scan_start_ns must be >= 0");
  require(cfg.scan_stop_ns > cfg.scan_start_ns, "rabi scan range has zero length");
  RabiScan scan;
  const auto n = static_cast<std::size_t>(
      std::floor((cfg.scan_stop_ns - cfg.scan_start_ns) / cfg.scan_step_ns + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = cfg.scan_start_ns + static_cast<double>(i) * cfg.scan_step_ns;
    scan.t_ns.push_back(t);
    scan.population.push_back(rabi_population(t * 1e-9, cfg.rabi));
  }
  // first local maximum of the sampled curve
  const auto& pop = scan.population;
  scan.peak_time_ns = scan.t_ns.back();
  for (std::size_t i = 0; i < n; ++i) {
    const bool rising = i == 0 || pop[i] >= pop[i - 1];
    const bool falling = i + 1 == n || pop[i] > pop[i + 1];
    if (rising && falling && pop[i] > 0.0) {
      scan.peak_time_ns = scan.t_ns[i];
      break;
    }
  }
  scan.pi_time_ns = pi_pulse_duration(cfg.rabi.omega) * 1e9;
  return scan;
}

std::string rabi_csv(const RabiScan& scan) {
  std::string out = "t_ns,population\n";
  char buf[96];
  for (std::size_t i = 0; i < scan.t_ns.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.17g\n", scan.t_ns[i], scan.population[i]);
    out += buf;
  }
  return out;
}

Json cmd_rabi(const RunConfig& cfg, std::ostream& log) {
  const RabiScan scan = rabi_scan(cfg);
  const fs::path path = fs::path(cfg.output_dir) / "rabi_scan.csv";
  write_text(path, rabi_csv(scan));

  Json rep = report_header(cfg, "rabi");
  rep["pi_pulse_ns"] = scan.pi_time_ns;
  rep["scan_peak_ns"] = scan.peak_time_ns;
  rep["n_points"] = scan.t_ns.size();
  rep["blockade_regime_ok"] = blockade_regime_ok(cfg.geometry);
  rep["cavity_enhancement"] = cavity_enhancement(cfg.finesse);
  write_text(fs::path(cfg.output_dir) / "rabi_report.json", rep.dump(2) + "\n");

  log << "pi pulse: " << scan.pi_time_ns << " ns (first scan maximum at " << scan.peak_time_ns
      << " ns)\nwrote " << path.string() << "\n";
  return rep;
}

Json cmd_burst(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  require(!cfg.burst_states.empty(), "burst_states must not be empty");
  const auto basis = make_basis(parse_basis(cfg.basis), cfg.convention());
  const fs::path out_dir(cfg.output_dir);

  Json rep = report_header(cfg, "burst");
  rep["states"] = Json::object();
  std::map<std::string, Dataset> datasets;
  for (const auto& spec : cfg.burst_states) {
    const auto state = parse_state_spec(spec);
    const auto seed = derived_seed(cfg.master_seed, "burst:" + spec);
    Dataset ds = simulate_dataset(state, basis, cfg.n_trials, cfg.burst, seed, cfg.workers);
    const std::string tag = state_tag(spec);
    write_dataset(ds, out_dir / ("dataset_" + tag + ".csv"), out_dir / ("dataset_" + tag + ".json"));
    const auto hist = photon_histogram(ds);
    write_text(out_dir / ("histogram_" + tag + ".csv"), histogram_csv(hist));
    write_text(out_dir / ("profile_" + tag + ".csv"), profile_csv(temporal_profile(ds)));

    const auto expected = expected_statistics(state, basis, cfg.burst);
    const double lambda = fit_poisson(hist);
    Json s;
    s["seed"] = seed;
    s["n_trials"] = ds.size();
    s["mean_photons"] = mean_photons(ds);
    s["prob_zero"] = static_cast<double>(hist[0]) / static_cast<double>(ds.size());
    s["prob_geq_threshold"] = fraction_with_at_least(ds, cfg.threshold);
    s["histogram"] = hist;
    s["poisson_mean"] = lambda;
    s["poisson_prob_zero"] = poisson_pmf(0, lambda);
    s["expected"] = {{"mean_photons", expected.mean_photons},
                     {"prob_zero", expected.prob_zero},
                     {"prob_geq1", expected.prob_geq1},
                     {"mean_given_prep_success", expected.mean_given_prep_success}};
    rep["states"][spec] = s;
    log << spec << ": mean " << s["mean_photons"].get<double>() << " photons, P(N=0) "
        << percent(s["prob_zero"].get<double>()) << "\n";
    datasets.emplace(spec, std::move(ds));
  }

  if (datasets.count("r1") && datasets.count("r2") && basis.label == BasisLabel::Z) {
    const auto& r1 = datasets.at("r1");
    const auto& r2 = datasets.at("r2");
    const auto raw = discrimination(r1, r2, cfg.threshold);
    const double p0_r1 = 1.0 - raw.p_r1_given_r1;
    const auto corrected = corrected_conditionals(raw, p0_r1, cfg.burst.eta_prep);
    const double mean_r1 = mean_photons(r1);
    const double mean_r2 = mean_photons(r2);
    const double corrected_mean = corrected_mean_photons(mean_r2, mean_r1, cfg.burst.eta_prep);
    const double prep = prep_efficiency_from_peaks(temporal_profile(r1), temporal_profile(r2),
                                                   cfg.peak_window());
    auto disc_json = [](const DiscriminationResult& d) {
      return Json{{"p_r2_given_r2", d.p_r2_given_r2},
                  {"p_r1_given_r1", d.p_r1_given_r1},
                  {"fidelity", d.raw_fidelity},
                  {"clamped", d.clamped}};
    };
    rep["discrimination"] = {{"threshold", cfg.threshold},
                             {"raw", disc_json(raw)},
                             {"corrected", disc_json(corrected)},
                             {"corrected_mean_photons_r2", corrected_mean},
                             {"prep_efficiency_estimate", prep}};
    log << "raw fidelity " << percent(raw.raw_fidelity) << " (r2 " << percent(raw.p_r2_given_r2)
        << ", r1 " << percent(raw.p_r1_given_r1) << "); corrected "
        << percent(corrected.raw_fidelity) << "\n"
        << "prep efficiency from first peaks " << percent(prep) << "\n";
    rep["checks"] = check_table({{"mean_photons_r1", mean_r1, 2.58, 2.68},
                                 {"mean_photons_r2", mean_r2, 0.17, 0.21},
                                 {"p_r2_given_r2", raw.p_r2_given_r2, 0.893, 0.923},
                                 {"p_r1_given_r1", raw.p_r1_given_r1, 0.903, 0.933},
                                 {"raw_fidelity", raw.raw_fidelity, 0.90, 0.925},
                                 {"prep_efficiency_estimate", prep, 0.945, 0.965}},
                                log);
  }
  write_text(out_dir / "burst_report.json", rep.dump(2) + "\n");
  return rep;
}

Json cmd_tomo(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto target = parse_state_spec(cfg.state);
  std::vector<BasisProbability> probs;
  for (auto label : {BasisLabel::Z, BasisLabel::X, BasisLabel::Y}) {
    const auto basis = make_basis(label, cfg.convention());
    double p;
    if (cfg.exact_probabilities) {
      p = prob_at_least(expected_statistics(target, basis, cfg.burst), cfg.threshold);
    } else {
      const auto ds = simulate_dataset(target, basis, cfg.n_trials, cfg.burst,
                                       derived_seed(cfg.master_seed, std::string("tomo:") + to_string(label)),
                                       cfg.workers);
      p = fraction_with_at_least(ds, cfg.threshold);
    }
    probs.push_back({basis, p});
  }
  const TomographyResult tomo = reconstruct(std::move(probs), target);

  Json rep = report_header(cfg, "tomo");
  rep.update(to_json(tomo));
  rep["mode"] = cfg.exact_probabilities ? "exact" : "monte_carlo";
  rep["target_state"] = to_json(target);
  rep["n_trials"] = cfg.n_trials;
  rep["seed"] = cfg.master_seed;
  write_text(fs::path(cfg.output_dir) / "tomo_report.json", rep.dump(2) + "\n");

  log << "state " << cfg.state << ": Stokes (" << tomo.stokes(0) << ", " << tomo.stokes(1) << ", "
      << tomo.stokes(2) << "), fidelity " << percent(tomo.fidelity) << "\n";
  return rep;
}

Json cmd_fit(const RunConfig& cfg, const FitRequest& req, std::ostream& log) {
  const auto points = read_points_csv(req.points_path);
  OdFitOptions opts;
  opts.mode = req.mode;
  opts.finesse = cfg.finesse;
  opts.fixed_p = req.fixed_p;
  opts.chain = req.chain;
  opts.solver.record_trace = req.verbose;
  const OdCurveFit fit = fit_od_curve(points, opts);

  Json rep = report_header(cfg, "fit");
  rep["mode"] = to_string(fit.mode);
  rep["chain"] = fit.chain;
  rep["fit"] = to_json(fit.result, req.verbose);
  rep["model"] = {{"k", fit.model.k}, {"p", fit.model.p}, {"enhancement", fit.model.enhancement}};
  log << to_string(fit.mode) << " fit: k = " << fit.model.k << ", p = " << fit.model.p
      << ", residual norm " << fit.result.residual_norm << (fit.result.converged ? "" : " (NOT converged)")
      << "\n";

  if (req.predict_finesse) {
    const auto pred = predict_cavity_from_freespace(fit, *req.predict_finesse);
    Json p;
    p["finesse"] = *req.predict_finesse;
    p["enhancement"] = pred.model.enhancement;
    const auto gap = prediction_gap(pred, req.measured);
    Json rows = Json::array();
    for (std::size_t i = 0; i < gap.od.size(); ++i) {
      rows.push_back({{"od", gap.od[i]},
                      {"measured", gap.measured[i]},
                      {"predicted", gap.predicted[i]},
                      {"gap", gap.gap[i]}});
      log << "cavity prediction at OD " << gap.od[i] << ": " << percent(gap.predicted[i])
          << ", measured " << percent(gap.measured[i]) << ", " << percent(gap.gap[i])
          << " below prediction\n";
    }
    p["points"] = rows;
    p["mean_gap"] = gap.mean_gap;
    rep["cavity_prediction"] = p;
  }
  write_text(fs::path(cfg.output_dir) / "fit.json", rep.dump(2) + "\n");
  if (!fit.result.converged)
    throw ConvergenceError("efficiency fit did not converge (" + fit.result.termination + ")");
  return rep;
}

std::map<std::string, double> parse_targets(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos, "target '" + item + "' must look like name=value");
    const std::string name = item.substr(0, eq);
    try {
      out[name] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("target '" + item + "' has a non-numeric value");
    }
  }
  require(!out.empty(), "no calibration targets given");
  return out;
}

Json cmd_calibrate(const RunConfig& cfg, const CalibrateRequest& req, std::ostream& log) {
  cfg.validate();
  const CalibrationResult cal = calibrate_burst(req.targets, req.free, cfg.burst);

  RunConfig calibrated = cfg;
  calibrated.burst = cal.params;
  const fs::path out_dir(cfg.output_dir);
  save_config(calibrated, out_dir / "calibrated_config.json");

  Json rep = report_header(cfg, "calibrate");
  rep["free"] = req.free;
  rep["fit"] = to_json(cal.fit, false);
  Json table = Json::array();
  log << "target            goal        achieved    residual\n";
  for (const auto& [name, goal] : req.targets) {
    table.push_back({{"target", name},
                     {"goal", goal},
                     {"achieved", cal.achieved.at(name)},
                     {"residual", cal.residuals.at(name)}});
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-16s %10.6f  %10.6f  %+.3e\n", name.c_str(), goal,
                  cal.achieved.at(name), cal.residuals.at(name));
    log << buf;
  }
  rep["residual_table"] = table;
  rep["calibrated_params"] = to_json(cal.params);
  rep["calibrated_config_hash"] = config_hash(calibrated);
  write_text(out_dir / "calibration.json", rep.dump(2) + "\n");
  for (const auto& name : req.free) log << name << " = " << cal.fit.param(name) << "\n";
  return rep;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rydberg superatom photon-burst readout simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> out_dir;
  std::optional<std::string> state;
  std::optional<std::string> basis;
  std::optional<unsigned> workers;
  bool verbose = false;
  app.add_option("--config", config_path, "Run configuration JSON");
  app.add_option("--seed", seed, "Master seed (u64)");
  app.add_option("--trials", trials, "Trials per simulated dataset");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--state", state, "Prepared state: r1, r2, D, A, R, L or a,b[,phi]");
  app.add_option("--basis", basis, "Readout basis for burst runs")->check(CLI::IsMember({"Z", "X", "Y"}));
  app.add_option("--workers", workers, "Simulation threads (0 = all cores)");
  app.add_flag("--verbose", verbose, "Include optimizer traces in reports");

  auto* rabi = app.add_subcommand("rabi", "Collective Rabi scan");
  auto* burst = app.add_subcommand("burst", "Single-shot readout of prepared states");
  std::string burst_states;
  burst->add_option("--states", burst_states, "States separated by ';' (or ',' for named states)");
  auto* tomo = app.add_subcommand("tomo", "Z/X/Y tomography of a prepared state");
  bool exact = false;
  tomo->add_flag("--exact", exact, "Use exact readout probabilities instead of sampling");

  auto* fit = app.add_subcommand("fit", "Fit efficiency versus OD");
  FitRequest fit_req;
  std::string mode = "freespace";
  std::vector<std::string> measured;
  fit->add_option("--points", fit_req.points_path, "CSV of x,y[,sigma]")->required();
  fit->add_option("--mode", mode, "freespace or cavity")->check(CLI::IsMember({"freespace", "cavity"}));
  fit->add_option("--fix-p", fit_req.fixed_p, "Hold the ceiling p fixed");
  fit->add_option("--chain", fit_req.chain, "Collection chain multiplying the model");
  fit->add_option("--predict-finesse", fit_req.predict_finesse,
                  "Predict the cavity curve from this free-space fit");
  fit->add_option("--measured", measured, "Measured OD:efficiency pairs compared to the prediction");

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate burst parameters to observables");
  std::string targets;
  std::string free = "p_click,s_surv";
  calibrate->add_option("--targets", targets, "name=value list (mean_r1, mean_r2, p0_r2, p_geq1_r1)")
      ->required();
  calibrate->add_option("--free", free, "Comma-separated free parameters (may be empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (trials) {
      require(*trials >= 1, "--trials must be >= 1");
      cfg.n_trials = *trials;
    }
    if (out_dir) cfg.output_dir = *out_dir;
    if (state) cfg.state = *state;
    if (basis) cfg.basis = *basis;
    if (workers) cfg.workers = *workers;
    if (!burst_states.empty()) cfg.burst_states = split_state_list(burst_states);
    if (exact) cfg.exact_probabilities = true;
    cfg.validate();

    if (*rabi) {
      cmd_rabi(cfg, out);
    } else if (*burst) {
      cmd_burst(cfg, out);
    } else if (*tomo) {
      cmd_tomo(cfg, out);
    } else if (*fit) {
      fit_req.mode = parse_fit_mode(mode);
      fit_req.verbose = verbose;
      for (const auto& m : measured) {
        const auto colon = m.find(':');
        require(colon != std::string::npos, "--measured expects OD:efficiency, got '" + m + "'");
        try {
          fit_req.measured.push_back({std::stod(m.substr(0, colon)), std::stod(m.substr(colon + 1)), {}});
        } catch (const std::exception&) {
          throw ValidationError("--measured expects OD:efficiency, got '" + m + "'");
        }
      }
      cmd_fit(cfg, fit_req, out);
    } else if (*calibrate) {
      CalibrateRequest req;
      req.targets = parse_targets(targets);
      req.free = split_on(free, ',');
      cmd_calibrate(cfg, req, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}

}  // namespace superatom::cli
