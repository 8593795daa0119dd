#include "superatom/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "superatom/errors.hpp"

namespace superatom {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

long long to_integer(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Field accessors shared by the config reader and writer.
struct BurstField {
  std::function<Json(const BurstParams&)> get;
  std::function<void(BurstParams&, const Json&)> set;
};

const std::map<std::string, BurstField>& burst_fields() {
  static const std::map<std::string, BurstField> fields = [] {
    std::map<std::string, BurstField> f;
    auto num = [&](const char* name, double BurstParams::*m) {
      f[name] = {[m](const BurstParams& p) { return Json(p.*m); },
                 [m](BurstParams& p, const Json& j) { p.*m = j.get<double>(); }};
    };
    f["n_repeats"] = {[](const BurstParams& p) { return Json(p.n_repeats); },
                      [](BurstParams& p, const Json& j) { p.n_repeats = j.get<int>(); }};
    num("burst_window_ns", &BurstParams::burst_window_ns);
    num("p_click", &BurstParams::p_click);
    num("s_surv", &BurstParams::s_surv);
    num("p_dark", &BurstParams::p_dark);
    f["dark_mode"] = {
        [](const BurstParams& p) { return Json(to_string(p.dark_mode)); },
        [](BurstParams& p, const Json& j) { p.dark_mode = parse_dark_mode(j.get<std::string>()); }};
    num("eta_prep", &BurstParams::eta_prep);
    num("mw_transfer_fidelity", &BurstParams::mw_transfer_fidelity);
    num("p_burst_fail", &BurstParams::p_burst_fail);
    num("emission_tau_ns", &BurstParams::emission_tau_ns);
    num("bin_size_ns", &BurstParams::bin_size_ns);
    num("phase_jitter_rad", &BurstParams::phase_jitter_rad);
    return f;
  }();
  return fields;
}

struct ConfigField {
  std::function<Json(const RunConfig&)> get;
  std::function<void(RunConfig&, const Json&)> set;
};

const std::map<std::string, ConfigField>& config_fields() {
  static const std::map<std::string, ConfigField> fields = [] {
    std::map<std::string, ConfigField> f;
    auto num = [&](const char* name, double RunConfig::*m) {
      f[name] = {[m](const RunConfig& c) { return Json(c.*m); },
                 [m](RunConfig& c, const Json& j) { c.*m = j.get<double>(); }};
    };
    auto str = [&](const char* name, std::string RunConfig::*m) {
      f[name] = {[m](const RunConfig& c) { return Json(c.*m); },
                 [m](RunConfig& c, const Json& j) { c.*m = j.get<std::string>(); }};
    };
    auto opt = [&](const char* name, std::optional<double> RunConfig::*m) {
      f[name] = {[m](const RunConfig& c) { return (c.*m) ? Json(*(c.*m)) : Json(nullptr); },
                 [m](RunConfig& c, const Json& j) {
                   if (j.is_null()) {
                     c.*m = std::nullopt;
                   } else {
                     c.*m = j.get<double>();
                   }
                 }};
    };
    for (const auto& [name, bf] : burst_fields()) {
      f[name] = {[get = bf.get](const RunConfig& c) { return get(c.burst); },
                 [set = bf.set](RunConfig& c, const Json& j) { set(c.burst, j); }};
    }
    f["rabi_omega_rad_per_s"] = {[](const RunConfig& c) { return Json(c.rabi.omega); },
                                 [](RunConfig& c, const Json& j) { c.rabi.omega = j.get<double>(); }};
    f["rabi_gamma_per_s"] = {[](const RunConfig& c) { return Json(c.rabi.gamma); },
                             [](RunConfig& c, const Json& j) { c.rabi.gamma = j.get<double>(); }};
    f["rabi_amplitude"] = {[](const RunConfig& c) { return Json(c.rabi.amplitude); },
                           [](RunConfig& c, const Json& j) { c.rabi.amplitude = j.get<double>(); }};
    num("scan_start_ns", &RunConfig::scan_start_ns);
    num("scan_stop_ns", &RunConfig::scan_stop_ns);
    num("scan_step_ns", &RunConfig::scan_step_ns);
    num("od", &RunConfig::od);
    num("efficiency_k", &RunConfig::efficiency_k);
    num("efficiency_p", &RunConfig::efficiency_p);
    num("finesse", &RunConfig::finesse);
    num("eta_cavity_output", &RunConfig::eta_cavity_output);
    num("eta_fiber", &RunConfig::eta_fiber);
    num("eta_pockels", &RunConfig::eta_pockels);
    num("eta_spd", &RunConfig::eta_spd);
    num("eta_freespace_collection", &RunConfig::eta_freespace_collection);
    f["blockade_radius_um"] = {
        [](const RunConfig& c) { return Json(c.geometry.blockade_radius_um); },
        [](RunConfig& c, const Json& j) { c.geometry.blockade_radius_um = j.get<double>(); }};
    f["excitation_radius_um"] = {
        [](const RunConfig& c) { return Json(c.geometry.excitation_radius_um); },
        [](RunConfig& c, const Json& j) { c.geometry.excitation_radius_um = j.get<double>(); }};
    f["n_trials"] = {[](const RunConfig& c) { return Json(c.n_trials); },
                     [](RunConfig& c, const Json& j) { c.n_trials = j.get<std::uint64_t>(); }};
    f["master_seed"] = {[](const RunConfig& c) { return Json(c.master_seed); },
                        [](RunConfig& c, const Json& j) { c.master_seed = j.get<std::uint64_t>(); }};
    f["threshold"] = {[](const RunConfig& c) { return Json(c.threshold); },
                      [](RunConfig& c, const Json& j) { c.threshold = j.get<int>(); }};
    num("x_basis_phase_rad", &RunConfig::x_basis_phase_rad);
    opt("peak_window_start_ns", &RunConfig::peak_window_start_ns);
    opt("peak_window_stop_ns", &RunConfig::peak_window_stop_ns);
    str("output_dir", &RunConfig::output_dir);
    str("state", &RunConfig::state);
    str("basis", &RunConfig::basis);
    f["burst_states"] = {
        [](const RunConfig& c) { return Json(c.burst_states); },
        [](RunConfig& c, const Json& j) { c.burst_states = j.get<std::vector<std::string>>(); }};
    f["exact_probabilities"] = {
        [](const RunConfig& c) { return Json(c.exact_probabilities); },
        [](RunConfig& c, const Json& j) { c.exact_probabilities = j.get<bool>(); }};
    return f;
  }();
  return fields;
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> bad;
  try {
    burst.validate();
  } catch (const ValidationError& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) bad.push_back(trim(line).substr(2));
  }
  auto prob = [&](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) bad.push_back(std::string(name) + " must be in [0,1]");
  };
  if (!(rabi.omega > 0.0)) bad.push_back("rabi_omega_rad_per_s must be > 0");
  if (!(rabi.gamma >= 0.0)) bad.push_back("rabi_gamma_per_s must be >= 0");
  prob("rabi_amplitude", rabi.amplitude);
  if (!(od >= 0.0)) bad.push_back("od must be >= 0");
  if (!(efficiency_k > 0.0)) bad.push_back("efficiency_k must be > 0");
  prob("efficiency_p", efficiency_p);
  if (!(finesse > 0.0)) bad.push_back("finesse must be > 0");
  prob("eta_cavity_output", eta_cavity_output);
  prob("eta_fiber", eta_fiber);
  prob("eta_pockels", eta_pockels);
  prob("eta_spd", eta_spd);
  prob("eta_freespace_collection", eta_freespace_collection);
  if (!(geometry.blockade_radius_um > 0.0)) bad.push_back("blockade_radius_um must be > 0");
  if (!(geometry.excitation_radius_um > 0.0)) bad.push_back("excitation_radius_um must be > 0");
  if (n_trials < 1) bad.push_back("n_trials must be >= 1");
  if (threshold < 1) bad.push_back("threshold must be >= 1");
  if (!std::isfinite(x_basis_phase_rad)) bad.push_back("x_basis_phase_rad must be finite");
  if (peak_window_start_ns && peak_window_stop_ns && !(*peak_window_stop_ns > *peak_window_start_ns))
    bad.push_back("peak_window_stop_ns must exceed peak_window_start_ns");
  try {
    parse_basis(basis);
  } catch (const ValidationError& e) {
    bad.push_back(std::string("basis: ") + e.what());
  }
  try {
    parse_state_spec(state);
  } catch (const ValidationError& e) {
    bad.push_back(std::string("state: ") + e.what());
  }
  for (const auto& s : burst_states) {
    try {
      parse_state_spec(s);
    } catch (const ValidationError& e) {
      bad.push_back(std::string("burst_states: ") + e.what());
    }
  }
  if (bad.empty()) return;
  std::ostringstream msg;
  msg << "invalid configuration:";
  for (const auto& b : bad) msg << "\n  - " << b;
  throw ValidationError(msg.str());
}

PeakWindow RunConfig::peak_window() const {
  PeakWindow w = default_peak_window(burst);
  if (peak_window_start_ns) w.start_ns = *peak_window_start_ns;
  if (peak_window_stop_ns) w.stop_ns = *peak_window_stop_ns;
  return w;
}

LossChain RunConfig::cavity_chain() const {
  return {{"cavity_output", eta_cavity_output},
          {"fiber", eta_fiber},
          {"pockels", eta_pockels},
          {"detector", eta_spd}};
}

Json to_json(const RunConfig& cfg) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  for (const auto& [name, field] : config_fields()) j[name] = field.get(cfg);
  return j;
}

RunConfig config_from_json(const Json& j) {
  require(j.is_object(), "config must be a JSON object");
  if (j.contains("schema_version"))
    require(j.at("schema_version") == kSchemaVersion,
            "unsupported config schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  RunConfig cfg;
  const auto& fields = config_fields();
  std::vector<std::string> bad;
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") continue;
    const auto it = fields.find(key);
    if (it == fields.end()) {
      bad.push_back("unknown config key '" + key + "'");
      continue;
    }
    try {
      it->second.set(cfg, value);
    } catch (const Json::exception& e) {
      bad.push_back(key + ": " + e.what());
    } catch (const ValidationError& e) {
      bad.push_back(key + ": " + e.what());
    }
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& b : bad) msg << "\n  - " << b;
    throw ValidationError(msg.str());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  const std::string text = read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& cfg, const fs::path& path) {
  write_text(path, to_json(cfg).dump(2) + "\n");
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canonical = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json to_json(const BurstParams& p) {
  Json j;
  for (const auto& [name, field] : burst_fields()) j[name] = field.get(p);
  return j;
}

BurstParams burst_params_from_json(const Json& j) {
  BurstParams p;
  for (const auto& [key, value] : j.items()) {
    const auto it = burst_fields().find(key);
    require(it != burst_fields().end(), "unknown burst parameter '" + key + "'");
    it->second.set(p, value);
  }
  return p;
}

QubitState<double> parse_state_spec(const std::string& spec) {
  const std::string s = trim(spec);
  if (s == "r1") return QubitState<double>::r1();
  if (s == "r2") return QubitState<double>::r2();
  if (s == "D") return states::diagonal<double>();
  if (s == "A") return states::antidiagonal<double>();
  if (s == "R") return states::right<double>();
  if (s == "L") return states::left<double>();
  const auto parts = split(s, ',');
  if (parts.size() == 2 || parts.size() == 3) {
    const auto a = to_double(parts[0]);
    const auto b = to_double(parts[1]);
    const auto phi = parts.size() == 3 ? to_double(parts[2]) : std::optional<double>(0.0);
    if (a && b && phi && (*a != 0.0 || *b != 0.0))
      return QubitState<double>::normalized(Complex<double>(*a), std::polar(*b, *phi));
  }
  throw ValidationError("cannot parse state '" + spec +
                        "' (expected r1, r2, D, A, R, L or a,b[,phi])");
}

void write_text(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset_csv(const Dataset& ds) {
  std::string out = "trial_index,branch,total,repeat_index,timestamp_ns\n";
  out.reserve(ds.records.size() * 32);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    const std::string prefix =
        std::to_string(i) + "," + to_string(rec.branch) + "," + std::to_string(rec.total()) + ",";
    if (rec.clicks.empty()) {
      out += prefix + "-1,-1\n";
      continue;
    }
    for (const auto& c : rec.clicks) {
      out += prefix + std::to_string(c.repeat_index) + "," +
             std::to_string(static_cast<long long>(std::floor(c.time_ns))) + "\n";
    }
  }
  return out;
}

Json to_json(const QubitState<double>& state) {
  return Json::array({Json::array({state.a_r1().real(), state.a_r1().imag()}),
                      Json::array({state.a_r2().real(), state.a_r2().imag()})});
}

namespace {

QubitState<double> state_from_json(const Json& j) {
  return QubitState<double>::normalized({j.at(0).at(0).get<double>(), j.at(0).at(1).get<double>()},
                                        {j.at(1).at(0).get<double>(), j.at(1).at(1).get<double>()});
}

}  // namespace

Json dataset_summary(const Dataset& ds) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["params"] = to_json(ds.params);
  j["seed"] = ds.seed;
  j["n_trials"] = ds.records.size();
  j["prepared_state"] = to_json(ds.prepared_state);
  j["basis"] = {{"label", to_string(ds.basis.label)},
                {"theta", ds.basis.pulse.theta},
                {"phi", ds.basis.pulse.phi}};
  const auto hist = photon_histogram(ds);
  j["statistics"] = {{"mean_photons", mean_photons(ds)},
                     {"prob_zero", static_cast<double>(hist[0]) / ds.records.size()},
                     {"prob_geq1", fraction_with_at_least(ds, 1)},
                     {"histogram", hist}};
  return j;
}

void write_dataset(const Dataset& ds, const fs::path& csv_path, const fs::path& summary_path) {
  write_text(csv_path, dataset_csv(ds));
  write_text(summary_path, dataset_summary(ds).dump(2) + "\n");
}

Dataset read_dataset(const fs::path& csv_path, const fs::path& summary_path) {
  Json summary;
  try {
    summary = Json::parse(read_text(summary_path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(summary_path.string() + ": " + e.what());
  }
  Dataset ds;
  ds.params = burst_params_from_json(summary.at("params"));
  ds.seed = summary.at("seed").get<std::uint64_t>();
  ds.prepared_state = state_from_json(summary.at("prepared_state"));
  const auto& b = summary.at("basis");
  ds.basis.label = parse_basis(b.at("label").get<std::string>());
  ds.basis.pulse = Rotation<double>(b.at("theta").get<double>(), b.at("phi").get<double>());
  const auto u = rotation_unitary(ds.basis.pulse);
  ds.basis.plus_state = apply_unitary(u, QubitState<double>::r1());
  ds.basis.minus_state = apply_unitary(u, QubitState<double>::r2());
  ds.records.resize(summary.at("n_trials").get<std::size_t>());

  std::istringstream in(read_text(csv_path));
  std::string line;
  std::size_t line_no = 0;
  std::getline(in, line);
  ++line_no;
  require(trim(line) == "trial_index,branch,total,repeat_index,timestamp_ns",
          csv_path.string() + ": unexpected header");
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    require(f.size() == 5, csv_path.string() + " line " + std::to_string(line_no) +
                               ": expected 5 columns");
    const auto idx = to_integer(f[0], line_no);
    require(idx >= 0 && static_cast<std::size_t>(idx) < ds.records.size(),
            csv_path.string() + " line " + std::to_string(line_no) + ": trial_index out of range");
    auto& rec = ds.records[static_cast<std::size_t>(idx)];
    rec.branch = parse_branch(f[1]);
    const auto repeat = to_integer(f[3], line_no);
    const auto ts = to_integer(f[4], line_no);
    if (repeat >= 0) rec.clicks.push_back({static_cast<int>(repeat), static_cast<double>(ts)});
  }
  return ds;
}

std::string histogram_csv(std::span<const std::uint64_t> hist) {
  std::string out = "n_photons,count\n";
  for (std::size_t k = 0; k < hist.size(); ++k)
    out += std::to_string(k) + "," + std::to_string(hist[k]) + "\n";
  return out;
}

std::string profile_csv(const TemporalProfile& profile) {
  std::string out = "bin_start_ns,count\n";
  for (std::size_t i = 0; i < profile.counts.size(); ++i)
    out += fixed(profile.bin_start_ns(i), 3) + "," + std::to_string(profile.counts[i]) + "\n";
  return out;
}

std::vector<DataPoint> parse_points_csv(const std::string& text) {
  std::vector<DataPoint> points;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split(t, ',');
    const bool numeric = std::all_of(f.begin(), f.end(), [](const auto& s) { return to_double(s); });
    if (first_row && !numeric) {
      first_row = false;
      continue;  // header
    }
    first_row = false;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (f.size() != 2 && f.size() != 3)
      throw ValidationError(where + "expected x,y[,sigma], got " + std::to_string(f.size()) +
                            " columns");
    if (!numeric) throw ValidationError(where + "non-numeric value in '" + t + "'");
    DataPoint p{*to_double(f[0]), *to_double(f[1]), std::nullopt};
    if (f.size() == 3) p.sigma = *to_double(f[2]);
    try {
      p.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    points.push_back(p);
  }
  require(!points.empty(), "points file contains no data rows");
  return points;
}

std::vector<DataPoint> read_points_csv(const fs::path& path) {
  try {
    return parse_points_csv(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json to_json(const FitResult& fit, bool with_trace) {
  Json j;
  Json params = Json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i)
    params[fit.names[i]] = fit.params(static_cast<Eigen::Index>(i));
  j["params"] = params;
  j["residual_norm"] = fit.residual_norm;
  j["gradient_norm"] = fit.gradient_norm;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["termination"] = fit.termination;
  j["jacobian_condition"] =
      std::isfinite(fit.jacobian_condition) ? Json(fit.jacobian_condition) : Json(nullptr);
  j["residuals"] = std::vector<double>(fit.residuals.data(), fit.residuals.data() + fit.residuals.size());
  if (with_trace) {
    Json trace = Json::array();
    for (const auto& rec : fit.trace) {
      trace.push_back({{"iteration", rec.iteration},
                       {"params", std::vector<double>(rec.params.data(),
                                                      rec.params.data() + rec.params.size())},
                       {"residual_norm", rec.residual_norm},
                       {"damping", rec.damping},
                       {"accepted", rec.accepted}});
    }
    j["trace"] = trace;
  }
  return j;
}

Json to_json(const TomographyResult& tomo) {
  Json j;
  Json probs = Json::object();
  for (const auto& bp : tomo.basis_probs) probs[to_string(bp.basis.label)] = bp.p_plus;
  j["basis_probs"] = probs;
  j["stokes_raw"] = {tomo.stokes_raw(0), tomo.stokes_raw(1), tomo.stokes_raw(2)};
  j["stokes"] = {tomo.stokes(0), tomo.stokes(1), tomo.stokes(2)};
  Json rho = Json::array();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) rho.push_back({tomo.density(r, c).real(), tomo.density(r, c).imag()});
  j["density_matrix"] = rho;
  j["fidelity"] = tomo.fidelity;
  return j;
}

}  // namespace superatom
