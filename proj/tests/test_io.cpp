#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "superatom/io.hpp"

using namespace superatom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("superatom_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(RunConfig{}.validate()); }

TEST(Config, JsonRoundTrip) {
  RunConfig cfg;
  cfg.burst.p_click = 0.23;
  cfg.burst.dark_mode = DarkMode::PerRepeat;
  cfg.master_seed = 0xFFFFFFFFFFFFFFFFULL;
  cfg.peak_window_start_ns = 1.0;
  cfg.peak_window_stop_ns = 120.0;
  cfg.burst_states = {"r1", "0.88,0.48"};
  const RunConfig back = config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_EQ(back.master_seed, cfg.master_seed);
  EXPECT_EQ(config_hash(back), config_hash(cfg));
}

TEST(Config, HashTracksContent) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.burst.p_dark = 0.013;
  EXPECT_NE(config_hash(a), config_hash(b));
  RunConfig c;
  c.workers = 7;
  EXPECT_EQ(config_hash(a), config_hash(c));
}

TEST(Config, MissingKeysKeepDefaults) {
  const RunConfig cfg = config_from_json(Json{{"n_trials", 5}});
  EXPECT_EQ(cfg.n_trials, 5u);
  EXPECT_EQ(cfg.burst.n_repeats, 12);
}

TEST(Config, RejectsUnknownKeysAndBadSchema) {
  EXPECT_THROW(config_from_json(Json{{"p_clik", 0.2}}), ValidationError);
  EXPECT_THROW(config_from_json(Json{{"schema_version", 99}}), ValidationError);
  EXPECT_THROW(config_from_json(Json{{"p_click", "high"}}), ValidationError);
  EXPECT_THROW(config_from_json(Json::array()), ValidationError);
}

TEST(Config, ValidationListsEveryField) {
  RunConfig cfg;
  cfg.n_trials = 0;
  cfg.burst.p_dark = 2.0;
  cfg.finesse = -1.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("n_trials"), std::string::npos);
    EXPECT_NE(msg.find("p_dark"), std::string::npos);
    EXPECT_NE(msg.find("finesse"), std::string::npos);
  }
}

TEST(Config, FileRoundTripAndErrors) {
  const auto dir = scratch("config");
  RunConfig cfg;
  cfg.state = "R";
  save_config(cfg, dir / "c.json");
  EXPECT_EQ(to_json(load_config(dir / "c.json")), to_json(cfg));
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
  write_text(dir / "broken.json", "{ not json");
  EXPECT_THROW(load_config(dir / "broken.json"), ValidationError);
}

TEST(Config, ShippedDefaultsLoad) {
  const auto cfg = load_config(std::string(SUPERATOM_SOURCE_DIR) + "/config/calibrated_defaults.json");
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.burst.eta_prep, 0.955);
  EXPECT_EQ(cfg.burst.p_dark, 0.012);
  EXPECT_EQ(cfg.burst.mw_transfer_fidelity, 0.997);
  EXPECT_LT(cfg.burst.s_surv, 1.0);
}

TEST(Config, CavityChainProduct) {
  const RunConfig cfg;
  EXPECT_NEAR(chain_efficiency(cfg.cavity_chain()), 0.80 * 0.859 * 0.85 * 0.68, 1e-15);
}

TEST(StateSpec, NamedAndNumeric) {
  EXPECT_NEAR(born_probability(parse_state_spec("D"), states::diagonal()), 1.0, 1e-15);
  EXPECT_NEAR(born_probability(parse_state_spec("L"), states::left()), 1.0, 1e-15);
  const auto s = parse_state_spec("0.88,0.48");
  EXPECT_NEAR(s.population_r1(), 0.7744 / 1.0048, 1e-12);
  const auto r = parse_state_spec("1,1," + std::to_string(std::numbers::pi / 2));
  EXPECT_NEAR(born_probability(r, states::right()), 1.0, 1e-6);
  EXPECT_THROW(parse_state_spec("up"), ValidationError);
  EXPECT_THROW(parse_state_spec("0,0"), ValidationError);
}

TEST(DatasetFiles, RoundTripAtNanosecondResolution) {
  const auto dir = scratch("dataset");
  BurstParams p;
  const auto ds = simulate_dataset(states::diagonal(), make_basis<double>(BasisLabel::X), 500, p, 17);
  write_dataset(ds, dir / "d.csv", dir / "d.json");
  const auto back = read_dataset(dir / "d.csv", dir / "d.json");
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.seed, ds.seed);
  EXPECT_EQ(to_json(back.params), to_json(ds.params));
  EXPECT_EQ(back.basis.label, BasisLabel::X);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.records[i].branch, ds.records[i].branch);
    ASSERT_EQ(back.records[i].total(), ds.records[i].total());
    for (int c = 0; c < ds.records[i].total(); ++c) {
      EXPECT_EQ(back.records[i].clicks[c].repeat_index, ds.records[i].clicks[c].repeat_index);
      EXPECT_NEAR(back.records[i].clicks[c].time_ns, ds.records[i].clicks[c].time_ns, 1.0);
    }
  }
  EXPECT_EQ(photon_histogram(back), photon_histogram(ds));
  EXPECT_EQ(dataset_csv(back), dataset_csv(ds));
}

TEST(DatasetFiles, CsvLayout) {
  Dataset ds;
  ds.records.resize(2);
  ds.records[1].clicks = {{0, 12.7}, {3, 1234.2}};
  const std::string csv = dataset_csv(ds);
  EXPECT_EQ(csv,
            "trial_index,branch,total,repeat_index,timestamp_ns\n"
            "0,UNBLOCKED,0,-1,-1\n"
            "1,UNBLOCKED,2,0,12\n"
            "1,UNBLOCKED,2,3,1234\n");
}

TEST(DatasetFiles, MalformedCsvReported) {
  const auto dir = scratch("bad_dataset");
  const auto ds = simulate_dataset(QubitState<double>::r1(), make_basis<double>(BasisLabel::Z), 5, BurstParams{}, 1);
  write_dataset(ds, dir / "d.csv", dir / "d.json");
  write_text(dir / "d.csv", "trial_index,branch,total,repeat_index,timestamp_ns\n0,UNBLOCKED,1,0\n");
  EXPECT_THROW(read_dataset(dir / "d.csv", dir / "d.json"), ValidationError);
}

TEST(Points, HeaderCommentsAndSigma) {
  const auto pts = parse_points_csv("od,eta,sigma\n# comment\n0.5,0.1\n1.9,0.24,0.01\n");
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_FALSE(pts[0].sigma.has_value());
  EXPECT_EQ(*pts[1].sigma, 0.01);
}

TEST(Points, ErrorsCarryLineNumbers) {
  try {
    parse_points_csv("x,y\n0.5,0.1\n0.7,abc\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_points_csv("0.5,0.1\n0.7\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_points_csv(""), ValidationError);
  EXPECT_THROW(parse_points_csv("x,y\n"), ValidationError);
  EXPECT_THROW(parse_points_csv("1.0,1.5\n"), ValidationError);
}

TEST(Writers, HistogramAndProfileCsv) {
  const std::vector<std::uint64_t> hist{5, 3, 0, 1};
  EXPECT_EQ(histogram_csv(hist), "n_photons,count\n0,5\n1,3\n2,0\n3,1\n");
  TemporalProfile prof{2.5, {4, 0}};
  EXPECT_EQ(profile_csv(prof), "bin_start_ns,count\n0.000,4\n2.500,0\n");
}

TEST(Writers, UnwritablePathIsIoError) {
  EXPECT_THROW(write_text("/proc/superatom/nope.txt", "x"), IoError);
  EXPECT_THROW(read_text("/nonexistent/superatom.txt"), IoError);
}

TEST(Reports, TomographyJsonLayout) {
  std::vector<BasisProbability> probs;
  for (auto label : {BasisLabel::Z, BasisLabel::X, BasisLabel::Y}) {
    const auto b = make_basis<double>(label);
    probs.push_back({b, born_probability(states::diagonal(), b.plus_state)});
  }
  const Json j = to_json(reconstruct(probs, states::diagonal()));
  EXPECT_EQ(j.at("density_matrix").size(), 4u);
  EXPECT_EQ(j.at("density_matrix")[1].size(), 2u);
  EXPECT_NEAR(j.at("density_matrix")[1][0].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(j.at("fidelity").get<double>(), 1.0, 1e-12);
  EXPECT_EQ(j.at("basis_probs").size(), 3u);
  EXPECT_EQ(j.at("stokes").size(), 3u);
}
