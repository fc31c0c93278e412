#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "spme/cli.hpp"
#include "spme/errors.hpp"
#include "spme/io.hpp"
#include "support.hpp"

using namespace spme;
using namespace spme::io;
namespace fs = std::filesystem;

namespace {

const fs::path kData = SPME_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "spme");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

fs::path write_config(const fs::path& dir, const std::string& name, const Json& j) {
  const auto p = dir / name;
  write_text_file(p, dump(j));
  return p;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += (c == '\n');
  return n;
}

Json cell_ref() { return (kData / "default_cell.json").string(); }

}  // namespace

TEST_CASE("shipped cell file matches the built-in default plant") {
  const Cell cell = cell_from_json(read_json_file(kData / "default_cell.json"), "cell");
  CHECK(cell == default_cell());
}

TEST_CASE("numbers print in shortest round-trip form") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, u(rng)) * (i % 2 ? 1 : -1);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(3.0) == "3");
}

TEST_CASE("cell, swarm, profile, truth and trial round trip through JSON") {
  const Cell cell = default_cell();
  CHECK(cell_from_json(to_json(cell), "cell") == cell);

  pso::SwarmConfig sw{.particles = 7, .iterations = 9, .seed = 12345678901234ULL};
  const auto sw2 = swarm_from_json(to_json(sw), "swarm");
  CHECK(sw2.particles == 7);
  CHECK(sw2.iterations == 9);
  CHECK(sw2.seed == 12345678901234ULL);

  const scenario::ProfileSpec pulse{scenario::ProfileKind::pulse, 1.0, 1.0 / 60.0, 3600, 1.0};
  CHECK(profile_from_json(to_json(pulse), "p") == pulse);

  scenario::TruthSpec t;
  t.cell = cell;
  t.mode = scenario::TruthMode::fine_spme;
  t.noise = {0.002, 0.003, 99};
  const auto t2 = truth_from_json(to_json(t), "truth", kData);
  CHECK(t2.cell == t.cell);
  CHECK(t2.mode == t.mode);
  CHECK(t2.noise == t.noise);
  CHECK(t2.discrepancy_amplitude_V == t.discrepancy_amplitude_V);

  scenario::TrialSpec tr;
  tr.iterations = 2;
  tr.downsample = 123;
  tr.objectives = {est::ObjectiveKind::ls};
  tr.perturbed = {Target::D_e};
  const auto tr2 = trial_from_json(to_json(tr), "trial");
  CHECK(dump(to_json(tr2)) == dump(to_json(tr)));
}

TEST_CASE("configuration errors name the offending key") {
  auto j = to_json(default_cell());
  SUBCASE("missing parameter") {
    j["parameters"].erase("D_e");
    try {
      cell_from_json(j, "cell");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("D_e") != std::string::npos);
    }
  }
  SUBCASE("unknown key") {
    j["parameters"]["D_ee"] = 1.0;
    CHECK_THROWS_WITH_AS(cell_from_json(j, "cell"), doctest::Contains("D_ee"), ConfigError);
  }
  SUBCASE("wrong type") {
    j["parameters"]["eps_e"] = "0.3";
    CHECK_THROWS_WITH_AS(cell_from_json(j, "cell"), doctest::Contains("eps_e"), ConfigError);
  }
  SUBCASE("invalid value") {
    j["parameters"]["eps_e"] = -0.3;
    CHECK_THROWS_AS(cell_from_json(j, "cell"), ConfigError);
  }
  SUBCASE("duplicate and unknown targets") {
    CHECK_THROWS_AS(targets_from_json(Json::array({"D_e", "D_e"}), "t"), ConfigError);
    CHECK_THROWS_AS(targets_from_json(Json::array({"R_l"}), "t"), ConfigError);
  }
  SUBCASE("profile keys") {
    CHECK_THROWS_WITH_AS(profile_from_json(Json{{"kind", "cc_discharge"}, {"rate_c", 1}, {"duration_s", 10}, {"dtt", 1}}, "profile"),
                         doctest::Contains("profile.dtt"), ConfigError);
    CHECK_THROWS_AS(profile_from_json(Json{{"kind", "ramp"}, {"rate_c", 1}, {"duration_s", 10}}, "profile"), ConfigError);
  }
}

TEST_CASE("dataset CSV round trip") {
  scenario::TruthSpec spec;
  spec.cell = default_cell();
  const auto profile = scenario::build_profile({scenario::ProfileKind::pulse, 1.0, 1.0 / 60.0, 300, 1.0}, 5.0);
  const auto d = scenario::truth_generate(spec, profile, 0.9);
  const auto dir = spme::testing::scratch_dir("dataset_roundtrip");
  std::ostringstream s;
  write_dataset_csv(s, d);
  write_text_file(dir / "d.csv", s.str());
  const auto t = read_dataset_csv(dir / "d.csv");
  CHECK(t.current == d.profile.current);
  CHECK(t.truth == d.truth);
  CHECK(t.measured == d.measured);
  for (std::size_t k = 0; k < t.time.size(); ++k) CHECK(t.time[k] == profile.time(k));
}

TEST_CASE("simulate command") {
  const auto dir = spme::testing::scratch_dir("cli_simulate");
  SUBCASE("rest holds the open-circuit voltage") {
    const auto cfg = write_config(dir, "rest.json",
                                  Json{{"cell", cell_ref()},
                                       {"profile", {{"kind", "cc_discharge"}, {"rate_c", 0.0}, {"duration_s", 50}}},
                                       {"initial_soc", 0.6}});
    REQUIRE(run_cli({"simulate", "-c", cfg.string(), "-o", (dir / "rest.csv").string()}) == cli::kExitOk);
    std::istringstream in(slurp(dir / "rest.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("time_s,current_A,voltage_V", 0) == 0);
    std::set<std::string> voltages;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::stringstream ls(line);
      std::string a, b, v;
      std::getline(ls, a, ',');
      std::getline(ls, b, ',');
      std::getline(ls, v, ',');
      voltages.insert(v);
      ++rows;
    }
    CHECK(rows == 50);
    CHECK(voltages.size() == 1);
  }
  SUBCASE("0.5C discharge writes one row per sample") {
    REQUIRE(run_cli({"simulate", "-c", (kData / "configs" / "simulate_0p5c.json").string(), "-o",
                     (dir / "half.csv").string()}) == cli::kExitOk);
    CHECK(count_lines(slurp(dir / "half.csv")) == 7001);
  }
  SUBCASE("missing cell file is a configuration error") {
    const auto cfg = write_config(dir, "bad.json",
                                  Json{{"cell", (dir / "nope.json").string()},
                                       {"profile", {{"kind", "cc_discharge"}, {"rate_c", 1.0}, {"duration_s", 5}}}});
    std::string err;
    CHECK(run_cli({"simulate", "-c", cfg.string(), "-o", (dir / "x.csv").string()}, &err) == cli::kExitConfig);
    CHECK(err.find("nope.json") != std::string::npos);
  }
  SUBCASE("usage errors") {
    CHECK(run_cli({"simulate"}) == cli::kExitConfig);
    CHECK(run_cli({"--help"}) == cli::kExitOk);
    CHECK(run_cli({"bogus"}) == cli::kExitConfig);
  }
}

TEST_CASE("generate command") {
  const auto dir = spme::testing::scratch_dir("cli_generate");
  auto make = [&](double mean, double std, const std::string& name) {
    return write_config(dir, name,
                        Json{{"truth", {{"cell", cell_ref()}, {"noise", {{"mean_V", mean}, {"std_V", std}, {"seed", 3}}}}},
                             {"profile", {{"kind", "cc_discharge"}, {"rate_c", 1.0}, {"duration_s", 600}}}});
  };
  SUBCASE("noise-free columns agree") {
    const auto cfg = make(0.0, 0.0, "clean.json");
    REQUIRE(run_cli({"generate", "-c", cfg.string(), "-o", (dir / "clean.csv").string()}) == cli::kExitOk);
    const auto t = read_dataset_csv(dir / "clean.csv");
    CHECK(t.truth == t.measured);
    CHECK(t.truth.size() == 600);
  }
  SUBCASE("reruns and sidecar replays are byte identical") {
    const auto cfg = make(0.01, 0.01, "noisy.json");
    REQUIRE(run_cli({"generate", "-c", cfg.string(), "-o", (dir / "a.csv").string()}) == cli::kExitOk);
    REQUIRE(run_cli({"generate", "-c", cfg.string(), "-o", (dir / "b.csv").string()}) == cli::kExitOk);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    REQUIRE(run_cli({"generate", "-c", (dir / "a.json").string(), "-o", (dir / "c.csv").string()}) == cli::kExitOk);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "c.csv"));
    REQUIRE(run_cli({"generate", "-c", cfg.string(), "-o", (dir / "d.csv").string(), "--seed", "4"}) == cli::kExitOk);
    CHECK(slurp(dir / "a.csv") != slurp(dir / "d.csv"));
  }
  SUBCASE("biased noise shifts the mean") {
    const auto cfg = make(0.01, 0.0, "bias.json");
    REQUIRE(run_cli({"generate", "-c", cfg.string(), "-o", (dir / "bias.csv").string()}) == cli::kExitOk);
    const auto t = read_dataset_csv(dir / "bias.csv");
    for (std::size_t k = 0; k < t.truth.size(); ++k) CHECK(t.measured[k] - t.truth[k] == doctest::Approx(0.01).epsilon(1e-9));
  }
}

TEST_CASE("estimate command") {
  const auto dir = spme::testing::scratch_dir("cli_estimate");
  const auto gen = write_config(dir, "gen.json",
                                Json{{"truth",
                                      {{"cell", cell_ref()},
                                       {"discrepancy_amplitude_V", 0.0},
                                       {"noise", {{"mean_V", 0.0}, {"std_V", 0.0}, {"seed", 1}}}}},
                                     {"profile", {{"kind", "cc_discharge"}, {"rate_c", 0.5}, {"duration_s", 3600}}}});
  REQUIRE(run_cli({"generate", "-c", gen.string(), "-o", (dir / "clean.csv").string()}) == cli::kExitOk);

  auto estimate_cfg = [&](const std::string& objective) {
    return Json{{"cell", cell_ref()},
                {"dataset", (dir / "clean.csv").string()},
                {"objective", objective},
                {"initial_values", {{"eps_s_n", 0.5}}},
                {"targets", Json::array({Json{{"name", "eps_s_n"}, {"lower", 0.3}, {"upper", 0.95}}})},
                {"downsample", 100},
                {"swarm", {{"particles", 12}, {"iterations", 25}, {"seed", 2}}}};
  };

  SUBCASE("least squares on clean data") {
    const auto cfg = write_config(dir, "ls.json", estimate_cfg("ls"));
    REQUIRE(run_cli({"estimate", "-c", cfg.string(), "-o", (dir / "ls").string()}) == cli::kExitOk);
    const auto j = read_json_file(dir / "ls" / "estimate.json");
    CHECK(j["objective"] == "ls");
    CHECK(j["J"].get<double>() < 1e-4);
    CHECK(std::abs(j["theta"]["eps_s_n"].get<double>() - 0.75) < 0.01);
    CHECK_FALSE(j.contains("length_scales"));
    CHECK_FALSE(j.contains("sigma2_f"));
    CHECK(fs::exists(dir / "ls" / "trace.csv"));
    CHECK_FALSE(fs::exists(dir / "ls" / "residual_model.json"));
    CHECK(count_lines(slurp(dir / "ls" / "trace.csv")) == 26);
  }
  SUBCASE("KOG writes the residual model") {
    const auto cfg = write_config(dir, "kog.json", estimate_cfg("kog"));
    REQUIRE(run_cli({"estimate", "-c", cfg.string(), "-o", (dir / "kog").string()}) == cli::kExitOk);
    const auto j = read_json_file(dir / "kog" / "estimate.json");
    CHECK(j["objective"] == "kog");
    CHECK(j.contains("length_scales"));
    CHECK(j.contains("sigma2_f"));
    CHECK(j["sigma2_n_tilde"].get<double>() == 0.1);
    CHECK(fs::exists(dir / "kog" / "residual_model.json"));
  }
  SUBCASE("a downsample budget larger than the data is rejected") {
    auto j = estimate_cfg("ls");
    j["downsample"] = 9000;
    const auto cfg = write_config(dir, "big.json", j);
    std::string err;
    CHECK(run_cli({"estimate", "-c", cfg.string(), "-o", (dir / "big").string()}, &err) == cli::kExitConfig);
    CHECK(err.find("downsample") != std::string::npos);
  }
  SUBCASE("a run with no feasible candidate fails but keeps its trace") {
    // A 100 A draw hits the voltage cutoff for every candidate.
    std::ostringstream csv;
    csv << "time_s,current_A,voltage_true_V,voltage_meas_V\n";
    for (int k = 1; k <= 200; ++k) csv << k << ",100,3.5,3.5\n";
    write_text_file(dir / "hard.csv", csv.str());
    auto j = estimate_cfg("ls");
    j["dataset"] = (dir / "hard.csv").string();
    j["initial_soc"] = 0.2;
    j["swarm"] = {{"particles", 4}, {"iterations", 3}, {"seed", 1}};
    const auto cfg = write_config(dir, "hard.json", j);
    std::string err;
    CHECK(run_cli({"estimate", "-c", cfg.string(), "-o", (dir / "hard").string()}, &err) == cli::kExitRuntime);
    CHECK(count_lines(slurp(dir / "hard" / "trace.csv")) == 4);
  }
}

TEST_CASE("experiment command replays from its resolved config") {
  const auto dir = spme::testing::scratch_dir("cli_experiment");
  const auto smoke = kData / "configs" / "experiment_smoke.json";
  REQUIRE(run_cli({"experiment", "-c", smoke.string(), "-o", (dir / "a").string()}) == cli::kExitOk);
  REQUIRE(run_cli({"experiment", "-c", (dir / "a" / "config.json").string(), "-o", (dir / "b").string()}) ==
          cli::kExitOk);
  for (const char* f : {"parameters.csv", "rmse.csv", "aggregates.csv", "report.txt", "seeds.json"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  // Six targets, two objectives, one trial, plus a header.
  CHECK(count_lines(slurp(dir / "a" / "parameters.csv")) == 13);
  REQUIRE(run_cli({"experiment", "-c", smoke.string(), "-o", (dir / "c").string(), "--seed", "2"}) == cli::kExitOk);
  CHECK(slurp(dir / "a" / "parameters.csv") != slurp(dir / "c" / "parameters.csv"));
}

TEST_CASE("the installed binary runs") {
  const auto dir = spme::testing::scratch_dir("cli_binary");
  const std::string cmd = std::string("\"") + SPME_TOOL_PATH + "\" simulate -c \"" +
                          (kData / "configs" / "simulate_0p5c.json").string() + "\" -o \"" +
                          (dir / "t.csv").string() + "\"";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(count_lines(slurp(dir / "t.csv")) == 7001);
  const std::string bad = std::string("\"") + SPME_TOOL_PATH + "\" simulate > /dev/null 2>&1";
  CHECK(std::system(bad.c_str()) != 0);
}
