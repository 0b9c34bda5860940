#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

// Runs the CLI inside `dir` with stdout and stderr captured.
Result run(const fs::path& dir, const std::string& args, const std::string& env = "") {
  fs::create_directories(dir);
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" NMFLUX_CLI "' " + args +
                          " > .stdout 2> .stderr";
  const int status = std::system(cmd.c_str());
  Result r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / ".stdout"), slurp(dir / ".stderr")};
  fs::remove(dir / ".stdout");
  fs::remove(dir / ".stderr");
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nmflux_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string dir_digest(const fs::path& dir) {
  std::string all;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  for (const auto& f : files) all += f.string() + "\n" + slurp(dir / f);
  return all;
}

}  // namespace

TEST_CASE("help text matches the golden files") {
  const fs::path dir = scratch("help");
  for (std::string sub : {"", "dynamics", "mcwf", "measure", "boundary", "spectrum", "classify", "sweep", "figures"}) {
    const Result r = run(dir, sub + " --help");
    CHECK(r.code == 0);
    const std::string name = sub.empty() ? "main" : sub;
    CHECK_MESSAGE(r.out == slurp(fs::path(NMFLUX_GOLDEN_DIR) / (name + "_help.txt")), "subcommand " << name);
  }
  CHECK(fs::is_empty(dir));
}

TEST_CASE("dynamics") {
  const fs::path dir = scratch("dynamics");
  SUBCASE("strong coupling") {
    const Result r = run(dir, "dynamics --v 1 --delta 0 --t-max 14");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("dynamics=non-Markovian") != std::string::npos);
    CHECK(fs::exists(dir / "dynamics_out" / "population.csv"));
    CHECK(fs::exists(dir / "dynamics_out" / "flux.csv"));
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
  }
  SUBCASE("no coupling gives zero flux") {
    REQUIRE(run(dir, "dynamics --v 0 --delta 0 --out z").code == 0);
    std::istringstream in(slurp(dir / "z" / "flux.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,flux");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      CHECK(std::stod(line.substr(line.find(',') + 1)) == 0.0);
    }
    CHECK(rows == 14001);
  }
  SUBCASE("missing coupling is a usage error") {
    const Result r = run(dir, "dynamics --delta 0");
    CHECK(r.code == 2);
    CHECK(r.err.find("--v") != std::string::npos);
    CHECK(r.err.find("Usage:") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "dynamics_out"));
  }
  SUBCASE("invalid values name the field") {
    Result r = run(dir, "dynamics --v 1 --gamma -1");
    CHECK(r.code == 2);
    CHECK(r.err.find("gamma") != std::string::npos);
    r = run(dir, "dynamics --v 1 --c0 1.5");
    CHECK(r.code == 2);
    CHECK(r.err.find("c0") != std::string::npos);
    CHECK(run(dir, "dynamics --v one").code == 2);
    CHECK(run(dir, "dynamics --v 1 --method euler").code == 2);
  }
  SUBCASE("gamma rescales inputs") {
    REQUIRE(run(dir, "dynamics --v 1 --delta 0.5 --t-max 2 --dt 0.01 --out g1").code == 0);
    REQUIRE(run(dir, "dynamics --v 1 --delta 0.5 --t-max 2 --dt 0.01 --gamma 2 --out g2").code == 0);
    std::istringstream a(slurp(dir / "g1" / "population.csv")), b(slurp(dir / "g2" / "population.csv"));
    std::string la, lb;
    std::getline(a, la);
    std::getline(b, lb);
    while (std::getline(a, la) && std::getline(b, lb)) {
      const double ta = std::stod(la), tb = std::stod(lb);
      CHECK(tb == doctest::Approx(ta / 2.0));
      CHECK(std::stod(lb.substr(lb.find(',') + 1)) == doctest::Approx(std::stod(la.substr(la.find(',') + 1))).epsilon(1e-9));
    }
  }
  SUBCASE("config file with flag override") {
    std::ofstream(dir / "cfg.json") << R"({"v": 0, "delta": 0, "t_max": 1, "out": "from_config"})";
    REQUIRE(run(dir, "dynamics --config cfg.json --v 1").code == 0);
    const std::string flux = slurp(dir / "from_config" / "flux.csv");
    CHECK(flux.find("\n1,") != std::string::npos);
    CHECK(flux.find("\n0.5,0\n") == std::string::npos);
    std::ofstream(dir / "bad.json") << R"({"vee": 1})";
    CHECK(run(dir, "dynamics --config bad.json").code == 2);
  }
}

TEST_CASE("mcwf") {
  const fs::path dir = scratch("mcwf");
  SUBCASE("reference run") {
    const Result r = run(dir, "mcwf --v 1 --delta 0 --n-traj 100000 --seed 42 --bin 0.1");
    REQUIRE(r.code == 0);
    const auto pos = r.out.find("within_3sigma=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 14)) >= 0.95);
    const auto man = nlohmann::json::parse(slurp(dir / "mcwf_out" / "manifest.json"));
    CHECK(man["master_seed"] == 42);
    CHECK(man["n_traj"] == 100000);
    CHECK(fs::exists(dir / "mcwf_out" / "jumps.csv"));
  }
  SUBCASE("reruns are identical") {
    REQUIRE(run(dir, "mcwf --v 0.7 --delta 1 --n-traj 5000 --seed 3 --out a --workers 1").code == 0);
    REQUIRE(run(dir, "mcwf --v 0.7 --delta 1 --n-traj 5000 --seed 3 --out b", "NM_WORKERS=4").code == 0);
    CHECK(dir_digest(dir / "a") == dir_digest(dir / "b"));
  }
  SUBCASE("usage errors") {
    CHECK(run(dir, "mcwf --v 1 --n-traj 0 --seed 1").code == 2);
    CHECK(run(dir, "mcwf --v 1 --n-traj 10 --seed 1 --bin 0").code == 2);
    CHECK(run(dir, "mcwf --v 1 --n-traj 10 --seed 1 --bin 20").code == 2);
  }
  SUBCASE("missing seed warns") {
    const Result r = run(dir, "mcwf --v 1 --n-traj 10");
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
  }
}

TEST_CASE("classify") {
  const fs::path dir = scratch("classify");
  auto label = [&](const std::string& args) {
    const Result r = run(dir, "classify " + args);
    REQUIRE(r.code == 0);
    return nlohmann::json::parse(r.out);
  };
  const auto strong = label("--v 2 --delta 2 --omega-threshold 1.8");
  CHECK(strong["label"] == "NonMarkovianDetected");
  CHECK(std::abs(strong["omega_peak"].get<double>() - 4.47) <= 0.449);
  CHECK(label("--v 0.3 --delta 1.7 --omega-threshold 1.8")["label"] == "MarkovianConsistent");
  CHECK(label("--v 0.9 --delta 0 --omega-threshold 1.8 --ground-truth")["label"] == "NonMarkovianUndetectable");
  CHECK(label("--v 2 --delta 2 --omega-threshold 1.8 --n-traj 20000 --seed 1")["label"] == "NonMarkovianDetected");

  const Result quiet = run(dir, "classify --v 0 --delta 1 --omega-threshold 1.8");
  CHECK(quiet.code == 0);
  CHECK(nlohmann::json::parse(quiet.out).contains("note"));
  CHECK(run(dir, "classify --v 0 --delta 1 --omega-threshold 1.8 --strict").code == 1);
  CHECK(run(dir, "classify --v 1").code == 2);
  CHECK(run(dir, "classify --v 1 --omega-threshold 1.8 --auto-threshold").code == 2);
}

TEST_CASE("measure, spectrum and boundary") {
  const fs::path dir = scratch("analysis");
  Result r = run(dir, "measure --v 1 --delta 0");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["n_value"].get<double>() > 0.0);
  CHECK(j["nonmarkovian"] == true);
  CHECK(run(dir, "measure --v 0.1").code == 0);

  r = run(dir, "spectrum --v 2 --delta 2 --out s.csv");
  REQUIRE(r.code == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j["omega_peak"].get<double>() - 4.47) <= 0.449);
  CHECK(slurp(dir / "s.csv").rfind("omega,power\n", 0) == 0);

  r = run(dir, "boundary --delta-min 0 --delta-max 0 --delta-count 1 --out b.csv");
  REQUIRE(r.code == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j["threshold"]["omega_m"].get<double>() == doctest::Approx(0.5).epsilon(0.01));
  CHECK(slurp(dir / "b.csv").rfind("delta,v_c\n", 0) == 0);
}

TEST_CASE("sweep and figures") {
  const fs::path dir = scratch("sweep");
  std::ofstream(dir / "grid.json") << R"({"v": {"min": 0.05, "max": 1.2, "count": 12},
      "delta": {"min": 0, "max": 2, "count": 10}, "output_dir": "first"})";
  Result r = run(dir, "sweep grid.json");
  REQUIRE(r.code == 0);
  CHECK(run(dir, "sweep grid.json --out second --workers 3").code == 0);
  CHECK(dir_digest(dir / "first") == dir_digest(dir / "second"));
  CHECK(slurp(dir / "first" / "cells.csv").rfind("delta,v,n_value,omega,omega_peak,prominence,verdict\n", 0) == 0);

  std::ofstream(dir / "bad.json") << R"({"v": {"min": 1, "max": 0, "count": 3}})";
  CHECK(run(dir, "sweep bad.json").code == 2);
  CHECK(run(dir, "sweep missing.json").code == 2);

  r = run(dir, "figures 9");
  CHECK(r.code == 2);
  CHECK(r.err.find("UnknownFigure") != std::string::npos);
  r = run(dir, "figures 3 --out figs");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "figs" / "fig3" / "boundary.csv"));
  CHECK(fs::exists(dir / "figs" / "fig3" / "omega_map.csv"));
}
