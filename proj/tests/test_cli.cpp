#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "selrad_cli/config.hpp"
#include "selrad_cli/output.hpp"

namespace fs = std::filesystem;
using namespace selrad;
using namespace selrad::cli;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  fs::path d = fs::temp_directory_path() /
               ("selrad_cli_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SELRAD_CLI_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    load_config(text, overrides, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const std::string kPurcell = std::string(SELRAD_PRESET_DIR) + "/purcell.json";

}  // namespace

TEST_CASE("minimal document resolves with defaults") {
  const ExperimentConfig c = load_config("{}", {});
  CHECK(c.cloud.n_atoms == 50);
  CHECK(c.protocols.size() == 2);
  CHECK(c.time_grid().size() == 401);
  CHECK(c.time_grid().front() == 0.0);
}

TEST_CASE("unknown keys are rejected with their line") {
  const std::string doc = "{\n  \"physics\": {\n    \"kappa\": 327,\n    \"kapa\": 1\n  }\n}\n";
  const std::string msg = error_of(doc);
  CHECK(msg.find("line 4") != std::string::npos);
  CHECK(msg.find("/physics/kapa") != std::string::npos);
  CHECK(msg.find("cfg.json") != std::string::npos);
}

TEST_CASE("type and range errors carry the line") {
  CHECK(error_of("{\n\"cloud\": {\n\"n_atoms\": \"many\"}}").find("line 3") != std::string::npos);
  CHECK(error_of("{\n\"time\": {\"points\": 401,\n\"t_end\": -1}}").find("line 3") != std::string::npos);
  CHECK(error_of("{\n\"protocols\": [\n{\"kind\": \"ss\"},\n{\"kind\": \"laser\"}]}").find("line 4") !=
        std::string::npos);
}

TEST_CASE("malformed json reports the line") {
  const std::string msg = error_of("{\n\"cloud\": {\n\"n_atoms\": 3,\n}\n}");
  CHECK(msg.find("line 4") != std::string::npos);
}

TEST_CASE("g0 and c1 are exclusive") {
  CHECK_FALSE(error_of("{\"physics\": {\"g0\": 1.0, \"c1\": 0.05}}").empty());
}

TEST_CASE("overrides apply and are attributed") {
  const ExperimentConfig c = load_config("{\"protocols\": [{\"kind\": \"ss\"}]}",
                                         {"cloud.n_atoms=7", "protocols.0.kind=pulse", "output.prefix=abc"});
  CHECK(c.cloud.n_atoms == 7);
  CHECK(c.protocols[0].kind == ProtocolKind::Pulse);
  CHECK(c.output_prefix == "abc");

  const std::string msg = error_of("{}", {"cloud.n_atoms=-3"});
  CHECK(msg.find("--set cloud.n_atoms") != std::string::npos);
  CHECK_FALSE(error_of("{}", {"physics.nothing=1"}).empty());
  CHECK_FALSE(error_of("{}", {"novalue"}).empty());
}

TEST_CASE("resolved configuration round trips") {
  for (const char* name : {"fig2", "fig3c", "fig4d", "sm-fig6", "sm-fig7", "sm-fig8", "purcell"}) {
    const ExperimentConfig a = load_config_file(std::string(SELRAD_PRESET_DIR) + "/" + name + ".json", {});
    const std::string doc = resolved_json(a).dump(2);
    const ExperimentConfig b = load_config(doc, {});
    CHECK_MESSAGE(resolved_json(b).dump(2) == doc, name);
  }
}

TEST_CASE("every preset loads") {
  for (const auto& entry : fs::directory_iterator(SELRAD_PRESET_DIR)) {
    CHECK_NOTHROW(load_config_file(entry.path().string(), {}));
  }
}

TEST_CASE("number formatting keeps 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("single atom trace splits channels by C1") {
  const fs::path out = scratch_dir("trace");
  REQUIRE(run_cli("run trace --config " + kPurcell + " --out " + out.string(), out / "log.txt") == 0);
  const auto rows = read_csv(out / "purcell_trace_ss.csv");
  REQUIRE(rows.size() == 402);
  const std::size_t ic = column(rows[0], "r_cav"), jf = column(rows[0], "r_free");
  for (std::size_t k = 1; k < rows.size(); k += 50)
    CHECK(std::stod(rows[k][ic]) / std::stod(rows[k][jf]) == doctest::Approx(0.022).epsilon(1e-9));

  const auto side = nlohmann::json::parse(read_file(out / "purcell_trace_ss.json"));
  CHECK(side["fit"]["gamma_exp"].get<double>() == doctest::Approx(1.022).epsilon(1e-6));
  CHECK(side["master_seed"].get<std::uint64_t>() == 20250101u);
  fs::remove_all(out);
}

TEST_CASE("single atom histogram sits at the Purcell rate") {
  const fs::path out = scratch_dir("hist");
  REQUIRE(run_cli("run histogram --config " + kPurcell + " --out " + out.string(), out / "log.txt") == 0);
  const auto rows = read_csv(out / "purcell_histogram.csv");
  const std::size_t ilo = column(rows[0], "bin_lo"), ihi = column(rows[0], "bin_hi"), iw = column(rows[0], "weight");
  double total = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double w = std::stod(rows[k][iw]);
    total += w;
    if (w > 0.0) {
      CHECK(std::stod(rows[k][ilo]) <= 1.022);
      CHECK(std::stod(rows[k][ihi]) > 1.022);
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  fs::remove_all(out);
}

TEST_CASE("exit codes") {
  const fs::path out = scratch_dir("codes");
  const fs::path bad = out / "bad.json";
  std::ofstream(bad) << "{\n  \"cloud\": {\"atoms\": 3}\n}\n";
  CHECK(run_cli("run trace --config " + bad.string() + " --out " + out.string(), out / "a.txt") == 2);
  CHECK(read_file(out / "a.txt").find("line 2") != std::string::npos);
  CHECK(run_cli("run trace --config " + (out / "missing.json").string(), out / "b.txt") == 2);
  CHECK(run_cli("run bogus --config " + kPurcell, out / "c.txt") == 2);
  CHECK(run_cli("run sweep --config " + kPurcell + " --set sweep.n_values=[] --out " + out.string(), out / "d.txt") ==
        2);
  CHECK(run_cli("run trace --config " + kPurcell +
                    " --set cloud.n_atoms=40 --set cloud.rms_sizes=[0.01,0.01,0.01] --set cloud.min_separation=0.5"
                    " --out " + out.string(),
                out / "e.txt") == 3);
  fs::remove_all(out);
}

TEST_CASE("outputs do not depend on the worker count") {
  const fs::path a = scratch_dir("jobs1"), b = scratch_dir("jobs3");
  const std::string base = "run sweep --config " + kPurcell + " --set cloud.n_atoms=4 --set cloud.rms_sizes=[0.5,1,0.1]"
                           " --set sweep.n_values=[3,5] --set cloud.min_separation=0.05";
  REQUIRE(run_cli(base + " --jobs 1 --out " + a.string(), a / "log.txt") == 0);
  REQUIRE(run_cli(base + " --jobs 3 --out " + b.string(), b / "log.txt") == 0);
  CHECK(read_file(a / "purcell_sweep.csv") == read_file(b / "purcell_sweep.csv"));
  CHECK(read_file(a / "purcell_sweep.json") == read_file(b / "purcell_sweep.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("seed flag overrides the document seed") {
  const fs::path out = scratch_dir("seed");
  REQUIRE(run_cli("run trace --config " + kPurcell + " --seed 77 --out " + out.string(), out / "log.txt") == 0);
  const auto side = nlohmann::json::parse(read_file(out / "purcell_trace_ss.json"));
  CHECK(side["master_seed"].get<std::uint64_t>() == 77u);
  CHECK(side["config"]["ensemble"]["seed"].get<std::uint64_t>() == 77u);
  fs::remove_all(out);
}
