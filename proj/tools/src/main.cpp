#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "selrad/errors.hpp"
#include "selrad_cli/commands.hpp"
#include "selrad_cli/config.hpp"
#include "selrad_cli/version.hpp"

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kNumerical = 3 };

int report(const char* kind, const std::string& msg, int code) {
  std::cerr << "error[" << kind << "]: " << msg << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace selrad;
  CLI::App app{"Collective emission of atoms coupled to a nanophotonic cavity and free space"};
  app.set_version_flag("--version", std::string(cli::kSoftwareName) + " " + cli::kSoftwareVersion);
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  unsigned jobs = 1;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;

  std::string which;
  const std::pair<const char*, const char*> commands[] = {
      {"trace", "Ensemble-averaged emission traces per protocol"},
      {"sweep", "Decay rates over the (N, C1, protocol) grid"},
      {"histogram", "Eigenstate-population histograms per protocol"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = run->add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--set", sets, "Override a config value, key.path=value (repeatable)");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Master seed (overrides ensemble.seed)");
    sub->callback([&which, n = name] { which = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    std::vector<std::string> overrides = sets;
    if (seed) overrides.push_back("ensemble.seed=" + std::to_string(*seed));
    const cli::ExperimentConfig config = cli::load_config_file(config_path, overrides);
    for (const std::string& w : config.warnings) std::cerr << "warning: " << w << "\n";
    const cli::RunOptions options{out_dir, jobs};
    std::vector<std::string> files;
    if (which == "trace") {
      files = cli::cmd_trace(config, options);
    } else if (which == "sweep") {
      files = cli::cmd_sweep(config, options);
    } else {
      files = cli::cmd_histogram(config, options);
    }
    for (const std::string& f : files) std::cout << f << "\n";
  } catch (const cli::ConfigError& e) {
    return report("config", e.what(), kConfig);
  } catch (const ParameterError& e) {
    return report("config", e.what(), kConfig);
  } catch (const NumericalError& e) {
    return report("numerical", e.what(), kNumerical);
  } catch (const Error& e) {
    return report("numerical", e.what(), kNumerical);
  } catch (const std::exception& e) {
    return report("io", e.what(), kIo);
  }
  return kOk;
}
