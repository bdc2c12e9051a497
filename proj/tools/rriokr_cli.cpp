// Command-line front end over the C interface.
#include "rriokr/rriokr.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int exit_code(rriokr_status s) {
  switch (s) {
    case RRIOKR_OK: return 0;
    case RRIOKR_USAGE: return 1;
    case RRIOKR_DATA: return 2;
    default: return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-rank output kernel regression"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = "out";
  std::optional<double> lambda;
  std::optional<std::int64_t> p;
  std::optional<std::string> kernel;
  std::optional<double> sigma2;

  for (const char* name : {"diagnose", "synth", "train", "decode", "bench-decode", "eval"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--lambda", lambda, "regularization override")->check(CLI::PositiveNumber);
    sub->add_option("--p", p, "rank override")->check(CLI::PositiveNumber);
    sub->add_option("--kernel", kernel, "input kernel override");
    sub->add_option("--sigma2", sigma2, "output kernel width override")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  nlohmann::json cfg;
  {
    std::ifstream in(config_path);
    std::stringstream text;
    text << in.rdbuf();
    try {
      cfg = nlohmann::json::parse(text.str());
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "error: " << config_path << ": " << e.what() << '\n';
      return 1;
    }
  }
  if (!cfg.is_object()) {
    std::cerr << "error: " << config_path << ": expected a JSON object\n";
    return 1;
  }
  if (seed) cfg["seed"] = *seed;
  if (!cfg.contains("seed")) {
    std::cerr << "error: a seed is required (--seed or \"seed\" in the config)\n";
    return 1;
  }
  cfg["threads"] = threads;
  if (!cfg.contains("base_dir"))
    cfg["base_dir"] = fs::absolute(fs::path(config_path)).parent_path().string();

  nlohmann::json overrides = cfg.value("overrides", nlohmann::json::object());
  if (lambda) overrides["lambda"] = *lambda;
  if (p) overrides["p"] = *p;
  if (kernel) overrides["kernel"] = *kernel;
  if (sigma2) overrides["sigma2"] = *sigma2;
  if (!overrides.empty()) cfg["overrides"] = overrides;

  if (rriokr_set_threads(threads) != RRIOKR_OK) {
    std::cerr << "error: " << rriokr_last_error() << '\n';
    return 1;
  }
  const rriokr_status s = rriokr_run_command(command.c_str(), cfg.dump().c_str(), out_dir.c_str());
  if (s != RRIOKR_OK) std::cerr << "error: " << rriokr_last_error() << '\n';
  return exit_code(s);
}
