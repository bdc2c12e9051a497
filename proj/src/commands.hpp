#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace rriokr {

// Runs one of diagnose | synth | train | decode | bench-decode | eval.
// `config` may carry an "overrides" object (lambda, p, kernel, sigma2) that
// is folded into the command's own keys; the folded config is written to
// out_dir/config.json before any result. Throws rriokr::Error.
void run_command(const std::string& command, const nlohmann::json& config,
                 const std::filesystem::path& out_dir);

// Config with the overrides folded in, as saved next to the outputs.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& config);

}  // namespace rriokr
