#pragma once

// Run configuration: a YAML key-value tree. Every key is optional and
// defaults to the reference robot and grid; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hopsim/core_model.hpp"
#include "hopsim/hopping_sim.hpp"
#include "hopsim/integrator.hpp"
#include "hopsim/stiffness_sweep.hpp"

namespace hopsim {

struct RunConfig {
  HopperParams hopper = HopperParams::reference(4000.0, 35.0);
  GroundProfile ground{3800.0, 45.0};
  double energy = 1.0;
  EpisodeConfig episode;
  IntegratorConfig integrator;
  SweepSpec sweep;
  // Initial toe heights above ground for the phase portrait.
  std::vector<double> portrait_drop_heights;
  bool fit_free_offset = false;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

/// Throws Error(Config) with a "<source>:<line>:<column>: message" prefix.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// YAML text equal to the built-in defaults.
std::string default_config_text();

}  // namespace hopsim
