#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "cnnsynth/assembler.hpp"
#include "cnnsynth/synthesis.hpp"

namespace cnnsynth {

// Every tunable of the pipeline. JSON keys mirror the field groups; every key
// is optional and unknown keys are rejected.
struct PipelineConfig {
  GaParams ga;
  GenomeConfig genome;
  FitnessWeights fitness;
  double fail_threshold = 0.0119;
  std::string warp_model_id{kDefaultWarpModel};
  double merge_tolerance = 0.0;
  double scale_factor = 1.0;
  AssemblerOptions assembler;
  std::uint64_t seed = 0;

  // GA parameters with the top-level seed applied.
  GaParams ga_params() const;
};

void validate_config(const PipelineConfig& config);
PipelineConfig parse_config(std::string_view json_text);
// Throws ConfigError("config not found: ...") for a missing file.
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& config);

}  // namespace cnnsynth
