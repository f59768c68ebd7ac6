#pragma once

#include <string>

#include "scalewave/model.hpp"
#include "scalewave/synthetic.hpp"
#include "scalewave/trainer.hpp"

namespace scalewave {

// JSON (key/value tree) round trip for architectures, training settings and
// task specs. A config file may start from a preset ("preset": "w3-desk")
// and override fields; command-line flags override the file.
struct RunConfig {
    ArchitectureConfig arch;
    TrainConfig train;
    SyntheticTaskSpec task;
};

std::string architecture_to_json(const ArchitectureConfig& cfg);
ArchitectureConfig architecture_from_json(const std::string& text);

RunConfig run_config_from_json(const std::string& text);
RunConfig run_config_from_file(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

// One-page schema of the accepted keys (for --help and the README).
std::string config_schema();

}  // namespace scalewave
