#pragma once

#include "patchnav/eval.hpp"
#include "patchnav/point_cloud.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace patchnav {

/// Every tunable of the pipeline under one flat key-value namespace; loaded
/// from a TOML-style file and overridable per key from the command line.
struct Config {
    MapParams map;
    RobotParams robot;
    OptParams opt;
    double safety_radius = 0.0;  // collision-free margin used by eval
    std::uint64_t seed = 1;
    int threads = 0;  // 0 keeps the OpenMP default

    // scene generation
    std::string scene_type = "spiral";
    SpiralSceneParams spiral;
    UnevenSceneParams uneven;
    double noise_sigma = 0.0;

    /// res_m = 0 or res_pc = 0 mean "derive": res_pc from the cloud hint,
    /// res_m as 3 * res_pc.
    void resolve_resolutions(double cloud_hint);
    void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are errors.
Config load_config(const std::filesystem::path& path);

void apply_override(Config& config, const std::string& key, const std::string& value);

/// Writes every key so the dump reloads to the identical configuration.
void dump_config(const std::filesystem::path& path, const Config& config);
std::string dump_config_string(const Config& config);

/// All recognized keys, in dump order.
std::vector<std::string> config_keys();

}  // namespace patchnav
