#pragma once

#include "zs3/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace zs3 {

struct RunPaths {
    std::string dataset_dir;
    std::string embeddings;
    std::string generator_checkpoint;
    std::string classifier_checkpoint;
    std::string output_dir;
};

/// Everything a run needs: module configs, split parameters, seeds, mode
/// flags and optional default paths (command-line flags take precedence).
struct RunConfig {
    PipelineConfig pipeline;
    RunPaths paths;
};

/// Parses a key-value config file with [section] headers, or a JSON document
/// with one object per section (detected by a `.json` suffix or a leading
/// '{'). Missing keys take the built-in defaults; unknown sections or keys
/// are rejected; range violations name the offending field.
RunConfig load_config(const std::string& path);

/// Parses config text directly (same rules as load_config).
RunConfig parse_config_text(const std::string& text, bool json);

/// Serializes every effective field; reloading the echo reproduces the
/// config exactly.
std::string config_echo_json(const RunConfig& config);

/// Split files produced by `zs3 synth`.
std::string split_to_json(const SplitConfig& split);
SplitConfig split_from_json_file(const std::string& path);

} // namespace zs3
