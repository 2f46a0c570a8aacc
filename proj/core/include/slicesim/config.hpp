#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicesim/agents.hpp"
#include "slicesim/env.hpp"
#include "slicesim/metrics.hpp"
#include "slicesim/replay.hpp"

namespace slicesim::config {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct AgentConfig {
    std::string algorithm = "maddpg"; // or "dqn"
    agents::MaddpgHyper maddpg;
    agents::DqnHyper dqn;
    bool average_new_agents = true; // slice-growth init rule; false = fresh random

    void validate() const;
};

struct TrainingConfig {
    int episodes = 500;
    int eval_every = 0; // greedy eval cadence in episodes; 0 = off
    std::vector<std::uint64_t> seeds = {1};
    int batch = 64;
    int updates_per_step = 1;
    int warmup_thawed = 256; // updates start once this many rewards materialized
    replay::ReplayConfig replay;

    void validate() const;
};

struct OutputConfig {
    std::string dir = "runs/out";
    metrics::Format format = metrics::Format::JsonLines;
};

/// The full experiment: scenario (env block), algorithm, training schedule
/// and output routing. Parsed strictly from JSON; any unrecognized field is
/// a ConfigError naming the field, and schema_version is mandatory.
struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    env::EnvConfig env;
    AgentConfig agent;
    TrainingConfig training;
    OutputConfig output;

    void validate() const;
};

/// Parse a config file. Relative paths inside (power curves, traces) are
/// resolved against the file's directory; curves are loaded eagerly so the
/// returned config is self-contained.
ExperimentConfig load_config(const std::string& path);

/// Same, from raw JSON text; base_dir anchors relative paths.
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir);

/// Serialize back to the input schema with every default filled in and
/// power curves inlined as point lists. The result reloads to an identical
/// config, which is what makes run-directory snapshots reproducible.
std::string config_to_json(const ExperimentConfig& cfg);

void write_config_snapshot(const std::string& path, const ExperimentConfig& cfg);

} // namespace slicesim::config
