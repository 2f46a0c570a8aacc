#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slicesim/agents.hpp"
#include "slicesim/config.hpp"
#include "slicesim/env.hpp"
#include "slicesim/metrics.hpp"

namespace slicesim::trainer {

/// A deterministic policy over the global observation. Exploration, if any,
/// comes from the supplied rng; evaluation policies ignore it.
using Policy =
    std::function<env::JointAction(std::span<const double> obs, sim::SeededRng& rng)>;

Policy greedy_policy(const agents::MaddpgPopulation& pop);
Policy greedy_policy(const agents::DqnAgent& agent);
Policy baseline_policy(agents::BaselinePolicy baseline, int slices);

struct TrainOutcome {
    std::uint64_t seed = 0;
    std::vector<double> episode_rewards; // mean materialized reward per episode
    std::string checkpoint_dir;          // empty when run_dir was empty
    std::string metrics_path;
    env::AuditCounters audit;
};

/// One seed of MADDPG training. Episodes come from cfg.training; the noise
/// scale anneals linearly from noise_sigma to noise_sigma_final across
/// them. warm_start, when given, is copied and trained further (the
/// slice-growth path); otherwise agents initialize from the seed's
/// weight-init stream. With run_dir non-empty, reward metrics stream to
/// run_dir/metrics/ and the final checkpoint lands in run_dir/checkpoints/.
TrainOutcome train_maddpg(const config::ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& run_dir,
                          const agents::MaddpgPopulation* warm_start = nullptr);

TrainOutcome train_dqn(const config::ExperimentConfig& cfg, std::uint64_t seed,
                       const std::string& run_dir);

/// All configured seeds, fanned out across threads (each seed owns its env,
/// buffer and files). Results are ordered like cfg.training.seeds.
std::vector<TrainOutcome> train_all(const config::ExperimentConfig& cfg,
                                    const std::string& run_dir,
                                    const agents::MaddpgPopulation* warm_start = nullptr);

struct EvalOutcome {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<double> episode_rewards;
    double reward_mean = 0.0;
    double reward_std = 0.0; // population std over episodes
    double delay_mean_s = 0.0;
    double energy_mean_j = 0.0;
    env::AuditCounters audit;
};

/// Greedy rollout for `episodes` episodes. When metrics_path is non-empty
/// the full monitoring stream (ticks + rewards) is exported there.
EvalOutcome evaluate(const config::ExperimentConfig& cfg, const Policy& policy,
                     const std::string& policy_name, std::uint64_t seed, int episodes,
                     const std::string& metrics_path = "");

metrics::RunSummary to_run_summary(const EvalOutcome& e);

/// Creates dir (and metrics/, checkpoints/ under it), writes the resolved
/// config snapshot and a manifest carrying the tool version, the command,
/// the seed list and the curve tag. Fails loud if dir already contains a
/// manifest.
std::string prepare_run_dir(const config::ExperimentConfig& cfg, const std::string& dir,
                            const std::string& command, const std::string& curve_tag);

} // namespace slicesim::trainer
