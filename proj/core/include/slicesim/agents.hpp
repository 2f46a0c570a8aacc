#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicesim/env.hpp"
#include "slicesim/nn.hpp"
#include "slicesim/replay.hpp"

namespace slicesim::agents {

struct MaddpgHyper {
    std::vector<int> actor_hidden = {64, 64};
    std::vector<int> critic_hidden = {64, 64};
    double gamma = 0.95;
    double tau = 0.01;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double noise_sigma = 0.2;       // initial exploration scale
    double noise_sigma_final = 0.02;

    void validate() const;
};

/// Actor/critic pair for one slice agent, with target copies and optimizer
/// state. The actor maps the 8-wide local observation to two resource
/// fractions (tanh output, affinely rescaled to [0,1]); the centralized
/// critic scores the global observation concatenated with every agent's
/// action pair.
struct AgentBundle {
    int slice_id = 0;
    nn::MlpSpec actor_spec;
    nn::MlpSpec critic_spec;
    nn::ParamSet actor;
    nn::ParamSet critic;
    nn::ParamSet target_actor;
    nn::ParamSet target_critic;
    nn::AdamState actor_opt;
    nn::AdamState critic_opt;
    double sigma = 0.2;
};

struct UpdateReport {
    std::vector<double> critic_loss; // per agent, squared TD error mean
    std::vector<double> actor_score; // per agent, mean critic value of the actor's action
};

class MaddpgPopulation {
public:
    MaddpgPopulation(const env::ObsLayout& layout, std::vector<int> slice_node,
                     std::vector<int> slice_link, MaddpgHyper hyper, sim::SeededRng& init_rng);

    /// Deterministic actor output for one agent, in [0,1] per component.
    /// With explore set, Gaussian noise of the bundle's sigma is added after
    /// rescaling; the result is left unclipped for the env projection.
    std::pair<double, double> act(int slice, std::span<const double> local_obs, bool explore,
                                  sim::SeededRng& rng) const;

    /// All agents act on their local views of the global observation.
    env::JointAction act_all(std::span<const double> global_obs, bool explore,
                             sim::SeededRng& rng) const;

    /// One MADDPG step on a thawed batch: per agent, critic regression onto
    /// the TD target built from target nets, then a policy-gradient step
    /// through the critic, then soft target updates.
    UpdateReport update(const std::vector<replay::Transition>& batch);

    int slices() const { return static_cast<int>(bundles_.size()); }
    const env::ObsLayout& layout() const { return layout_; }
    const std::vector<int>& slice_node() const { return slice_node_; }
    const std::vector<int>& slice_link() const { return slice_link_; }
    const MaddpgHyper& hyper() const { return hyper_; }
    AgentBundle& bundle(int slice);
    const AgentBundle& bundle(int slice) const;

    void set_sigma(double sigma);

    /// Rebuild a population directly from bundles (used by checkpoint load
    /// and by the slice-count surgery).
    MaddpgPopulation(const env::ObsLayout& layout, std::vector<int> slice_node,
                     std::vector<int> slice_link, MaddpgHyper hyper,
                     std::vector<AgentBundle> bundles);

    static nn::MlpSpec actor_spec(const MaddpgHyper& hyper);
    static nn::MlpSpec critic_spec(const env::ObsLayout& layout, const MaddpgHyper& hyper);

private:
    env::ObsLayout layout_;
    std::vector<int> slice_node_;
    std::vector<int> slice_link_;
    MaddpgHyper hyper_;
    std::vector<AgentBundle> bundles_;
};

struct DqnHyper {
    int grid_levels = 5;
    std::vector<int> hidden = {64, 64};
    double gamma = 0.95;
    double tau = 0.01;
    double lr = 1e-3;
    double epsilon_start = 1.0;
    double epsilon_final = 0.05;

    void validate() const;
};

/// Joint value-based agent over the discretized allocation grid. The grid
/// enumerates levels^(2*slices) joint actions; component k of entry g is
/// digit k of g in base `levels`, most significant first, mapped to
/// k/(levels-1). Flat component order matches JointAction::flat().
class DqnAgent {
public:
    DqnAgent(const env::ObsLayout& layout, std::vector<int> slice_node,
             std::vector<int> slice_link, DqnHyper hyper, sim::SeededRng& init_rng);

    std::size_t grid_size() const { return grid_.size(); }
    const std::vector<double>& grid_action(std::size_t index) const;
    /// Exact inverse of grid_action; OutOfRange if v is not a grid point.
    std::size_t grid_index(std::span<const double> flat_action) const;

    /// Epsilon-greedy over the grid; ties resolve to the lowest index.
    std::size_t act_greedy(std::span<const double> global_obs, double epsilon,
                           sim::SeededRng& rng) const;

    /// TD step: y = r + gamma*(1-done)*max target-Q(s'), squared error on
    /// the taken action's Q, then a soft target update.
    double update(const std::vector<replay::Transition>& batch);

    const env::ObsLayout& layout() const { return layout_; }
    const DqnHyper& hyper() const { return hyper_; }
    const nn::MlpSpec& net_spec() const { return spec_; }
    nn::ParamSet& online() { return online_; }
    const nn::ParamSet& online() const { return online_; }
    nn::ParamSet& target() { return target_; }
    const nn::ParamSet& target() const { return target_; }
    const std::vector<int>& slice_node() const { return slice_node_; }
    const std::vector<int>& slice_link() const { return slice_link_; }

private:
    env::ObsLayout layout_;
    std::vector<int> slice_node_;
    std::vector<int> slice_link_;
    DqnHyper hyper_;
    std::vector<std::vector<double>> grid_;
    nn::MlpSpec spec_;
    nn::ParamSet online_;
    nn::ParamSet target_;
    nn::AdamState opt_;
};

enum class BaselineKind { Random, Full, StaticPortion };

BaselineKind baseline_from_string(const std::string& s);
const char* to_string(BaselineKind k);

/// The comparison policies: uniform random fractions, everything-at-once,
/// and a fixed static split (default 1/S per slice per resource). Outputs
/// are raw; the env projection enforces feasibility.
struct BaselinePolicy {
    BaselineKind kind = BaselineKind::Full;
    std::vector<double> static_cpu; // StaticPortion only; empty = 1/S
    std::vector<double> static_bw;

    env::JointAction act(int slices, sim::SeededRng& rng) const;
};

struct ActionSpaceReport {
    int slices = 0;
    int grid_levels = 0;
    std::uint64_t dqn_grid_size = 0; // levels^(2*slices)
    int maddpg_dims = 0;             // 2*slices
};

/// The discrete/continuous growth comparison. OutOfRange if the grid size
/// does not fit in 64 bits.
ActionSpaceReport action_space_report(int slices, int grid_levels);

/// Checkpoint directory layout: manifest.json plus one network file per
/// (agent, role). The manifest pins slice count, layout and widths so a
/// mismatched load fails loud.
void save_population(const std::string& dir, const MaddpgPopulation& pop);
MaddpgPopulation load_population(const std::string& dir);

void save_dqn(const std::string& dir, const DqnAgent& agent);
DqnAgent load_dqn(const std::string& dir);

/// Reads just the manifest: {algorithm, slices}. Used for mismatch checks.
std::pair<std::string, int> read_manifest(const std::string& dir);

} // namespace slicesim::agents
