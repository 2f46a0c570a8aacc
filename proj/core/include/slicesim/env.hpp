#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "slicesim/model.hpp"
#include "slicesim/rng.hpp"
#include "slicesim/sim.hpp"
#include "slicesim/workload.hpp"

namespace slicesim::env {

struct RewardWeights {
    double alpha = 0.5;
    double beta = 0.5;

    /// alpha + beta must equal 1 exactly, both non-negative.
    void validate() const;
};

struct SlicePlacement {
    std::string node_id;
    std::string link_id;
};

struct EnvConfig {
    model::Topology topology = model::Topology::default_three_site();
    std::vector<SlicePlacement> slices;
    workload::WorkloadConfig workload;
    RewardWeights weights;
    double epoch_s = 1.0;      // decision cadence
    int horizon = 200;         // epochs per episode
    double tick_interval_s = 1.0;
    std::string trace_path;    // non-empty: replay this trace instead of generating

    void validate() const;
};

/// Per-slice resource fractions; the joint action across all agents.
struct JointAction {
    std::vector<double> cpu_fraction;
    std::vector<double> bw_fraction;

    /// Flat layout groups by slice: [cpu_0, bw_0, cpu_1, bw_1, ...], so one
    /// agent's action occupies one contiguous pair.
    std::vector<double> flat() const;
    static JointAction from_flat(std::span<const double> v);
};

/// Clip every component to [0,1], then rescale each node's (and link's)
/// components by 1/sum wherever the sum exceeds 1. The result satisfies the
/// capacity constraints exactly; feasible input passes through unchanged.
JointAction project_action(const JointAction& raw, const std::vector<int>& slice_node,
                           const std::vector<int>& slice_link, int node_count, int link_count);

/// (1/S) * sum_s (alpha * L_m/L_s + beta * E_m/E_s). Preconditions: every
/// realized value at or above its minimum (DomainError otherwise, small
/// rounding slack excepted), all minima positive.
double compute_reward(const std::vector<double>& delay_s, const std::vector<double>& energy_j,
                      const std::vector<model::Minima>& minima, const RewardWeights& w);

/// Observation vector layout. Slice blocks come first so that growing or
/// shrinking the slice count is column-local (see the transfer surgery):
///   [5 fields per slice] [node utils] [link utils] [epoch phase]
/// Slice fields: queued cpu (normalized), queued volume (normalized),
/// cpu allocation fraction, bw allocation fraction, last demand fraction.
struct ObsLayout {
    int slices = 0;
    int nodes = 0;
    int links = 0;

    static constexpr int kSliceFields = 5;

    int global_width() const { return kSliceFields * slices + nodes + links + 1; }
    static constexpr int local_width() { return kSliceFields + 3; }

    int slice_offset(int s) const { return kSliceFields * s; }
    int node_offset(int n) const { return kSliceFields * slices + n; }
    int link_offset(int l) const { return kSliceFields * slices + nodes + l; }
    int phase_offset() const { return kSliceFields * slices + nodes + links; }

    /// Agent s sees its own slice block, its node and link utilization and
    /// the epoch phase. Width is fixed regardless of the slice count, which
    /// is what lets trained actors survive slice-count changes verbatim.
    std::vector<double> local_view(std::span<const double> global, int s, int node_index,
                                   int link_index) const;
};

struct TickSnapshot {
    double time_s = 0.0;
    std::vector<double> node_util;
    std::vector<double> node_power_w;
    std::vector<double> link_tx_gbps;
    std::vector<double> link_rx_gbps;
};

struct MaterializedReward {
    std::uint64_t step_id = 0;
    std::int64_t episode = 0;
    std::int64_t step = 0;
    double step_end_s = 0.0;
    double time_s = 0.0;   // materialization instant, >= step_end_s
    double reward = 0.0;
    std::vector<double> slice_delay_s;   // NaN where the slice had no tasks
    std::vector<double> slice_energy_j;  // NaN where the slice had no tasks
};

struct StepResult {
    std::vector<double> observation;
    JointAction applied;     // post-projection, as executed
    std::uint64_t step_id = 0;
    bool done = false;
};

struct AuditCounters {
    std::uint64_t capacity_violations = 0; // instants with node/link over capacity
    double energy_max_rel_err = 0.0;       // attribution vs power integral
    std::uint64_t rewards_materialized = 0;
    std::uint64_t reward_bound_violations = 0; // materialized outside (0, 1]
};

/// The slicing MDP. One decision epoch per step: allocations applied at the
/// epoch start take effect immediately, the discrete-event core advances one
/// epoch, and a PendingReward tracking every task active during the epoch is
/// registered. Rewards materialize only when all tracked tasks complete,
/// possibly several epochs later; completed rewards are collected through
/// drain_materialized().
class SliceEnv {
public:
    SliceEnv(EnvConfig cfg, std::uint64_t seed);
    ~SliceEnv();
    SliceEnv(const SliceEnv&) = delete;
    SliceEnv& operator=(const SliceEnv&) = delete;

    /// Starts a fresh episode: clock 0, empty queues, zero allocations.
    /// Each reset draws a new workload realization; the sequence of
    /// realizations is a pure function of (seed, episode index).
    std::vector<double> reset();

    StepResult step(const JointAction& action);

    /// Rewards materialized since the last drain, in materialization order.
    std::vector<MaterializedReward> drain_materialized();

    /// After the horizon: stop arrivals and drain every in-flight task under
    /// full allocation so all pending rewards materialize.
    void flush_episode();

    const ObsLayout& layout() const { return layout_; }
    const EnvConfig& config() const { return cfg_; }
    const std::vector<int>& slice_node() const { return slice_node_; }
    const std::vector<int>& slice_link() const { return slice_link_; }

    double now() const;
    std::int64_t episode() const { return episode_; }
    std::int64_t step_index() const { return step_index_; }

    /// Pendings not yet materialized (the frozen set from the env's view).
    std::size_t open_pending_count() const;
    /// Open-task count for one pending, or -1 if it is not open.
    int pending_open_tasks(std::uint64_t step_id) const;

    std::size_t in_flight_tasks(int slice) const;

    const AuditCounters& audit() const { return audit_; }

    /// Called at every monitor tick with the instantaneous state.
    std::function<void(const TickSnapshot&)> on_tick;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;

    EnvConfig cfg_;
    std::uint64_t seed_ = 0;
    ObsLayout layout_;
    std::vector<int> slice_node_;
    std::vector<int> slice_link_;
    std::int64_t episode_ = -1;
    std::int64_t step_index_ = 0;
    AuditCounters audit_;
};

} // namespace slicesim::env
