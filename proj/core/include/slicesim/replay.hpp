#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

namespace slicesim::replay {

enum class Status { Frozen, Thawed };

/// One experience tuple. While Frozen the reward field is meaningless and
/// the record is invisible to sampling.
struct Transition {
    std::uint64_t step_id = 0;
    std::vector<double> observation;
    std::vector<double> joint_action;
    double reward = 0.0;
    std::vector<double> next_observation;
    bool done = false;
    Status status = Status::Frozen;
    double created_s = 0.0; // sim time the transition was pushed
    double thawed_s = 0.0;  // sim time the reward materialized
};

struct ReplayConfig {
    std::size_t capacity = 50000;        // thawed ring bound
    std::size_t frozen_capacity = 4096;  // frozen index bound
    void validate() const;
};

/// Replay store with delayed-reward semantics: transitions arrive without a
/// reward, sit frozen until thaw() attaches one, and only then join the
/// sampleable ring. Capacity pressure evicts the oldest-thawed entry; the
/// frozen index is exempt but has its own cap, and entries squeezed out of
/// it are counted as stale.
class DelayedReplayBuffer {
public:
    explicit DelayedReplayBuffer(ReplayConfig cfg = {});

    /// Inserts a reward-less transition keyed by its step_id.
    std::uint64_t push_frozen(Transition t, double now_s);

    /// Attaches the materialized reward and moves the record to the ring.
    void thaw(std::uint64_t handle, double reward, double now_s);

    /// Uniform sample without replacement from the thawed ring.
    std::vector<Transition> sample(std::size_t batch, sim::SeededRng& rng) const;

    /// Drops frozen entries created strictly before the cutoff. Returns how
    /// many were dropped; they are added to the stale counter.
    std::size_t expire_frozen(double created_before_s);

    std::size_t frozen_count() const { return frozen_.size(); }
    std::size_t thawed_count() const { return ring_.size(); }
    std::uint64_t stale_frozen() const { return stale_frozen_; }
    const ReplayConfig& config() const { return cfg_; }

    /// Debug dump, one JSON record per transition (frozen entries first in
    /// creation order, then the ring in thaw order).
    void dump(const std::string& path) const;

private:
    ReplayConfig cfg_;
    std::unordered_map<std::uint64_t, Transition> frozen_;
    std::deque<std::uint64_t> frozen_order_; // creation order; may hold thawed ids
    std::deque<Transition> ring_;            // thaw order, front = oldest
    std::unordered_set<std::uint64_t> seen_ids_;
    std::uint64_t stale_frozen_ = 0;

    void drop_oldest_frozen();
};

} // namespace slicesim::replay
