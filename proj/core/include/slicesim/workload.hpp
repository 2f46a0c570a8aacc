#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slicesim/model.hpp"
#include "slicesim/rng.hpp"

namespace slicesim::workload {

struct WorkloadConfig {
    double arrival_rate = 0.5;   // tasks/second per slice
    double demand_low = 0.27;
    double demand_high = 0.33;
    double work_scale = 1.0;     // core-seconds per (demand * node cores)
    double volume_scale = 1.0;   // gigabits per (demand * link capacity)

    void validate() const;
};

/// Poisson task source for one slice. Demand fractions are uniform on the
/// configured band and map linearly onto cpu work and data volume, so a
/// task asks for the same fraction of both resource axes.
class Generator {
public:
    Generator(int slice_id, int node_index, int link_index, const WorkloadConfig& cfg,
              sim::SeededRng rng);

    /// Produce the next task; arrival = now + Exp(arrival_rate).
    model::Task next_task(const model::Topology& topology, double now);

    int slice_id() const { return slice_id_; }

private:
    int slice_id_;
    int node_index_;
    int link_index_;
    WorkloadConfig cfg_;
    sim::SeededRng rng_;
    std::uint64_t next_task_id_;
};

/// Trace files are CSV with header
///   arrival_s,slice_id,demand_fraction,cpu_work,data_volume
/// and one task per row, sorted by arrival time.
std::vector<model::Task> replay_trace(const std::string& path);

void write_trace(const std::string& path, const std::vector<model::Task>& tasks);

} // namespace slicesim::workload
