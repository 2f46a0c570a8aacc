#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slicesim/errors.hpp"

namespace slicesim::model {

/// Measured utilization -> power mapping for one server, evaluated by
/// piecewise-linear interpolation. Points must start at u=0 (idle power),
/// end at u=1 (peak power), with strictly increasing utilization and
/// non-decreasing power.
class PowerCurve {
public:
    PowerCurve() = default;
    explicit PowerCurve(std::vector<std::pair<double, double>> points);

    /// Two-column CSV (utilization,power); a non-numeric first row is
    /// treated as a header.
    static PowerCurve from_csv(const std::string& path);

    double idle_power() const { return points_.front().second; }
    double peak_power() const { return points_.back().second; }
    const std::vector<std::pair<double, double>>& points() const { return points_; }

    /// Interpolated power draw at the given utilization in [0,1].
    double at(double utilization) const;

private:
    std::vector<std::pair<double, double>> points_{{0.0, 100.0}, {1.0, 200.0}};
};

struct NodeSpec {
    std::string id;
    int cpu_cores = 4;
    PowerCurve power_curve;
};

struct LinkSpec {
    std::string id;
    std::string endpoint_a;
    std::string endpoint_b;
    double capacity_gbps = 10.0;
};

struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;

    int node_index(const std::string& id) const;
    int link_index(const std::string& id) const;

    /// Throws ConfigError unless nodes are non-empty, links reference known
    /// distinct endpoints with positive capacity, and the graph is connected.
    void validate() const;

    /// The testbed layout: three 4-core nodes joined by 10 Gbps links.
    static Topology default_three_site();
};

/// One unit of slice work: a CPU phase followed by a transmission phase.
struct Task {
    std::uint64_t id = 0;
    int slice_id = 0;
    int node_index = 0;
    int link_index = 0;
    double arrival_s = 0.0;
    double cpu_work = 0.0;     // core-seconds
    double data_volume = 0.0;  // gigabits
    double demand_fraction = 0.0;
};

double power(const NodeSpec& node, double utilization);

/// Service time under a fixed allocation: cpu_work/cpu_alloc plus
/// data_volume/bw_alloc. Allocations are absolute (cores, Gbps).
double task_delay(const Task& task, double cpu_alloc_cores, double bw_alloc_gbps);

/// Slice share of a node's energy over an interval: an equal split of idle
/// power among the active slices plus dynamic power in proportion to the
/// slice's share of total utilization. Summing shares over active slices
/// reproduces interval * P(total_util) exactly.
double attribute_energy(const NodeSpec& node, double interval_s, double total_util,
                        double slice_util, int active_slices);

struct Minima {
    double delay_s = 0.0;    // L_m
    double energy_j = 0.0;   // E_m
};

/// Per-task normalizers: the delay with the whole node and link to itself,
/// and the energy of a sole occupant running at its demand fraction for
/// that minimal delay.
Minima minima(const Task& task, const Topology& topology);

} // namespace slicesim::model
