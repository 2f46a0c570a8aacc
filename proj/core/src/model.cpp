#include "slicesim/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace slicesim::model {

PowerCurve::PowerCurve(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw ConfigError("power curve needs at least two points");
    if (points_.front().first != 0.0) throw ConfigError("power curve must start at utilization 0");
    if (points_.back().first != 1.0) throw ConfigError("power curve must end at utilization 1");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (points_[i].first <= points_[i - 1].first)
            throw ConfigError("power curve utilization must be strictly increasing");
        if (points_[i].second < points_[i - 1].second)
            throw ConfigError("power curve power must be non-decreasing");
    }
    for (const auto& [u, p] : points_) {
        if (!std::isfinite(u) || !std::isfinite(p) || p < 0.0)
            throw ConfigError("power curve values must be finite and non-negative");
    }
}

PowerCurve PowerCurve::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open power curve file: " + path);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double u, p;
        if (!(row >> u >> p)) {
            if (lineno == 1) continue; // header row
            throw ParseError("power curve " + path + ": malformed row " + std::to_string(lineno));
        }
        pts.emplace_back(u, p);
    }
    try {
        return PowerCurve(std::move(pts));
    } catch (const ConfigError& e) {
        throw ParseError("power curve " + path + ": " + e.what());
    }
}

double PowerCurve::at(double utilization) const {
    if (utilization < 0.0 || utilization > 1.0)
        throw OutOfRangeError("utilization " + std::to_string(utilization) + " outside [0,1]");
    auto it = std::lower_bound(points_.begin(), points_.end(), utilization,
                               [](const auto& pt, double u) { return pt.first < u; });
    if (it == points_.begin()) return it->second;
    const auto& [u1, p1] = *it;
    const auto& [u0, p0] = *(it - 1);
    double w = (utilization - u0) / (u1 - u0);
    return p0 + w * (p1 - p0);
}

int Topology::node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

int Topology::link_index(const std::string& id) const {
    for (std::size_t i = 0; i < links.size(); ++i)
        if (links[i].id == id) return static_cast<int>(i);
    return -1;
}

void Topology::validate() const {
    if (nodes.empty()) throw ConfigError("topology has no nodes");
    for (const auto& n : nodes) {
        if (n.cpu_cores < 1) throw ConfigError("node " + n.id + ": cpu_cores must be >= 1");
    }
    for (const auto& l : links) {
        if (l.capacity_gbps <= 0.0) throw ConfigError("link " + l.id + ": capacity must be > 0");
        if (l.endpoint_a == l.endpoint_b) throw ConfigError("link " + l.id + ": endpoints must differ");
        if (node_index(l.endpoint_a) < 0 || node_index(l.endpoint_b) < 0)
            throw ConfigError("link " + l.id + ": unknown endpoint");
    }
    if (nodes.size() > 1) {
        // union-find connectivity over links
        std::vector<int> parent(nodes.size());
        for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (const auto& l : links) {
            int a = find(node_index(l.endpoint_a));
            int b = find(node_index(l.endpoint_b));
            if (a != b) parent[a] = b;
        }
        int root = find(0);
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (find(static_cast<int>(i)) != root) throw ConfigError("topology is not connected");
    }
}

Topology Topology::default_three_site() {
    Topology t;
    t.nodes = {NodeSpec{"site-a", 4, PowerCurve{}}, NodeSpec{"site-b", 4, PowerCurve{}},
               NodeSpec{"site-c", 4, PowerCurve{}}};
    t.links = {LinkSpec{"ab", "site-a", "site-b", 10.0}, LinkSpec{"bc", "site-b", "site-c", 10.0},
               LinkSpec{"ca", "site-c", "site-a", 10.0}};
    return t;
}

double power(const NodeSpec& node, double utilization) { return node.power_curve.at(utilization); }

double task_delay(const Task& task, double cpu_alloc_cores, double bw_alloc_gbps) {
    if (cpu_alloc_cores <= 0.0)
        throw ZeroAllocationError("task " + std::to_string(task.id) + ": zero cpu allocation");
    double d = task.cpu_work / cpu_alloc_cores;
    if (task.data_volume > 0.0) {
        if (bw_alloc_gbps <= 0.0)
            throw ZeroAllocationError("task " + std::to_string(task.id) + ": zero bandwidth allocation");
        d += task.data_volume / bw_alloc_gbps;
    }
    return d;
}

double attribute_energy(const NodeSpec& node, double interval_s, double total_util,
                        double slice_util, int active_slices) {
    if (slice_util < 0.0 || total_util > 1.0 || slice_util > total_util)
        throw OutOfRangeError("attribute_energy: need 0 <= slice_util <= total_util <= 1");
    if (active_slices < 1) throw OutOfRangeError("attribute_energy: active_slices must be >= 1");
    double p_idle = node.power_curve.idle_power();
    double share = p_idle / active_slices;
    if (total_util > 0.0) {
        share += (power(node, total_util) - p_idle) * (slice_util / total_util);
    }
    return interval_s * share;
}

Minima minima(const Task& task, const Topology& topology) {
    const auto& node = topology.nodes.at(task.node_index);
    double bw = task.data_volume > 0.0 ? topology.links.at(task.link_index).capacity_gbps : 1.0;
    Minima m;
    m.delay_s = task_delay(task, static_cast<double>(node.cpu_cores), bw);
    m.energy_j = attribute_energy(node, m.delay_s, task.demand_fraction, task.demand_fraction, 1);
    return m;
}

} // namespace slicesim::model
