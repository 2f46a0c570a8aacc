#include "slicesim/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace slicesim::workload {

void WorkloadConfig::validate() const {
    if (!(demand_low > 0.0 && demand_low <= demand_high && demand_high <= 1.0))
        throw ConfigError("workload: need 0 < demand_low <= demand_high <= 1");
    if (arrival_rate <= 0.0) throw ConfigError("workload: arrival_rate must be > 0");
    if (work_scale <= 0.0 || volume_scale < 0.0)
        throw ConfigError("workload: work_scale must be > 0 and volume_scale >= 0");
}

Generator::Generator(int slice_id, int node_index, int link_index, const WorkloadConfig& cfg,
                     sim::SeededRng rng)
    : slice_id_(slice_id), node_index_(node_index), link_index_(link_index), cfg_(cfg),
      rng_(rng), next_task_id_(1) {
    cfg_.validate();
}

model::Task Generator::next_task(const model::Topology& topology, double now) {
    double gap = rng_.exponential(cfg_.arrival_rate);
    double r = rng_.uniform(cfg_.demand_low, cfg_.demand_high);
    const auto& node = topology.nodes.at(node_index_);
    const auto& link = topology.links.at(link_index_);
    model::Task t;
    t.id = (static_cast<std::uint64_t>(slice_id_) << 40) | next_task_id_++;
    t.slice_id = slice_id_;
    t.node_index = node_index_;
    t.link_index = link_index_;
    t.arrival_s = now + gap;
    t.demand_fraction = r;
    t.cpu_work = r * node.cpu_cores * cfg_.work_scale;
    t.data_volume = r * link.capacity_gbps * cfg_.volume_scale;
    return t;
}

static const char* kTraceHeader = "arrival_s,slice_id,demand_fraction,cpu_work,data_volume";

std::vector<model::Task> replay_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    std::vector<model::Task> tasks;
    std::string line;
    int lineno = 0;
    std::uint64_t id = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("arrival_s", 0) == 0) continue;
        std::string cleaned = line;
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::istringstream row(cleaned);
        model::Task t;
        if (!(row >> t.arrival_s >> t.slice_id >> t.demand_fraction >> t.cpu_work >> t.data_volume) ||
            t.arrival_s < 0.0 || t.cpu_work <= 0.0 || t.data_volume < 0.0) {
            throw ParseError("trace " + path + ": malformed row " + std::to_string(lineno));
        }
        t.id = id++;
        tasks.push_back(t);
    }
    if (!std::is_sorted(tasks.begin(), tasks.end(),
                        [](const auto& a, const auto& b) { return a.arrival_s < b.arrival_s; }))
        throw ParseError("trace " + path + ": rows must be sorted by arrival time");
    return tasks;
}

void write_trace(const std::string& path, const std::vector<model::Task>& tasks) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file: " + path);
    out << kTraceHeader << "\n";
    out.precision(17);
    for (const auto& t : tasks) {
        out << t.arrival_s << ',' << t.slice_id << ',' << t.demand_fraction << ',' << t.cpu_work
            << ',' << t.data_volume << "\n";
    }
    if (!out) throw IoError("failed writing trace file: " + path);
}

} // namespace slicesim::workload
