#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "slicesim/env.hpp"
#include "slicesim/model.hpp"

namespace slicesim::metrics {

/// One monitoring row. Exactly one of the three field groups is populated:
/// a node sample (node_id, cpu_util, power_w), a link sample (link_id,
/// tx_gbps, rx_gbps), or a reward/slice row (slice_id and/or reward with
/// episode, step). Absent fields export as empty CSV cells / omitted JSON
/// keys.
struct MetricRecord {
    double time_s = 0.0;
    std::optional<std::string> node_id;
    std::optional<double> cpu_util;
    std::optional<double> power_w;
    std::optional<std::string> link_id;
    std::optional<double> tx_gbps;
    std::optional<double> rx_gbps;
    std::optional<int> slice_id;
    std::optional<double> L_s;
    std::optional<double> E_s;
    std::optional<double> reward;
    std::optional<std::int64_t> episode;
    std::optional<std::int64_t> step;

    bool operator==(const MetricRecord&) const = default;
};

/// Schema v1. The header line doubles as the version stamp: imports reject
/// any file whose header differs.
inline constexpr const char* kCsvHeader =
    "time_s,node_id,cpu_util,power_w,link_id,tx_gbps,rx_gbps,slice_id,L_s,E_s,reward,episode,"
    "step";

enum class Format { Csv, JsonLines };

Format format_from_string(const std::string& s);
const char* to_string(Format f);

/// In-memory collector. Tick expansion: one row per node then one per link,
/// id order. Reward expansion: one reward row, then one row per slice that
/// had tasks, ascending.
class Recorder {
public:
    void append(MetricRecord r) { records_.push_back(std::move(r)); }
    void record_tick(const env::TickSnapshot& snap, const model::Topology& topology);
    void record_reward(const env::MaterializedReward& m);

    const std::vector<MetricRecord>& records() const { return records_; }
    void clear() { records_.clear(); }

private:
    std::vector<MetricRecord> records_;
};

/// Append-only file sink for incremental curves; the header (CSV) is
/// written on open.
class Writer {
public:
    Writer(const std::string& path, Format format);
    void write(const MetricRecord& r);
    void flush();

private:
    std::ofstream out_;
    Format format_;
    std::string path_;
};

void export_records(const std::vector<MetricRecord>& records, const std::string& path,
                    Format format);
std::vector<MetricRecord> import_records(const std::string& path, Format format);

std::string to_csv_row(const MetricRecord& r);
std::string to_json_line(const MetricRecord& r);

/// Per-run aggregates consumed by summarize().
struct RunSummary {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<double> episode_rewards; // mean materialized reward per episode
    double delay_mean_s = 0.0;           // mean over slice L_s samples
    double energy_mean_j = 0.0;          // mean over slice E_s samples
};

/// Build a RunSummary from recorded rows (reward rows keyed by episode).
RunSummary summarize_run(const std::vector<MetricRecord>& records, const std::string& policy,
                         std::uint64_t seed);

struct PolicySummary {
    std::string policy;
    int runs = 0;
    double reward_mean = 0.0;
    double reward_std = 0.0; // population std over per-run means
    double delay_mean_s = 0.0;
    double energy_mean_j = 0.0;
};

/// Group runs by policy, first-appearance order.
std::vector<PolicySummary> summarize(const std::vector<RunSummary>& runs);

} // namespace slicesim::metrics
