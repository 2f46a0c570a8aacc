#include "slicesim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "slicesim/errors.hpp"

namespace slicesim::metrics {

Format format_from_string(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "jsonl" || s == "json-lines") return Format::JsonLines;
    throw ConfigError("unknown metrics format: " + s + " (expected csv or json-lines)");
}

const char* to_string(Format f) { return f == Format::Csv ? "csv" : "json-lines"; }

void Recorder::record_tick(const env::TickSnapshot& snap, const model::Topology& topology) {
    for (std::size_t n = 0; n < topology.nodes.size(); ++n) {
        MetricRecord r;
        r.time_s = snap.time_s;
        r.node_id = topology.nodes[n].id;
        r.cpu_util = snap.node_util[n];
        r.power_w = snap.node_power_w[n];
        records_.push_back(std::move(r));
    }
    for (std::size_t l = 0; l < topology.links.size(); ++l) {
        MetricRecord r;
        r.time_s = snap.time_s;
        r.link_id = topology.links[l].id;
        r.tx_gbps = snap.link_tx_gbps[l];
        r.rx_gbps = snap.link_rx_gbps[l];
        records_.push_back(std::move(r));
    }
}

void Recorder::record_reward(const env::MaterializedReward& m) {
    MetricRecord head;
    head.time_s = m.time_s;
    head.reward = m.reward;
    head.episode = m.episode;
    head.step = m.step;
    records_.push_back(std::move(head));
    for (std::size_t s = 0; s < m.slice_delay_s.size(); ++s) {
        if (std::isnan(m.slice_delay_s[s])) continue; // slice had no tasks
        MetricRecord r;
        r.time_s = m.time_s;
        r.slice_id = static_cast<int>(s);
        r.L_s = m.slice_delay_s[s];
        r.E_s = m.slice_energy_j[s];
        r.episode = m.episode;
        r.step = m.step;
        records_.push_back(std::move(r));
    }
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string cell(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }
std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }
std::string cell(const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : std::string();
}
std::string cell(const std::optional<std::string>& v) { return v ? *v : std::string(); }

} // namespace

std::string to_csv_row(const MetricRecord& r) {
    std::ostringstream os;
    os << fmt_double(r.time_s) << ',' << cell(r.node_id) << ',' << cell(r.cpu_util) << ','
       << cell(r.power_w) << ',' << cell(r.link_id) << ',' << cell(r.tx_gbps) << ','
       << cell(r.rx_gbps) << ',' << cell(r.slice_id) << ',' << cell(r.L_s) << ','
       << cell(r.E_s) << ',' << cell(r.reward) << ',' << cell(r.episode) << ','
       << cell(r.step);
    return os.str();
}

std::string to_json_line(const MetricRecord& r) {
    nlohmann::json j;
    j["time_s"] = r.time_s;
    if (r.node_id) j["node_id"] = *r.node_id;
    if (r.cpu_util) j["cpu_util"] = *r.cpu_util;
    if (r.power_w) j["power_w"] = *r.power_w;
    if (r.link_id) j["link_id"] = *r.link_id;
    if (r.tx_gbps) j["tx_gbps"] = *r.tx_gbps;
    if (r.rx_gbps) j["rx_gbps"] = *r.rx_gbps;
    if (r.slice_id) j["slice_id"] = *r.slice_id;
    if (r.L_s) j["L_s"] = *r.L_s;
    if (r.E_s) j["E_s"] = *r.E_s;
    if (r.reward) j["reward"] = *r.reward;
    if (r.episode) j["episode"] = *r.episode;
    if (r.step) j["step"] = *r.step;
    return j.dump();
}

Writer::Writer(const std::string& path, Format format) : format_(format), path_(path) {
    out_.open(path);
    if (!out_) throw IoError("cannot open metrics file for writing: " + path);
    if (format_ == Format::Csv) out_ << kCsvHeader << "\n";
}

void Writer::write(const MetricRecord& r) {
    out_ << (format_ == Format::Csv ? to_csv_row(r) : to_json_line(r)) << "\n";
    if (!out_) throw IoError("failed writing metrics file: " + path_);
}

void Writer::flush() { out_.flush(); }

void export_records(const std::vector<MetricRecord>& records, const std::string& path,
                    Format format) {
    Writer w(path, format);
    for (const MetricRecord& r : records) w.write(r);
    w.flush();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, int row) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ": bad number '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& s, int row) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ": bad integer '" + s + "'");
    }
}

MetricRecord from_csv_row(const std::string& line, int row) {
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 13)
        throw ParseError("row " + std::to_string(row) + ": expected 13 columns, got " +
                         std::to_string(f.size()));
    MetricRecord r;
    r.time_s = parse_double(f[0], row);
    if (!f[1].empty()) r.node_id = f[1];
    if (!f[2].empty()) r.cpu_util = parse_double(f[2], row);
    if (!f[3].empty()) r.power_w = parse_double(f[3], row);
    if (!f[4].empty()) r.link_id = f[4];
    if (!f[5].empty()) r.tx_gbps = parse_double(f[5], row);
    if (!f[6].empty()) r.rx_gbps = parse_double(f[6], row);
    if (!f[7].empty()) r.slice_id = static_cast<int>(parse_int(f[7], row));
    if (!f[8].empty()) r.L_s = parse_double(f[8], row);
    if (!f[9].empty()) r.E_s = parse_double(f[9], row);
    if (!f[10].empty()) r.reward = parse_double(f[10], row);
    if (!f[11].empty()) r.episode = parse_int(f[11], row);
    if (!f[12].empty()) r.step = parse_int(f[12], row);
    return r;
}

MetricRecord from_json_line(const std::string& line, int row) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(row) + ": " + e.what());
    }
    MetricRecord r;
    bool have_time = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "time_s") {
            r.time_s = value.get<double>();
            have_time = true;
        } else if (key == "node_id") {
            r.node_id = value.get<std::string>();
        } else if (key == "cpu_util") {
            r.cpu_util = value.get<double>();
        } else if (key == "power_w") {
            r.power_w = value.get<double>();
        } else if (key == "link_id") {
            r.link_id = value.get<std::string>();
        } else if (key == "tx_gbps") {
            r.tx_gbps = value.get<double>();
        } else if (key == "rx_gbps") {
            r.rx_gbps = value.get<double>();
        } else if (key == "slice_id") {
            r.slice_id = value.get<int>();
        } else if (key == "L_s") {
            r.L_s = value.get<double>();
        } else if (key == "E_s") {
            r.E_s = value.get<double>();
        } else if (key == "reward") {
            r.reward = value.get<double>();
        } else if (key == "episode") {
            r.episode = value.get<std::int64_t>();
        } else if (key == "step") {
            r.step = value.get<std::int64_t>();
        } else {
            throw ParseError("line " + std::to_string(row) + ": unknown field '" + key + "'");
        }
    }
    if (!have_time) throw ParseError("line " + std::to_string(row) + ": missing time_s");
    return r;
}

} // namespace

std::vector<MetricRecord> import_records(const std::string& path, Format format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file: " + path);
    std::vector<MetricRecord> out;
    std::string line;
    int row = 0;
    if (format == Format::Csv) {
        if (!std::getline(in, line) || line != kCsvHeader)
            throw ParseError("metrics file " + path + " does not start with the v1 header");
        ++row;
    }
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        out.push_back(format == Format::Csv ? from_csv_row(line, row)
                                            : from_json_line(line, row));
    }
    return out;
}

RunSummary summarize_run(const std::vector<MetricRecord>& records, const std::string& policy,
                         std::uint64_t seed) {
    RunSummary s;
    s.policy = policy;
    s.seed = seed;
    std::map<std::int64_t, std::pair<double, int>> per_episode;
    double delay_sum = 0.0, energy_sum = 0.0;
    int delay_n = 0, energy_n = 0;
    for (const MetricRecord& r : records) {
        if (r.reward && r.episode) {
            auto& [sum, n] = per_episode[*r.episode];
            sum += *r.reward;
            ++n;
        }
        if (r.L_s) {
            delay_sum += *r.L_s;
            ++delay_n;
        }
        if (r.E_s) {
            energy_sum += *r.E_s;
            ++energy_n;
        }
    }
    for (const auto& [episode, agg] : per_episode)
        s.episode_rewards.push_back(agg.first / agg.second);
    s.delay_mean_s = delay_n > 0 ? delay_sum / delay_n : 0.0;
    s.energy_mean_j = energy_n > 0 ? energy_sum / energy_n : 0.0;
    return s;
}

std::vector<PolicySummary> summarize(const std::vector<RunSummary>& runs) {
    std::vector<PolicySummary> out;
    auto find = [&out](const std::string& policy) -> PolicySummary* {
        for (PolicySummary& p : out)
            if (p.policy == policy) return &p;
        return nullptr;
    };
    // first pass: per-run reward means grouped by policy
    std::vector<std::vector<double>> run_means;
    std::vector<std::vector<const RunSummary*>> grouped;
    for (const RunSummary& r : runs) {
        PolicySummary* p = find(r.policy);
        if (!p) {
            out.push_back(PolicySummary{r.policy});
            run_means.emplace_back();
            grouped.emplace_back();
            p = &out.back();
        }
        std::size_t gi = static_cast<std::size_t>(p - out.data());
        double mean = 0.0;
        for (double v : r.episode_rewards) mean += v;
        if (!r.episode_rewards.empty()) mean /= static_cast<double>(r.episode_rewards.size());
        run_means[gi].push_back(mean);
        grouped[gi].push_back(&r);
    }
    for (std::size_t gi = 0; gi < out.size(); ++gi) {
        PolicySummary& p = out[gi];
        p.runs = static_cast<int>(run_means[gi].size());
        double m = 0.0;
        for (double v : run_means[gi]) m += v;
        m /= static_cast<double>(p.runs);
        double var = 0.0;
        for (double v : run_means[gi]) var += (v - m) * (v - m);
        var /= static_cast<double>(p.runs); // population variance: one run -> zero
        p.reward_mean = m;
        p.reward_std = std::sqrt(var);
        double d = 0.0, e = 0.0;
        for (const RunSummary* r : grouped[gi]) {
            d += r->delay_mean_s;
            e += r->energy_mean_j;
        }
        p.delay_mean_s = d / static_cast<double>(p.runs);
        p.energy_mean_j = e / static_cast<double>(p.runs);
    }
    return out;
}

} // namespace slicesim::metrics
