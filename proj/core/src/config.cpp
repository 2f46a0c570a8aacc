#include "slicesim/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slicesim/errors.hpp"

namespace slicesim::config {

namespace {

using nlohmann::json;

/// Strict object access: every key must be consumed, missing required keys
/// and leftover keys both fail with the dotted field path.
class ObjReader {
public:
    ObjReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(path_ + ": missing required field '" + key + "'");
        return *it;
    }

    template <typename T>
    T get(const std::string& key) {
        return convert<T>(at(key), key);
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        return convert<T>(*it, key);
    }

    std::string field(const std::string& key) const { return path_ + "." + key; }

    /// Call after all expected keys were read.
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (!seen_.count(key))
                throw ConfigError(path_ + ": unknown field '" + key + "'");
        }
    }

private:
    template <typename T>
    T convert(const json& v, const std::string& key) const {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type (" +
                              std::string(v.type_name()) + ")");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

model::PowerCurve parse_power_curve(const json& v, const std::string& field,
                                    const std::string& base_dir) {
    if (v.is_string()) {
        std::string path = resolve(base_dir, v.get<std::string>());
        if (!std::filesystem::exists(path))
            throw ConfigError(field + ": power curve file not found: " + path);
        return model::PowerCurve::from_csv(path);
    }
    if (v.is_array()) {
        std::vector<std::pair<double, double>> pts;
        for (const json& p : v) {
            if (!p.is_array() || p.size() != 2)
                throw ConfigError(field + ": curve points must be [utilization, power] pairs");
            pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        return model::PowerCurve(std::move(pts));
    }
    throw ConfigError(field + ": expected a CSV path or a point array");
}

model::Topology parse_topology(const json& v, const std::string& base_dir) {
    ObjReader r(v, "topology");
    model::Topology topo;
    topo.nodes.clear();
    topo.links.clear();
    const json& nodes = r.at("nodes");
    if (!nodes.is_array()) throw ConfigError("topology.nodes: expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        ObjReader nr(nodes[i], "topology.nodes[" + std::to_string(i) + "]");
        model::NodeSpec n;
        n.id = nr.get<std::string>("id");
        n.cpu_cores = nr.get_or<int>("cpu_cores", 4);
        if (nr.has("power_curve"))
            n.power_curve = parse_power_curve(nr.at("power_curve"), nr.field("power_curve"),
                                              base_dir);
        nr.finish();
        topo.nodes.push_back(std::move(n));
    }
    const json& links = r.at("links");
    if (!links.is_array()) throw ConfigError("topology.links: expected an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
        ObjReader lr(links[i], "topology.links[" + std::to_string(i) + "]");
        model::LinkSpec l;
        l.id = lr.get<std::string>("id");
        auto eps = lr.get<std::vector<std::string>>("endpoints");
        if (eps.size() != 2)
            throw ConfigError(lr.field("endpoints") + ": expected exactly two node ids");
        l.endpoint_a = eps[0];
        l.endpoint_b = eps[1];
        l.capacity_gbps = lr.get_or<double>("capacity_gbps", 10.0);
        lr.finish();
        topo.links.push_back(std::move(l));
    }
    r.finish();
    return topo;
}

void parse_slices(const json& v, env::EnvConfig& env_cfg) {
    if (!v.is_array() || v.empty())
        throw ConfigError("slices: expected a non-empty array of placements");
    for (std::size_t i = 0; i < v.size(); ++i) {
        ObjReader sr(v[i], "slices[" + std::to_string(i) + "]");
        env::SlicePlacement p;
        p.node_id = sr.get<std::string>("node");
        p.link_id = sr.get<std::string>("link");
        sr.finish();
        env_cfg.slices.push_back(std::move(p));
    }
}

void parse_workload(const json& v, env::EnvConfig& env_cfg, const std::string& base_dir) {
    ObjReader r(v, "workload");
    workload::WorkloadConfig& w = env_cfg.workload;
    w.arrival_rate = r.get_or<double>("arrival_rate", w.arrival_rate);
    w.demand_low = r.get_or<double>("demand_low", w.demand_low);
    w.demand_high = r.get_or<double>("demand_high", w.demand_high);
    w.work_scale = r.get_or<double>("work_scale", w.work_scale);
    w.volume_scale = r.get_or<double>("volume_scale", w.volume_scale);
    if (r.has("trace")) {
        env_cfg.trace_path = resolve(base_dir, r.get<std::string>("trace"));
        if (!std::filesystem::exists(env_cfg.trace_path))
            throw ConfigError("workload.trace: file not found: " + env_cfg.trace_path);
    }
    r.finish();
}

void parse_env_block(const json& v, env::EnvConfig& env_cfg) {
    ObjReader r(v, "env");
    env_cfg.weights.alpha = r.get_or<double>("alpha", env_cfg.weights.alpha);
    env_cfg.weights.beta = r.get_or<double>("beta", env_cfg.weights.beta);
    env_cfg.epoch_s = r.get_or<double>("epoch_s", env_cfg.epoch_s);
    env_cfg.horizon = r.get_or<int>("horizon", env_cfg.horizon);
    env_cfg.tick_interval_s = r.get_or<double>("tick_interval_s", env_cfg.tick_interval_s);
    r.finish();
}

void parse_maddpg(const json& v, agents::MaddpgHyper& h) {
    ObjReader r(v, "agent.maddpg");
    h.actor_hidden = r.get_or<std::vector<int>>("actor_hidden", h.actor_hidden);
    h.critic_hidden = r.get_or<std::vector<int>>("critic_hidden", h.critic_hidden);
    h.gamma = r.get_or<double>("gamma", h.gamma);
    h.tau = r.get_or<double>("tau", h.tau);
    h.actor_lr = r.get_or<double>("actor_lr", h.actor_lr);
    h.critic_lr = r.get_or<double>("critic_lr", h.critic_lr);
    h.noise_sigma = r.get_or<double>("noise_sigma", h.noise_sigma);
    h.noise_sigma_final = r.get_or<double>("noise_sigma_final", h.noise_sigma_final);
    r.finish();
}

void parse_dqn(const json& v, agents::DqnHyper& h) {
    ObjReader r(v, "agent.dqn");
    h.grid_levels = r.get_or<int>("grid_levels", h.grid_levels);
    h.hidden = r.get_or<std::vector<int>>("hidden", h.hidden);
    h.gamma = r.get_or<double>("gamma", h.gamma);
    h.tau = r.get_or<double>("tau", h.tau);
    h.lr = r.get_or<double>("lr", h.lr);
    h.epsilon_start = r.get_or<double>("epsilon_start", h.epsilon_start);
    h.epsilon_final = r.get_or<double>("epsilon_final", h.epsilon_final);
    r.finish();
}

void parse_agent(const json& v, AgentConfig& a) {
    ObjReader r(v, "agent");
    a.algorithm = r.get_or<std::string>("algorithm", a.algorithm);
    if (r.has("maddpg")) parse_maddpg(r.at("maddpg"), a.maddpg);
    if (r.has("dqn")) parse_dqn(r.at("dqn"), a.dqn);
    std::string init = r.get_or<std::string>("new_agent_init", "mean");
    if (init == "mean")
        a.average_new_agents = true;
    else if (init == "fresh")
        a.average_new_agents = false;
    else
        throw ConfigError("agent.new_agent_init: expected 'mean' or 'fresh', got '" + init + "'");
    r.finish();
}

void parse_training(const json& v, TrainingConfig& t) {
    ObjReader r(v, "training");
    t.episodes = r.get_or<int>("episodes", t.episodes);
    t.eval_every = r.get_or<int>("eval_every", t.eval_every);
    t.seeds = r.get_or<std::vector<std::uint64_t>>("seeds", t.seeds);
    t.batch = r.get_or<int>("batch", t.batch);
    t.updates_per_step = r.get_or<int>("updates_per_step", t.updates_per_step);
    t.warmup_thawed = r.get_or<int>("warmup_thawed", t.warmup_thawed);
    t.replay.capacity = r.get_or<std::size_t>("replay_capacity", t.replay.capacity);
    t.replay.frozen_capacity =
        r.get_or<std::size_t>("frozen_capacity", t.replay.frozen_capacity);
    r.finish();
}

void parse_output(const json& v, OutputConfig& o, const std::string& base_dir) {
    ObjReader r(v, "output");
    if (r.has("dir")) o.dir = resolve(base_dir, r.get<std::string>("dir"));
    o.format = metrics::format_from_string(
        r.get_or<std::string>("format", metrics::to_string(o.format)));
    r.finish();
}

} // namespace

void AgentConfig::validate() const {
    if (algorithm != "maddpg" && algorithm != "dqn")
        throw ConfigError("agent.algorithm: expected 'maddpg' or 'dqn', got '" + algorithm +
                          "'");
    maddpg.validate();
    dqn.validate();
}

void TrainingConfig::validate() const {
    if (episodes < 0) throw ConfigError("training.episodes: must be >= 0");
    if (eval_every < 0) throw ConfigError("training.eval_every: must be >= 0");
    if (seeds.empty()) throw ConfigError("training.seeds: must be non-empty");
    if (batch < 1) throw ConfigError("training.batch: must be >= 1");
    if (updates_per_step < 1) throw ConfigError("training.updates_per_step: must be >= 1");
    if (warmup_thawed < 0) throw ConfigError("training.warmup_thawed: must be >= 0");
    replay.validate();
}

void ExperimentConfig::validate() const {
    if (schema_version != kSchemaVersion)
        throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion) +
                          ", got " + std::to_string(schema_version));
    env.validate();
    agent.validate();
    training.validate();
    if (output.dir.empty()) throw ConfigError("output.dir: must be non-empty");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    ObjReader r(j, "config");
    ExperimentConfig cfg;
    cfg.schema_version = r.get<int>("schema_version");
    if (r.has("topology")) cfg.env.topology = parse_topology(r.at("topology"), base_dir);
    cfg.env.slices.clear();
    parse_slices(r.at("slices"), cfg.env);
    if (r.has("workload")) parse_workload(r.at("workload"), cfg.env, base_dir);
    if (r.has("env")) parse_env_block(r.at("env"), cfg.env);
    if (r.has("agent")) parse_agent(r.at("agent"), cfg.agent);
    if (r.has("training")) parse_training(r.at("training"), cfg.training);
    if (r.has("output")) parse_output(r.at("output"), cfg.output, base_dir);
    r.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    return parse_config_text(buf.str(), base_dir);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;

    json nodes = json::array();
    for (const model::NodeSpec& n : cfg.env.topology.nodes) {
        json pts = json::array();
        for (const auto& [u, p] : n.power_curve.points()) pts.push_back(json::array({u, p}));
        nodes.push_back({{"id", n.id}, {"cpu_cores", n.cpu_cores}, {"power_curve", pts}});
    }
    json links = json::array();
    for (const model::LinkSpec& l : cfg.env.topology.links)
        links.push_back({{"id", l.id},
                         {"endpoints", json::array({l.endpoint_a, l.endpoint_b})},
                         {"capacity_gbps", l.capacity_gbps}});
    j["topology"] = {{"nodes", nodes}, {"links", links}};

    json slices = json::array();
    for (const env::SlicePlacement& p : cfg.env.slices)
        slices.push_back({{"node", p.node_id}, {"link", p.link_id}});
    j["slices"] = slices;

    const workload::WorkloadConfig& w = cfg.env.workload;
    json wl = {{"arrival_rate", w.arrival_rate},
               {"demand_low", w.demand_low},
               {"demand_high", w.demand_high},
               {"work_scale", w.work_scale},
               {"volume_scale", w.volume_scale}};
    if (!cfg.env.trace_path.empty()) wl["trace"] = cfg.env.trace_path;
    j["workload"] = wl;

    j["env"] = {{"alpha", cfg.env.weights.alpha},
                {"beta", cfg.env.weights.beta},
                {"epoch_s", cfg.env.epoch_s},
                {"horizon", cfg.env.horizon},
                {"tick_interval_s", cfg.env.tick_interval_s}};

    const agents::MaddpgHyper& m = cfg.agent.maddpg;
    const agents::DqnHyper& d = cfg.agent.dqn;
    j["agent"] = {{"algorithm", cfg.agent.algorithm},
                  {"new_agent_init", cfg.agent.average_new_agents ? "mean" : "fresh"},
                  {"maddpg",
                   {{"actor_hidden", m.actor_hidden},
                    {"critic_hidden", m.critic_hidden},
                    {"gamma", m.gamma},
                    {"tau", m.tau},
                    {"actor_lr", m.actor_lr},
                    {"critic_lr", m.critic_lr},
                    {"noise_sigma", m.noise_sigma},
                    {"noise_sigma_final", m.noise_sigma_final}}},
                  {"dqn",
                   {{"grid_levels", d.grid_levels},
                    {"hidden", d.hidden},
                    {"gamma", d.gamma},
                    {"tau", d.tau},
                    {"lr", d.lr},
                    {"epsilon_start", d.epsilon_start},
                    {"epsilon_final", d.epsilon_final}}}};

    const TrainingConfig& t = cfg.training;
    j["training"] = {{"episodes", t.episodes},
                     {"eval_every", t.eval_every},
                     {"seeds", t.seeds},
                     {"batch", t.batch},
                     {"updates_per_step", t.updates_per_step},
                     {"warmup_thawed", t.warmup_thawed},
                     {"replay_capacity", t.replay.capacity},
                     {"frozen_capacity", t.replay.frozen_capacity}};

    j["output"] = {{"dir", cfg.output.dir}, {"format", metrics::to_string(cfg.output.format)}};
    return j.dump(2) + "\n";
}

void write_config_snapshot(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config snapshot: " + path);
    out << config_to_json(cfg);
    if (!out) throw IoError("failed writing config snapshot: " + path);
}

} // namespace slicesim::config
