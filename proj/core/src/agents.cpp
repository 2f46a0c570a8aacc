#include "slicesim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace slicesim::agents {

namespace fs = std::filesystem;

void MaddpgHyper::validate() const {
    if (actor_hidden.empty() || critic_hidden.empty())
        throw ConfigError("agent networks need at least one hidden layer");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0,1)");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must be in [0,1]");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
        throw ConfigError("learning rates must be positive");
    if (noise_sigma < 0.0 || noise_sigma_final < 0.0)
        throw ConfigError("noise sigma must be non-negative");
}

nn::MlpSpec MaddpgPopulation::actor_spec(const MaddpgHyper& hyper) {
    nn::MlpSpec spec;
    spec.layer_widths.push_back(env::ObsLayout::local_width());
    for (int w : hyper.actor_hidden) spec.layer_widths.push_back(w);
    spec.layer_widths.push_back(2);
    spec.hidden_activation = nn::Activation::Relu;
    spec.output_activation = nn::Activation::Tanh;
    return spec;
}

nn::MlpSpec MaddpgPopulation::critic_spec(const env::ObsLayout& layout,
                                          const MaddpgHyper& hyper) {
    nn::MlpSpec spec;
    spec.layer_widths.push_back(layout.global_width() + 2 * layout.slices);
    for (int w : hyper.critic_hidden) spec.layer_widths.push_back(w);
    spec.layer_widths.push_back(1);
    spec.hidden_activation = nn::Activation::Relu;
    spec.output_activation = nn::Activation::Identity;
    return spec;
}

MaddpgPopulation::MaddpgPopulation(const env::ObsLayout& layout, std::vector<int> slice_node,
                                   std::vector<int> slice_link, MaddpgHyper hyper,
                                   sim::SeededRng& init_rng)
    : layout_(layout), slice_node_(std::move(slice_node)), slice_link_(std::move(slice_link)),
      hyper_(hyper) {
    hyper_.validate();
    if (static_cast<int>(slice_node_.size()) != layout_.slices ||
        static_cast<int>(slice_link_.size()) != layout_.slices)
        throw ShapeMismatchError("placement vectors disagree with the layout slice count");
    nn::MlpSpec a_spec = actor_spec(hyper_);
    nn::MlpSpec c_spec = critic_spec(layout_, hyper_);
    for (int s = 0; s < layout_.slices; ++s) {
        AgentBundle b;
        b.slice_id = s;
        b.actor_spec = a_spec;
        b.critic_spec = c_spec;
        b.actor = nn::init_params(a_spec, init_rng, 0.1);
        b.critic = nn::init_params(c_spec, init_rng);
        b.target_actor = b.actor;
        b.target_critic = b.critic;
        b.actor_opt.reset(b.actor.values.size());
        b.critic_opt.reset(b.critic.values.size());
        b.sigma = hyper_.noise_sigma;
        bundles_.push_back(std::move(b));
    }
}

MaddpgPopulation::MaddpgPopulation(const env::ObsLayout& layout, std::vector<int> slice_node,
                                   std::vector<int> slice_link, MaddpgHyper hyper,
                                   std::vector<AgentBundle> bundles)
    : layout_(layout), slice_node_(std::move(slice_node)), slice_link_(std::move(slice_link)),
      hyper_(hyper), bundles_(std::move(bundles)) {
    hyper_.validate();
    if (static_cast<int>(bundles_.size()) != layout_.slices)
        throw ShapeMismatchError("bundle count disagrees with the layout slice count");
    for (int s = 0; s < layout_.slices; ++s) {
        const AgentBundle& b = bundles_[s];
        if (b.actor_spec.input_width() != env::ObsLayout::local_width() ||
            b.actor_spec.output_width() != 2)
            throw WidthMismatchError("actor widths do not fit the local observation contract");
        if (b.critic_spec.input_width() != layout_.global_width() + 2 * layout_.slices)
            throw WidthMismatchError("critic input width does not fit the layout");
    }
}

AgentBundle& MaddpgPopulation::bundle(int slice) {
    if (slice < 0 || slice >= slices()) throw OutOfRangeError("agent index out of range");
    return bundles_[slice];
}

const AgentBundle& MaddpgPopulation::bundle(int slice) const {
    if (slice < 0 || slice >= slices()) throw OutOfRangeError("agent index out of range");
    return bundles_[slice];
}

void MaddpgPopulation::set_sigma(double sigma) {
    for (AgentBundle& b : bundles_) b.sigma = sigma;
}

std::pair<double, double> MaddpgPopulation::act(int slice, std::span<const double> local_obs,
                                                bool explore, sim::SeededRng& rng) const {
    const AgentBundle& b = bundle(slice);
    std::vector<double> y = nn::forward(b.actor_spec, b.actor, local_obs);
    double cpu = (y[0] + 1.0) * 0.5;
    double bw = (y[1] + 1.0) * 0.5;
    if (explore && b.sigma > 0.0) {
        cpu += rng.normal(0.0, b.sigma);
        bw += rng.normal(0.0, b.sigma);
    }
    return {cpu, bw};
}

env::JointAction MaddpgPopulation::act_all(std::span<const double> global_obs, bool explore,
                                           sim::SeededRng& rng) const {
    env::JointAction a;
    for (int s = 0; s < slices(); ++s) {
        std::vector<double> local =
            layout_.local_view(global_obs, s, slice_node_[s], slice_link_[s]);
        auto [cpu, bw] = act(s, local, explore, rng);
        a.cpu_fraction.push_back(cpu);
        a.bw_fraction.push_back(bw);
    }
    return a;
}

namespace {

void check_thawed(const std::vector<replay::Transition>& batch) {
    if (batch.empty()) throw InsufficientThawedError("update on an empty batch");
    for (const replay::Transition& t : batch)
        if (t.status != replay::Status::Thawed)
            throw FrozenInBatchError("frozen transition in an update batch");
}

// Anti-saturation hinge on the actor's output pre-activations. tanh(2) is
// already 0.96, so the knee leaves the whole useful action range untouched
// and only charges heads that have drifted onto the flat rails.
constexpr double kSatKnee = 2.0;
constexpr double kSatWeight = 1e-2;

} // namespace

UpdateReport MaddpgPopulation::update(const std::vector<replay::Transition>& batch) {
    check_thawed(batch);
    std::size_t b_count = batch.size();
    std::size_t obs_w = static_cast<std::size_t>(layout_.global_width());
    std::size_t act_w = 2 * static_cast<std::size_t>(slices());
    for (const replay::Transition& t : batch)
        if (t.observation.size() != obs_w || t.next_observation.size() != obs_w ||
            t.joint_action.size() != act_w)
            throw ShapeMismatchError("batch transition widths do not fit the layout");

    // next joint actions from the target actors, shared across all critics
    std::vector<std::vector<double>> next_actions(b_count, std::vector<double>(act_w));
    for (std::size_t j = 0; j < b_count; ++j) {
        for (int s = 0; s < slices(); ++s) {
            const AgentBundle& b = bundles_[s];
            std::vector<double> local = layout_.local_view(batch[j].next_observation, s,
                                                           slice_node_[s], slice_link_[s]);
            std::vector<double> y = nn::forward(b.actor_spec, b.target_actor, local);
            next_actions[j][2 * s] = (y[0] + 1.0) * 0.5;
            next_actions[j][2 * s + 1] = (y[1] + 1.0) * 0.5;
        }
    }

    UpdateReport report;
    std::vector<double> critic_in(obs_w + act_w);
    nn::ForwardTrace trace, actor_trace;
    nn::Gradients grads, actor_grads;
    for (int i = 0; i < slices(); ++i) {
        AgentBundle& b = bundles_[i];
        // critic regression
        std::vector<double> grad_acc(b.critic.values.size(), 0.0);
        double loss = 0.0;
        for (std::size_t j = 0; j < b_count; ++j) {
            std::copy(batch[j].next_observation.begin(), batch[j].next_observation.end(),
                      critic_in.begin());
            std::copy(next_actions[j].begin(), next_actions[j].end(),
                      critic_in.begin() + obs_w);
            double q_next = nn::forward(b.critic_spec, b.target_critic, critic_in)[0];
            double y = batch[j].reward +
                       hyper_.gamma * (batch[j].done ? 0.0 : 1.0) * q_next;
            std::copy(batch[j].observation.begin(), batch[j].observation.end(),
                      critic_in.begin());
            std::copy(batch[j].joint_action.begin(), batch[j].joint_action.end(),
                      critic_in.begin() + obs_w);
            nn::forward_trace(b.critic_spec, b.critic, critic_in, trace);
            double q = trace.acts.back()[0];
            double err = q - y;
            loss += err * err;
            double upstream[1] = {2.0 * err / static_cast<double>(b_count)};
            nn::backward(b.critic_spec, b.critic, trace, upstream, grads);
            for (std::size_t k = 0; k < grad_acc.size(); ++k) grad_acc[k] += grads.params[k];
        }
        nn::optimizer_step(b.critic, grad_acc, b.critic_opt, {hyper_.critic_lr});
        report.critic_loss.push_back(loss / static_cast<double>(b_count));

        // policy gradient through the freshly updated critic
        std::vector<double> actor_acc(b.actor.values.size(), 0.0);
        double score = 0.0;
        for (std::size_t j = 0; j < b_count; ++j) {
            std::vector<double> local =
                layout_.local_view(batch[j].observation, i, slice_node_[i], slice_link_[i]);
            nn::forward_trace(b.actor_spec, b.actor, local, actor_trace);
            double a_cpu = (actor_trace.acts.back()[0] + 1.0) * 0.5;
            double a_bw = (actor_trace.acts.back()[1] + 1.0) * 0.5;
            std::copy(batch[j].observation.begin(), batch[j].observation.end(),
                      critic_in.begin());
            std::copy(batch[j].joint_action.begin(), batch[j].joint_action.end(),
                      critic_in.begin() + obs_w);
            critic_in[obs_w + 2 * i] = a_cpu;
            critic_in[obs_w + 2 * i + 1] = a_bw;
            nn::forward_trace(b.critic_spec, b.critic, critic_in, trace);
            score += trace.acts.back()[0];
            double upstream[1] = {-1.0 / static_cast<double>(b_count)};
            nn::backward(b.critic_spec, b.critic, trace, upstream, grads);
            // chain through the affine rescale: d a / d tanh-output = 0.5
            double up_actor[2] = {grads.input[obs_w + 2 * i] * 0.5,
                                  grads.input[obs_w + 2 * i + 1] * 0.5};
            // hinge on the output pre-activations keeps the tanh head off its
            // rails: past the knee the activation derivative is so small that
            // the critic's pull cannot bring a railed action back. Injected
            // pre-activation so the penalty itself does not vanish there.
            double pre_up[2];
            for (int d = 0; d < 2; ++d) {
                double y = std::clamp(actor_trace.acts.back()[d], -1.0 + 1e-12, 1.0 - 1e-12);
                double z = std::atanh(y);
                double h = std::max(0.0, std::abs(z) - kSatKnee);
                pre_up[d] = kSatWeight * 2.0 * (z > 0.0 ? h : -h) /
                            static_cast<double>(b_count);
            }
            nn::backward(b.actor_spec, b.actor, actor_trace, up_actor, pre_up, actor_grads);
            for (std::size_t k = 0; k < actor_acc.size(); ++k)
                actor_acc[k] += actor_grads.params[k];
        }
        nn::optimizer_step(b.actor, actor_acc, b.actor_opt, {hyper_.actor_lr});
        report.actor_score.push_back(score / static_cast<double>(b_count));

        nn::soft_update(b.target_critic, b.critic, hyper_.tau);
        nn::soft_update(b.target_actor, b.actor, hyper_.tau);
    }
    return report;
}

void DqnHyper::validate() const {
    if (grid_levels < 2) throw ConfigError("grid_levels must be at least 2");
    if (hidden.empty()) throw ConfigError("q-network needs at least one hidden layer");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0,1)");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must be in [0,1]");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_final < 0.0 ||
        epsilon_final > 1.0)
        throw ConfigError("epsilon bounds must be in [0,1]");
}

DqnAgent::DqnAgent(const env::ObsLayout& layout, std::vector<int> slice_node,
                   std::vector<int> slice_link, DqnHyper hyper, sim::SeededRng& init_rng)
    : layout_(layout), slice_node_(std::move(slice_node)), slice_link_(std::move(slice_link)),
      hyper_(hyper) {
    hyper_.validate();
    ActionSpaceReport r = action_space_report(layout_.slices, hyper_.grid_levels);
    if (r.dqn_grid_size > 200000)
        throw ConfigError("joint grid of " + std::to_string(r.dqn_grid_size) +
                          " actions is too large to train; reduce slices or levels");
    int dims = 2 * layout_.slices;
    grid_.reserve(r.dqn_grid_size);
    for (std::uint64_t g = 0; g < r.dqn_grid_size; ++g) {
        std::vector<double> a(dims);
        std::uint64_t rem = g;
        for (int d = dims - 1; d >= 0; --d) {
            a[d] = static_cast<double>(rem % hyper_.grid_levels) /
                   static_cast<double>(hyper_.grid_levels - 1);
            rem /= hyper_.grid_levels;
        }
        grid_.push_back(std::move(a));
    }
    spec_.layer_widths.push_back(layout_.global_width());
    for (int w : hyper_.hidden) spec_.layer_widths.push_back(w);
    spec_.layer_widths.push_back(static_cast<int>(grid_.size()));
    spec_.hidden_activation = nn::Activation::Relu;
    spec_.output_activation = nn::Activation::Identity;
    online_ = nn::init_params(spec_, init_rng);
    target_ = online_;
    opt_.reset(online_.values.size());
}

const std::vector<double>& DqnAgent::grid_action(std::size_t index) const {
    if (index >= grid_.size()) throw OutOfRangeError("grid index out of range");
    return grid_[index];
}

std::size_t DqnAgent::grid_index(std::span<const double> flat_action) const {
    if (flat_action.size() != static_cast<std::size_t>(2 * layout_.slices))
        throw ShapeMismatchError("flat action width does not fit the grid");
    std::uint64_t idx = 0;
    for (double v : flat_action) {
        double level = v * (hyper_.grid_levels - 1);
        double rounded = std::round(level);
        if (std::abs(level - rounded) > 1e-9 || rounded < 0.0 ||
            rounded >= hyper_.grid_levels)
            throw OutOfRangeError("action component is not a grid point");
        idx = idx * hyper_.grid_levels + static_cast<std::uint64_t>(rounded);
    }
    return idx;
}

std::size_t DqnAgent::act_greedy(std::span<const double> global_obs, double epsilon,
                                 sim::SeededRng& rng) const {
    if (epsilon < 0.0 || epsilon > 1.0) throw OutOfRangeError("epsilon outside [0,1]");
    if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_index(grid_.size());
    std::vector<double> q = nn::forward(spec_, online_, global_obs);
    std::size_t best = 0;
    for (std::size_t k = 1; k < q.size(); ++k)
        if (q[k] > q[best]) best = k; // strict: ties keep the lowest index
    return best;
}

double DqnAgent::update(const std::vector<replay::Transition>& batch) {
    check_thawed(batch);
    std::size_t b_count = batch.size();
    nn::ForwardTrace trace;
    nn::Gradients grads;
    std::vector<double> grad_acc(online_.values.size(), 0.0);
    std::vector<double> upstream(grid_.size());
    double loss = 0.0;
    for (const replay::Transition& t : batch) {
        // double-dqn target: the online net picks the arm, the target net
        // scores it. With this many arms a plain max rides the noise peak.
        std::vector<double> q_pick = nn::forward(spec_, online_, t.next_observation);
        std::size_t pick = 0;
        for (std::size_t k = 1; k < q_pick.size(); ++k)
            if (q_pick[k] > q_pick[pick]) pick = k;
        std::vector<double> q_next = nn::forward(spec_, target_, t.next_observation);
        double y = t.reward + hyper_.gamma * (t.done ? 0.0 : 1.0) * q_next[pick];
        std::size_t idx = grid_index(t.joint_action);
        nn::forward_trace(spec_, online_, t.observation, trace);
        double err = trace.acts.back()[idx] - y;
        loss += err * err;
        std::fill(upstream.begin(), upstream.end(), 0.0);
        upstream[idx] = 2.0 * err / static_cast<double>(b_count);
        nn::backward(spec_, online_, trace, upstream, grads);
        for (std::size_t k = 0; k < grad_acc.size(); ++k) grad_acc[k] += grads.params[k];
    }
    nn::optimizer_step(online_, grad_acc, opt_, {hyper_.lr});
    nn::soft_update(target_, online_, hyper_.tau);
    return loss / static_cast<double>(b_count);
}

BaselineKind baseline_from_string(const std::string& s) {
    if (s == "random") return BaselineKind::Random;
    if (s == "full") return BaselineKind::Full;
    if (s == "static") return BaselineKind::StaticPortion;
    throw ConfigError("unknown baseline: " + s + " (expected random, full or static)");
}

const char* to_string(BaselineKind k) {
    switch (k) {
    case BaselineKind::Random: return "random";
    case BaselineKind::Full: return "full";
    case BaselineKind::StaticPortion: return "static";
    }
    return "?";
}

env::JointAction BaselinePolicy::act(int slices, sim::SeededRng& rng) const {
    env::JointAction a;
    a.cpu_fraction.resize(slices);
    a.bw_fraction.resize(slices);
    switch (kind) {
    case BaselineKind::Random:
        for (int s = 0; s < slices; ++s) {
            a.cpu_fraction[s] = rng.uniform();
            a.bw_fraction[s] = rng.uniform();
        }
        break;
    case BaselineKind::Full:
        std::fill(a.cpu_fraction.begin(), a.cpu_fraction.end(), 1.0);
        std::fill(a.bw_fraction.begin(), a.bw_fraction.end(), 1.0);
        break;
    case BaselineKind::StaticPortion: {
        double def = 1.0 / static_cast<double>(slices);
        for (int s = 0; s < slices; ++s) {
            a.cpu_fraction[s] =
                static_cpu.empty() ? def : static_cpu[static_cast<std::size_t>(s)];
            a.bw_fraction[s] =
                static_bw.empty() ? def : static_bw[static_cast<std::size_t>(s)];
        }
        break;
    }
    }
    return a;
}

ActionSpaceReport action_space_report(int slices, int grid_levels) {
    if (slices < 1 || grid_levels < 1) throw OutOfRangeError("counts must be at least 1");
    ActionSpaceReport r;
    r.slices = slices;
    r.grid_levels = grid_levels;
    r.maddpg_dims = 2 * slices;
    unsigned __int128 size = 1;
    for (int d = 0; d < 2 * slices; ++d) {
        size *= static_cast<unsigned>(grid_levels);
        if (size > std::numeric_limits<std::uint64_t>::max())
            throw OutOfRangeError("grid size overflows 64 bits");
    }
    r.dqn_grid_size = static_cast<std::uint64_t>(size);
    return r;
}

namespace {

nlohmann::json layout_json(const env::ObsLayout& l) {
    return {{"slices", l.slices}, {"nodes", l.nodes}, {"links", l.links}};
}

env::ObsLayout layout_from_json(const nlohmann::json& j) {
    env::ObsLayout l;
    l.slices = j.at("slices").get<int>();
    l.nodes = j.at("nodes").get<int>();
    l.links = j.at("links").get<int>();
    return l;
}

nlohmann::json load_manifest(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw IoError("cannot open checkpoint manifest in " + dir);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    if (j.value("format_version", 0) != 1) throw ParseError("unsupported manifest version");
    return j;
}

std::string agent_file(const std::string& dir, int slice, const char* role) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "agent_%03d.%s.json", slice, role);
    return dir + "/" + buf;
}

} // namespace

void save_population(const std::string& dir, const MaddpgPopulation& pop) {
    fs::create_directories(dir);
    nlohmann::json m;
    m["format_version"] = 1;
    m["algorithm"] = "maddpg";
    m["slices"] = pop.slices();
    m["layout"] = layout_json(pop.layout());
    m["slice_node"] = pop.slice_node();
    m["slice_link"] = pop.slice_link();
    const MaddpgHyper& h = pop.hyper();
    m["hyper"] = {{"actor_hidden", h.actor_hidden}, {"critic_hidden", h.critic_hidden},
                  {"gamma", h.gamma},               {"tau", h.tau},
                  {"actor_lr", h.actor_lr},         {"critic_lr", h.critic_lr},
                  {"noise_sigma", h.noise_sigma},   {"noise_sigma_final", h.noise_sigma_final}};
    std::vector<double> sigmas;
    for (int s = 0; s < pop.slices(); ++s) sigmas.push_back(pop.bundle(s).sigma);
    m["sigma"] = sigmas;
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << m.dump(2) << "\n";
    for (int s = 0; s < pop.slices(); ++s) {
        const AgentBundle& b = pop.bundle(s);
        nn::save_network(agent_file(dir, s, "actor"), b.actor_spec, b.actor);
        nn::save_network(agent_file(dir, s, "critic"), b.critic_spec, b.critic);
        nn::save_network(agent_file(dir, s, "target_actor"), b.actor_spec, b.target_actor);
        nn::save_network(agent_file(dir, s, "target_critic"), b.critic_spec, b.target_critic);
    }
}

MaddpgPopulation load_population(const std::string& dir) {
    nlohmann::json m = load_manifest(dir);
    if (m.at("algorithm").get<std::string>() != "maddpg")
        throw ManifestMismatchError("checkpoint in " + dir + " is not a maddpg population");
    env::ObsLayout layout = layout_from_json(m.at("layout"));
    MaddpgHyper h;
    const nlohmann::json& hj = m.at("hyper");
    h.actor_hidden = hj.at("actor_hidden").get<std::vector<int>>();
    h.critic_hidden = hj.at("critic_hidden").get<std::vector<int>>();
    h.gamma = hj.at("gamma").get<double>();
    h.tau = hj.at("tau").get<double>();
    h.actor_lr = hj.at("actor_lr").get<double>();
    h.critic_lr = hj.at("critic_lr").get<double>();
    h.noise_sigma = hj.at("noise_sigma").get<double>();
    h.noise_sigma_final = hj.at("noise_sigma_final").get<double>();
    std::vector<double> sigmas = m.at("sigma").get<std::vector<double>>();
    int slices = m.at("slices").get<int>();
    if (slices != layout.slices)
        throw ManifestMismatchError("manifest slice count disagrees with its layout");
    std::vector<AgentBundle> bundles;
    for (int s = 0; s < slices; ++s) {
        AgentBundle b;
        b.slice_id = s;
        std::tie(b.actor_spec, b.actor) = nn::load_network(agent_file(dir, s, "actor"));
        std::tie(b.critic_spec, b.critic) = nn::load_network(agent_file(dir, s, "critic"));
        auto [tas, tap] = nn::load_network(agent_file(dir, s, "target_actor"));
        auto [tcs, tcp] = nn::load_network(agent_file(dir, s, "target_critic"));
        if (tas != b.actor_spec || tcs != b.critic_spec)
            throw ManifestMismatchError("target network shape differs from online network");
        b.target_actor = std::move(tap);
        b.target_critic = std::move(tcp);
        b.actor_opt.reset(b.actor.values.size());
        b.critic_opt.reset(b.critic.values.size());
        b.sigma = s < static_cast<int>(sigmas.size()) ? sigmas[s] : h.noise_sigma;
        bundles.push_back(std::move(b));
    }
    return MaddpgPopulation(layout, m.at("slice_node").get<std::vector<int>>(),
                            m.at("slice_link").get<std::vector<int>>(), h, std::move(bundles));
}

void save_dqn(const std::string& dir, const DqnAgent& agent) {
    fs::create_directories(dir);
    nlohmann::json m;
    m["format_version"] = 1;
    m["algorithm"] = "dqn";
    m["slices"] = agent.layout().slices;
    m["layout"] = layout_json(agent.layout());
    m["slice_node"] = agent.slice_node();
    m["slice_link"] = agent.slice_link();
    const DqnHyper& h = agent.hyper();
    m["hyper"] = {{"grid_levels", h.grid_levels},     {"hidden", h.hidden},
                  {"gamma", h.gamma},                 {"tau", h.tau},
                  {"lr", h.lr},                       {"epsilon_start", h.epsilon_start},
                  {"epsilon_final", h.epsilon_final}};
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << m.dump(2) << "\n";
    nn::save_network(dir + "/dqn.online.json", agent.net_spec(), agent.online());
    nn::save_network(dir + "/dqn.target.json", agent.net_spec(), agent.target());
}

DqnAgent load_dqn(const std::string& dir) {
    nlohmann::json m = load_manifest(dir);
    if (m.at("algorithm").get<std::string>() != "dqn")
        throw ManifestMismatchError("checkpoint in " + dir + " is not a dqn agent");
    env::ObsLayout layout = layout_from_json(m.at("layout"));
    DqnHyper h;
    const nlohmann::json& hj = m.at("hyper");
    h.grid_levels = hj.at("grid_levels").get<int>();
    h.hidden = hj.at("hidden").get<std::vector<int>>();
    h.gamma = hj.at("gamma").get<double>();
    h.tau = hj.at("tau").get<double>();
    h.lr = hj.at("lr").get<double>();
    h.epsilon_start = hj.at("epsilon_start").get<double>();
    h.epsilon_final = hj.at("epsilon_final").get<double>();
    sim::SeededRng scratch(0, sim::Stream::WeightInit);
    DqnAgent agent(layout, m.at("slice_node").get<std::vector<int>>(),
                   m.at("slice_link").get<std::vector<int>>(), h, scratch);
    auto [ospec, oparams] = nn::load_network(dir + "/dqn.online.json");
    auto [tspec, tparams] = nn::load_network(dir + "/dqn.target.json");
    if (ospec != agent.net_spec() || tspec != agent.net_spec())
        throw ManifestMismatchError("dqn network shape disagrees with the manifest");
    agent.online() = std::move(oparams);
    agent.target() = std::move(tparams);
    return agent;
}

std::pair<std::string, int> read_manifest(const std::string& dir) {
    nlohmann::json m = load_manifest(dir);
    return {m.at("algorithm").get<std::string>(), m.at("slices").get<int>()};
}

} // namespace slicesim::agents
