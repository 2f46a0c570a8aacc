#include "slicesim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <thread>

#include <json.hpp>

#include "slicesim/errors.hpp"
#include "slicesim/replay.hpp"

namespace slicesim::trainer {

namespace fs = std::filesystem;

Policy greedy_policy(const agents::MaddpgPopulation& pop) {
    return [&pop](std::span<const double> obs, sim::SeededRng& rng) {
        return pop.act_all(obs, /*explore=*/false, rng);
    };
}

Policy greedy_policy(const agents::DqnAgent& agent) {
    return [&agent](std::span<const double> obs, sim::SeededRng& rng) {
        std::size_t arm = agent.act_greedy(obs, /*epsilon=*/0.0, rng);
        return env::JointAction::from_flat(agent.grid_action(arm));
    };
}

Policy baseline_policy(agents::BaselinePolicy baseline, int slices) {
    return [baseline, slices](std::span<const double>, sim::SeededRng& rng) {
        return baseline.act(slices, rng);
    };
}

namespace {

std::string metrics_ext(metrics::Format f) {
    return f == metrics::Format::Csv ? ".csv" : ".jsonl";
}

double anneal(double start, double final_v, int episode, int episodes) {
    if (episodes <= 1) return start;
    double frac = static_cast<double>(episode) / static_cast<double>(episodes - 1);
    return start + (final_v - start) * frac;
}

/// Shared per-seed training scaffolding: metric sinks, reward bookkeeping
/// and the thaw plumbing between env materializations and the buffer.
struct SeedRun {
    SeedRun(const config::ExperimentConfig& cfg, std::uint64_t seed,
            const std::string& run_dir)
        : cfg(cfg), seed(seed), env_(cfg.env, seed), buffer(cfg.training.replay),
          explore_rng(seed, sim::Stream::Exploration),
          sample_rng(seed, sim::Stream::ReplaySampling) {
        if (!run_dir.empty()) {
            metrics_path = run_dir + "/metrics/seed_" + std::to_string(seed) +
                           metrics_ext(cfg.output.format);
            writer = std::make_unique<metrics::Writer>(metrics_path, cfg.output.format);
            checkpoint_dir = run_dir + "/checkpoints/seed_" + std::to_string(seed);
            if (cfg.training.eval_every > 0) {
                eval_writer = std::make_unique<metrics::Writer>(
                    run_dir + "/metrics/seed_" + std::to_string(seed) + ".eval" +
                        metrics_ext(cfg.output.format),
                    cfg.output.format);
                eval_env = std::make_unique<env::SliceEnv>(cfg.env, seed);
            }
        }
    }

    /// Thaw and record everything the env released.
    void drain() {
        for (const env::MaterializedReward& m : env_.drain_materialized()) {
            buffer.thaw(m.step_id, m.reward, m.time_s);
            auto& [sum, count] = acc[m.episode];
            sum += m.reward;
            ++count;
            if (writer) {
                metrics::Recorder scratch;
                scratch.record_reward(m);
                for (const metrics::MetricRecord& r : scratch.records()) writer->write(r);
            }
        }
    }

    double close_episode(std::int64_t e) {
        env_.flush_episode();
        drain();
        auto it = acc.find(e);
        if (it == acc.end() || it->second.second == 0)
            throw Error("episode " + std::to_string(e) + " produced no rewards");
        double mean = it->second.first / it->second.second;
        acc.erase(it);
        if (!acc.empty())
            throw Error("rewards leaked across the episode boundary");
        if (writer) writer->flush();
        return mean;
    }

    /// One greedy episode on the side env, logged under the training episode.
    void mid_eval(const Policy& policy, std::int64_t train_episode) {
        std::vector<double> obs = eval_env->reset();
        sim::SeededRng rng(seed, sim::Stream::Evaluation, 1);
        bool done = false;
        while (!done) {
            env::StepResult sr = eval_env->step(policy(obs, rng));
            obs = std::move(sr.observation);
            done = sr.done;
        }
        eval_env->flush_episode();
        for (env::MaterializedReward m : eval_env->drain_materialized()) {
            m.episode = train_episode;
            metrics::Recorder scratch;
            scratch.record_reward(m);
            for (const metrics::MetricRecord& r : scratch.records()) eval_writer->write(r);
        }
        eval_writer->flush();
    }

    bool ready_to_update() const {
        std::size_t floor = std::max<std::size_t>(cfg.training.batch, cfg.training.warmup_thawed);
        return buffer.thawed_count() >= floor;
    }

    const config::ExperimentConfig& cfg;
    std::uint64_t seed;
    env::SliceEnv env_;
    replay::DelayedReplayBuffer buffer;
    sim::SeededRng explore_rng;
    sim::SeededRng sample_rng;
    std::map<std::int64_t, std::pair<double, int>> acc;
    std::unique_ptr<metrics::Writer> writer;
    std::unique_ptr<metrics::Writer> eval_writer;
    std::unique_ptr<env::SliceEnv> eval_env;
    std::string metrics_path;
    std::string checkpoint_dir;
};

} // namespace

TrainOutcome train_maddpg(const config::ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& run_dir,
                          const agents::MaddpgPopulation* warm_start) {
    SeedRun run(cfg, seed, run_dir);
    const env::SliceEnv& e = run.env_;

    sim::SeededRng init_rng(seed, sim::Stream::WeightInit);
    agents::MaddpgPopulation pop =
        warm_start ? *warm_start
                   : agents::MaddpgPopulation(e.layout(), e.slice_node(), e.slice_link(),
                                              cfg.agent.maddpg, init_rng);
    if (pop.slices() != e.layout().slices)
        throw ConfigError("checkpoint has " + std::to_string(pop.slices()) +
                          " agents but the scenario defines " +
                          std::to_string(e.layout().slices) + " slices");

    TrainOutcome out;
    out.seed = seed;
    const int episodes = cfg.training.episodes;
    for (int ep = 0; ep < episodes; ++ep) {
        pop.set_sigma(anneal(cfg.agent.maddpg.noise_sigma, cfg.agent.maddpg.noise_sigma_final,
                             ep, episodes));
        std::vector<double> obs = run.env_.reset();
        bool done = false;
        while (!done) {
            env::JointAction action = pop.act_all(obs, /*explore=*/true, run.explore_rng);
            env::StepResult sr = run.env_.step(action);
            replay::Transition t;
            t.step_id = sr.step_id;
            t.observation = obs;
            t.joint_action = sr.applied.flat();
            t.next_observation = sr.observation;
            t.done = sr.done;
            run.buffer.push_frozen(std::move(t), run.env_.now());
            run.drain();
            if (run.ready_to_update())
                for (int u = 0; u < cfg.training.updates_per_step; ++u)
                    pop.update(run.buffer.sample(cfg.training.batch, run.sample_rng));
            obs = std::move(sr.observation);
            done = sr.done;
        }
        out.episode_rewards.push_back(run.close_episode(ep));
        if (cfg.training.eval_every > 0 && (ep + 1) % cfg.training.eval_every == 0)
            run.mid_eval(greedy_policy(pop), ep);
    }

    if (!run.checkpoint_dir.empty()) agents::save_population(run.checkpoint_dir, pop);
    out.checkpoint_dir = run.checkpoint_dir;
    out.metrics_path = run.metrics_path;
    out.audit = run.env_.audit();
    return out;
}

TrainOutcome train_dqn(const config::ExperimentConfig& cfg, std::uint64_t seed,
                       const std::string& run_dir) {
    SeedRun run(cfg, seed, run_dir);
    const env::SliceEnv& e = run.env_;

    sim::SeededRng init_rng(seed, sim::Stream::WeightInit);
    agents::DqnAgent agent(e.layout(), e.slice_node(), e.slice_link(), cfg.agent.dqn,
                           init_rng);

    TrainOutcome out;
    out.seed = seed;
    const int episodes = cfg.training.episodes;
    for (int ep = 0; ep < episodes; ++ep) {
        double eps = anneal(cfg.agent.dqn.epsilon_start, cfg.agent.dqn.epsilon_final, ep,
                            episodes);
        // exploration is sticky per episode: rewards for an allocation only
        // land after its tasks drain, so a random arm must be held for a whole
        // episode to be credited at all. Per-step dithering never is.
        bool explore_ep = run.explore_rng.uniform() < eps;
        std::size_t held_arm =
            explore_ep ? run.explore_rng.uniform_index(agent.grid_size()) : 0;
        std::vector<double> obs = run.env_.reset();
        bool done = false;
        while (!done) {
            std::size_t arm =
                explore_ep ? held_arm : agent.act_greedy(obs, 0.0, run.explore_rng);
            const std::vector<double>& flat = agent.grid_action(arm);
            env::StepResult sr = run.env_.step(env::JointAction::from_flat(flat));
            replay::Transition t;
            t.step_id = sr.step_id;
            t.observation = obs;
            t.joint_action = flat; // grid point, not the projected action
            t.next_observation = sr.observation;
            t.done = sr.done;
            run.buffer.push_frozen(std::move(t), run.env_.now());
            run.drain();
            if (run.ready_to_update())
                for (int u = 0; u < cfg.training.updates_per_step; ++u)
                    agent.update(run.buffer.sample(cfg.training.batch, run.sample_rng));
            obs = std::move(sr.observation);
            done = sr.done;
        }
        out.episode_rewards.push_back(run.close_episode(ep));
        if (cfg.training.eval_every > 0 && (ep + 1) % cfg.training.eval_every == 0)
            run.mid_eval(greedy_policy(agent), ep);
    }

    if (!run.checkpoint_dir.empty()) agents::save_dqn(run.checkpoint_dir, agent);
    out.checkpoint_dir = run.checkpoint_dir;
    out.metrics_path = run.metrics_path;
    out.audit = run.env_.audit();
    return out;
}

std::vector<TrainOutcome> train_all(const config::ExperimentConfig& cfg,
                                    const std::string& run_dir,
                                    const agents::MaddpgPopulation* warm_start) {
    const std::vector<std::uint64_t>& seeds = cfg.training.seeds;
    std::vector<TrainOutcome> out(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::vector<std::thread> threads;
    threads.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        threads.emplace_back([&, i] {
            try {
                if (cfg.agent.algorithm == "dqn")
                    out[i] = train_dqn(cfg, seeds[i], run_dir);
                else
                    out[i] = train_maddpg(cfg, seeds[i], run_dir, warm_start);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (std::thread& t : threads) t.join();
    for (std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

EvalOutcome evaluate(const config::ExperimentConfig& cfg, const Policy& policy,
                     const std::string& policy_name, std::uint64_t seed, int episodes,
                     const std::string& metrics_path) {
    if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
    env::SliceEnv env(cfg.env, seed);
    std::unique_ptr<metrics::Writer> writer;
    if (!metrics_path.empty())
        writer = std::make_unique<metrics::Writer>(metrics_path, cfg.output.format);
    if (writer) {
        env.on_tick = [&](const env::TickSnapshot& snap) {
            metrics::Recorder scratch;
            scratch.record_tick(snap, cfg.env.topology);
            for (const metrics::MetricRecord& r : scratch.records()) writer->write(r);
        };
    }

    EvalOutcome out;
    out.policy = policy_name;
    out.seed = seed;
    sim::SeededRng rng(seed, sim::Stream::Evaluation);
    double delay_sum = 0.0, energy_sum = 0.0;
    int delay_n = 0, energy_n = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        std::vector<double> obs = env.reset();
        double sum = 0.0;
        int count = 0;
        bool done = false;
        auto drain = [&] {
            for (const env::MaterializedReward& m : env.drain_materialized()) {
                sum += m.reward;
                ++count;
                for (std::size_t s = 0; s < m.slice_delay_s.size(); ++s) {
                    if (std::isnan(m.slice_delay_s[s])) continue;
                    delay_sum += m.slice_delay_s[s];
                    ++delay_n;
                    energy_sum += m.slice_energy_j[s];
                    ++energy_n;
                }
                if (writer) {
                    metrics::Recorder scratch;
                    scratch.record_reward(m);
                    for (const metrics::MetricRecord& r : scratch.records())
                        writer->write(r);
                }
            }
        };
        while (!done) {
            env::StepResult sr = env.step(policy(obs, rng));
            obs = std::move(sr.observation);
            done = sr.done;
            drain();
        }
        env.flush_episode();
        drain();
        if (count == 0) throw Error("evaluation episode produced no rewards");
        out.episode_rewards.push_back(sum / count);
    }
    if (writer) writer->flush();

    double mean = 0.0;
    for (double v : out.episode_rewards) mean += v;
    mean /= static_cast<double>(out.episode_rewards.size());
    double var = 0.0;
    for (double v : out.episode_rewards) var += (v - mean) * (v - mean);
    var /= static_cast<double>(out.episode_rewards.size());
    out.reward_mean = mean;
    out.reward_std = std::sqrt(var);
    out.delay_mean_s = delay_n > 0 ? delay_sum / delay_n : 0.0;
    out.energy_mean_j = energy_n > 0 ? energy_sum / energy_n : 0.0;
    out.audit = env.audit();
    return out;
}

metrics::RunSummary to_run_summary(const EvalOutcome& e) {
    metrics::RunSummary s;
    s.policy = e.policy;
    s.seed = e.seed;
    s.episode_rewards = e.episode_rewards;
    s.delay_mean_s = e.delay_mean_s;
    s.energy_mean_j = e.energy_mean_j;
    return s;
}

std::string prepare_run_dir(const config::ExperimentConfig& cfg, const std::string& dir,
                            const std::string& command, const std::string& curve_tag) {
    if (fs::exists(fs::path(dir) / "manifest.json"))
        throw ConfigError("run directory already holds a manifest: " + dir);
    fs::create_directories(fs::path(dir) / "metrics");
    fs::create_directories(fs::path(dir) / "checkpoints");
    config::write_config_snapshot((fs::path(dir) / "config.json").string(), cfg);

    nlohmann::json manifest;
    manifest["version"] = config::kToolVersion;
    manifest["command"] = command;
    manifest["curve"] = curve_tag;
    manifest["algorithm"] = cfg.agent.algorithm;
    manifest["seeds"] = cfg.training.seeds;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
    return dir;
}

} // namespace slicesim::trainer
