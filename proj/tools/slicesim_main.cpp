#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slicesim/agents.hpp"
#include "slicesim/config.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/trainer.hpp"
#include "slicesim/transfer.hpp"

namespace fs = std::filesystem;
using namespace slicesim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
    std::string config_path;
    std::vector<std::uint64_t> seeds;
    int episodes = -1; // -1 = keep config value
    std::string out;
    std::string format;
};

config::ExperimentConfig load_with_overrides(const CommonOpts& o) {
    config::ExperimentConfig cfg = config::load_config(o.config_path);
    if (!o.seeds.empty()) cfg.training.seeds = o.seeds;
    if (o.episodes >= 0) cfg.training.episodes = o.episodes;
    if (!o.format.empty()) cfg.output.format = metrics::format_from_string(o.format);
    cfg.validate();
    return cfg;
}

// --out picks where the run lands without touching the config snapshot, so
// identical experiments produce identical snapshots wherever they are written.
std::string run_dir_for(const CommonOpts& o, const config::ExperimentConfig& cfg) {
    return o.out.empty() ? cfg.output.dir : o.out;
}

double tail_mean(const std::vector<double>& v, std::size_t n) {
    if (v.empty()) return 0.0;
    std::size_t k = std::min(n, v.size());
    double sum = 0.0;
    for (std::size_t i = v.size() - k; i < v.size(); ++i) sum += v[i];
    return sum / static_cast<double>(k);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

nlohmann::json train_summary_json(const char* command,
                                  const std::vector<trainer::TrainOutcome>& outcomes) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const trainer::TrainOutcome& o : outcomes) {
        per_seed.push_back({{"seed", o.seed},
                            {"episodes", o.episode_rewards.size()},
                            {"final_reward", tail_mean(o.episode_rewards, 20)},
                            {"capacity_violations", o.audit.capacity_violations},
                            {"energy_max_rel_err", o.audit.energy_max_rel_err},
                            {"reward_bound_violations", o.audit.reward_bound_violations}});
    }
    return {{"command", command}, {"per_seed", per_seed}};
}

void print_train_summary(const std::vector<trainer::TrainOutcome>& outcomes) {
    for (const trainer::TrainOutcome& o : outcomes)
        std::printf("seed %llu: %zu episodes, final reward %.4f\n",
                    static_cast<unsigned long long>(o.seed), o.episode_rewards.size(),
                    tail_mean(o.episode_rewards, 20));
}

int cmd_train(const CommonOpts& opts) {
    config::ExperimentConfig cfg = load_with_overrides(opts);
    std::string dir = trainer::prepare_run_dir(cfg, run_dir_for(opts, cfg), "train", "scratch");
    std::vector<trainer::TrainOutcome> outcomes = trainer::train_all(cfg, dir);
    write_json_file(dir + "/summary.json", train_summary_json("train", outcomes));
    print_train_summary(outcomes);
    std::printf("run directory: %s\n", dir.c_str());
    return kExitOk;
}

/// A loaded checkpoint of either algorithm, usable as an inference policy.
struct LoadedPolicy {
    std::string name;
    std::unique_ptr<agents::MaddpgPopulation> maddpg;
    std::unique_ptr<agents::DqnAgent> dqn;

    trainer::Policy policy() const {
        return maddpg ? trainer::greedy_policy(*maddpg) : trainer::greedy_policy(*dqn);
    }
};

LoadedPolicy load_checkpoint(const std::string& dir, int expected_slices) {
    auto [algorithm, slices] = agents::read_manifest(dir);
    if (slices != expected_slices)
        throw ManifestMismatchError("checkpoint " + dir + " holds " + std::to_string(slices) +
                                    " agents, scenario defines " +
                                    std::to_string(expected_slices));
    LoadedPolicy lp;
    lp.name = fs::path(dir).filename().string();
    if (lp.name.empty()) lp.name = algorithm;
    if (algorithm == "maddpg")
        lp.maddpg = std::make_unique<agents::MaddpgPopulation>(agents::load_population(dir));
    else
        lp.dqn = std::make_unique<agents::DqnAgent>(agents::load_dqn(dir));
    return lp;
}

void print_policy_table(const std::vector<metrics::PolicySummary>& table) {
    std::printf("%-16s %5s %12s %12s %14s %15s\n", "policy", "runs", "reward_mean",
                "reward_std", "delay_mean_s", "energy_mean_j");
    for (const metrics::PolicySummary& p : table)
        std::printf("%-16s %5d %12.4f %12.4f %14.4f %15.2f\n", p.policy.c_str(), p.runs,
                    p.reward_mean, p.reward_std, p.delay_mean_s, p.energy_mean_j);
}

nlohmann::json table_json(const std::vector<metrics::PolicySummary>& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const metrics::PolicySummary& p : table)
        rows.push_back({{"policy", p.policy},
                        {"runs", p.runs},
                        {"reward_mean", p.reward_mean},
                        {"reward_std", p.reward_std},
                        {"delay_mean_s", p.delay_mean_s},
                        {"energy_mean_j", p.energy_mean_j}});
    return rows;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint, int episodes) {
    config::ExperimentConfig cfg = load_with_overrides(opts);
    LoadedPolicy lp = load_checkpoint(checkpoint, static_cast<int>(cfg.env.slices.size()));

    // evaluate only writes a run directory when --out asks for one
    std::string dir;
    if (!opts.out.empty()) dir = trainer::prepare_run_dir(cfg, opts.out, "evaluate", "eval");
    std::vector<metrics::RunSummary> runs;
    for (std::uint64_t seed : cfg.training.seeds) {
        std::string mpath;
        if (!dir.empty())
            mpath = dir + "/metrics/eval_seed_" + std::to_string(seed) +
                    (cfg.output.format == metrics::Format::Csv ? ".csv" : ".jsonl");
        trainer::EvalOutcome e = trainer::evaluate(cfg, lp.policy(), lp.name, seed, episodes,
                                                   mpath);
        runs.push_back(trainer::to_run_summary(e));
    }
    std::vector<metrics::PolicySummary> table = metrics::summarize(runs);
    print_policy_table(table);
    if (!dir.empty())
        write_json_file(dir + "/summary.json",
                        {{"command", "evaluate"}, {"episodes", episodes},
                         {"seeds", cfg.training.seeds}, {"policies", table_json(table)}});
    return kExitOk;
}

int cmd_compare(const CommonOpts& opts, const std::vector<std::string>& policy_names,
                int episodes) {
    config::ExperimentConfig cfg = load_with_overrides(opts);
    const int slices = static_cast<int>(cfg.env.slices.size());

    struct Entry {
        std::string name;
        trainer::Policy policy;
    };
    std::vector<LoadedPolicy> loaded; // keeps checkpoint networks alive
    loaded.reserve(policy_names.size());
    std::vector<Entry> entries;
    for (const std::string& name : policy_names) {
        if (name == "random" || name == "full" || name == "static") {
            agents::BaselinePolicy b;
            b.kind = agents::baseline_from_string(name);
            entries.push_back({name, trainer::baseline_policy(b, slices)});
        } else {
            loaded.push_back(load_checkpoint(name, slices));
            entries.push_back({loaded.back().name, loaded.back().policy()});
        }
    }

    std::string dir = trainer::prepare_run_dir(cfg, run_dir_for(opts, cfg), "compare", "eval");
    std::vector<metrics::RunSummary> runs;
    for (const Entry& entry : entries) {
        for (std::uint64_t seed : cfg.training.seeds) {
            std::string mpath = dir + "/metrics/" + entry.name + "_seed_" +
                                std::to_string(seed) +
                                (cfg.output.format == metrics::Format::Csv ? ".csv" : ".jsonl");
            trainer::EvalOutcome e =
                trainer::evaluate(cfg, entry.policy, entry.name, seed, episodes, mpath);
            runs.push_back(trainer::to_run_summary(e));
        }
    }
    std::vector<metrics::PolicySummary> table = metrics::summarize(runs);
    print_policy_table(table);
    write_json_file(dir + "/summary.json",
                    {{"command", "compare"}, {"episodes", episodes},
                     {"seeds", cfg.training.seeds}, {"policies", table_json(table)}});
    std::printf("run directory: %s\n", dir.c_str());
    return kExitOk;
}

int cmd_transfer(const CommonOpts& opts, const std::string& checkpoint) {
    config::ExperimentConfig cfg = load_with_overrides(opts);
    auto [algorithm, old_slices] = agents::read_manifest(checkpoint);
    if (algorithm != "maddpg")
        throw ConfigError("transfer supports maddpg checkpoints, got '" + algorithm + "'");
    const int new_slices = static_cast<int>(cfg.env.slices.size());
    if (old_slices == new_slices)
        throw ConfigError("checkpoint already has " + std::to_string(new_slices) +
                          " agents; transfer needs a different slice count");

    agents::MaddpgPopulation pop = agents::load_population(checkpoint);
    std::vector<int> node_idx, link_idx;
    for (const env::SlicePlacement& p : cfg.env.slices) {
        node_idx.push_back(cfg.env.topology.node_index(p.node_id));
        link_idx.push_back(cfg.env.topology.link_index(p.link_id));
    }
    agents::MaddpgPopulation surgered = [&] {
        if (new_slices > old_slices) {
            sim::SeededRng fresh(cfg.training.seeds.front(), sim::Stream::WeightInit, 1);
            return transfer::expand(pop, node_idx, link_idx, cfg.agent.average_new_agents,
                                    &fresh);
        }
        std::vector<int> survivors(new_slices);
        for (int i = 0; i < new_slices; ++i) survivors[i] = i;
        return transfer::contract(pop, survivors);
    }();

    std::string dir =
        trainer::prepare_run_dir(cfg, run_dir_for(opts, cfg), "transfer", "incremental");
    agents::save_population(dir + "/checkpoints/initial", surgered);
    std::vector<trainer::TrainOutcome> outcomes;
    if (cfg.training.episodes > 0) outcomes = trainer::train_all(cfg, dir, &surgered);
    nlohmann::json summary = train_summary_json("transfer", outcomes);
    summary["from_slices"] = old_slices;
    summary["to_slices"] = new_slices;
    summary["initial_checkpoint"] = dir + "/checkpoints/initial";
    write_json_file(dir + "/summary.json", summary);
    print_train_summary(outcomes);
    std::printf("run directory: %s\n", dir.c_str());
    return kExitOk;
}

int cmd_report_action_space(int slices, int levels, const std::string& format) {
    agents::ActionSpaceReport r = agents::action_space_report(slices, levels);
    if (format == "json") {
        nlohmann::json j = {{"slices", r.slices},
                            {"grid_levels", r.grid_levels},
                            {"dqn_grid_size", r.dqn_grid_size},
                            {"maddpg_dims", r.maddpg_dims}};
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("slices: %d\n", r.slices);
        std::printf("grid levels: %d\n", r.grid_levels);
        std::printf("dqn joint grid size: %llu\n",
                    static_cast<unsigned long long>(r.dqn_grid_size));
        std::printf("maddpg action dims: %d\n", r.maddpg_dims);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"network slicing simulator with multi-agent DRL control"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&opts](CLI::App* sub, bool need_config) {
        CLI::Option* c = sub->add_option("--config", opts.config_path, "experiment config JSON");
        if (need_config) c->required();
        sub->add_option("--seeds,--seed", opts.seeds, "override config seeds")
            ->delimiter(',');
        sub->add_option("--out", opts.out, "override output directory");
        sub->add_option("--format", opts.format, "metrics format: csv or json-lines");
    };

    CLI::App* train = app.add_subcommand("train", "train the configured algorithm");
    add_common(train, true);
    train->add_option("--episodes", opts.episodes, "override training episodes");

    std::string checkpoint;
    int eval_episodes = 20;
    CLI::App* evaluate = app.add_subcommand("evaluate", "greedy rollout of a checkpoint");
    add_common(evaluate, true);
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
    evaluate->add_option("--episodes", eval_episodes, "evaluation episodes per seed");

    std::vector<std::string> policies;
    CLI::App* compare = app.add_subcommand("compare", "baselines vs checkpoints, common seeds");
    add_common(compare, true);
    compare->add_option("--policies", policies,
                        "random, full, static, or checkpoint directories")
        ->required()
        ->delimiter(',');
    compare->add_option("--episodes", eval_episodes, "evaluation episodes per seed");

    CLI::App* transfer_cmd =
        app.add_subcommand("transfer", "resize a checkpoint to the config's slice count, retrain");
    add_common(transfer_cmd, true);
    transfer_cmd->add_option("--checkpoint", checkpoint, "source checkpoint directory")
        ->required();
    transfer_cmd->add_option("--episodes", opts.episodes, "override training episodes");

    int rs_slices = 0, rs_levels = 5;
    std::string rs_format = "text";
    CLI::App* report = app.add_subcommand("report-action-space",
                                          "discrete vs continuous action-space growth");
    report->add_option("--slices", rs_slices, "slice count")->required();
    report->add_option("--levels", rs_levels, "grid levels per dimension");
    report->add_option("--format", rs_format, "text or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand(train)) return cmd_train(opts);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(opts, checkpoint, eval_episodes);
        if (app.got_subcommand(compare)) return cmd_compare(opts, policies, eval_episodes);
        if (app.got_subcommand(transfer_cmd)) return cmd_transfer(opts, checkpoint);
        if (app.got_subcommand(report)) return cmd_report_action_space(rs_slices, rs_levels,
                                                                      rs_format);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}
