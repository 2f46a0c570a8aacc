#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "slicesim/config.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/trainer.hpp"
#include "slicesim/transfer.hpp"

using namespace slicesim;

namespace {

namespace fs = std::filesystem;

config::ExperimentConfig smoke_config() {
    return config::load_config((fs::path(SLICESIM_CONFIG_DIR) / "smoke_2slice.json").string());
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("a short training run produces a curve, metrics and a checkpoint") {
    config::ExperimentConfig cfg = smoke_config();
    TempDir dir("slicesim_trainer_smoke");
    trainer::prepare_run_dir(cfg, dir.path.string(), "train", "default");
    CHECK(fs::exists(dir.path / "config.json"));
    CHECK(fs::exists(dir.path / "manifest.json"));

    trainer::TrainOutcome out = trainer::train_maddpg(cfg, 1, dir.path.string());
    CHECK(out.seed == 1);
    REQUIRE(out.episode_rewards.size() == static_cast<std::size_t>(cfg.training.episodes));
    for (double r : out.episode_rewards) {
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
    }
    CHECK(fs::exists(out.metrics_path));
    CHECK(fs::exists(fs::path(out.checkpoint_dir) / "manifest.json"));
    CHECK(out.audit.capacity_violations == 0);
    CHECK(out.audit.reward_bound_violations == 0);
    CHECK(out.audit.energy_max_rel_err < 1e-6);

    // the checkpoint reloads and acts
    agents::MaddpgPopulation pop = agents::load_population(out.checkpoint_dir);
    CHECK(pop.slices() == 2);
    std::vector<metrics::MetricRecord> rows =
        metrics::import_records(out.metrics_path, cfg.output.format);
    CHECK(!rows.empty());
    for (const metrics::MetricRecord& r : rows) CHECK(!r.node_id.has_value());
}

TEST_CASE("training twice with one seed writes byte-identical artifacts") {
    config::ExperimentConfig cfg = smoke_config();
    TempDir d1("slicesim_trainer_det1");
    TempDir d2("slicesim_trainer_det2");
    trainer::prepare_run_dir(cfg, d1.path.string(), "train", "default");
    trainer::prepare_run_dir(cfg, d2.path.string(), "train", "default");
    trainer::TrainOutcome a = trainer::train_maddpg(cfg, 1, d1.path.string());
    trainer::TrainOutcome b = trainer::train_maddpg(cfg, 1, d2.path.string());
    CHECK(a.episode_rewards == b.episode_rewards);
    CHECK(read_file(a.metrics_path) == read_file(b.metrics_path));
    CHECK(read_file(fs::path(a.checkpoint_dir) / "agent_000.actor.json") ==
          read_file(fs::path(b.checkpoint_dir) / "agent_000.actor.json"));
    CHECK(read_file(d1.path / "config.json") == read_file(d2.path / "config.json"));
    CHECK(read_file(d1.path / "manifest.json") == read_file(d2.path / "manifest.json"));
}

TEST_CASE("different seeds produce different trajectories") {
    config::ExperimentConfig cfg = smoke_config();
    trainer::TrainOutcome a = trainer::train_maddpg(cfg, 1, "");
    trainer::TrainOutcome b = trainer::train_maddpg(cfg, 2, "");
    CHECK(a.episode_rewards != b.episode_rewards);
    CHECK(a.checkpoint_dir.empty()); // no run dir, no files
}

TEST_CASE("train_all runs every configured seed in order") {
    config::ExperimentConfig cfg = smoke_config();
    cfg.training.seeds = {4, 9};
    cfg.training.episodes = 3;
    TempDir dir("slicesim_trainer_all");
    trainer::prepare_run_dir(cfg, dir.path.string(), "train", "default");
    std::vector<trainer::TrainOutcome> outs = trainer::train_all(cfg, dir.path.string());
    REQUIRE(outs.size() == 2);
    CHECK(outs[0].seed == 4);
    CHECK(outs[1].seed == 9);
    CHECK(fs::exists(dir.path / "metrics"));
    CHECK(outs[0].metrics_path != outs[1].metrics_path);
    // matches a solo run of the same seed
    trainer::TrainOutcome solo = trainer::train_maddpg(cfg, 4, "");
    CHECK(solo.episode_rewards == outs[0].episode_rewards);
}

TEST_CASE("dqn training runs on the traced scenario") {
    config::ExperimentConfig cfg =
        config::load_config((fs::path(SLICESIM_CONFIG_DIR) / "dqn_2slice.json").string());
    cfg.training.episodes = 4;
    cfg.training.warmup_thawed = 4;
    cfg.training.batch = 4;
    TempDir dir("slicesim_trainer_dqn");
    trainer::prepare_run_dir(cfg, dir.path.string(), "train", "default");
    trainer::TrainOutcome out = trainer::train_dqn(cfg, 7, dir.path.string());
    REQUIRE(out.episode_rewards.size() == 4);
    for (double r : out.episode_rewards) CHECK(r > 0.0);
    agents::DqnAgent agent = agents::load_dqn(out.checkpoint_dir);
    CHECK(agent.grid_size() == 625);
}

TEST_CASE("evaluation is deterministic and fills the summary fields") {
    config::ExperimentConfig cfg = smoke_config();
    trainer::Policy full =
        trainer::baseline_policy({agents::BaselineKind::Full, {}, {}}, 2);
    trainer::EvalOutcome a = trainer::evaluate(cfg, full, "full", 3, 4);
    trainer::EvalOutcome b = trainer::evaluate(cfg, full, "full", 3, 4);
    CHECK(a.episode_rewards == b.episode_rewards);
    REQUIRE(a.episode_rewards.size() == 4);
    CHECK(a.policy == "full");
    CHECK(a.seed == 3);
    CHECK(a.reward_mean > 0.0);
    CHECK(a.reward_mean <= 1.0);
    CHECK(a.delay_mean_s > 0.0);
    CHECK(a.energy_mean_j > 0.0);
    metrics::RunSummary rs = trainer::to_run_summary(a);
    CHECK(rs.policy == "full");
    CHECK(rs.episode_rewards == a.episode_rewards);

    trainer::EvalOutcome c = trainer::evaluate(cfg, full, "full", 4, 4);
    CHECK(a.episode_rewards != c.episode_rewards); // different eval seed
}

TEST_CASE("evaluation can export the full monitoring stream") {
    config::ExperimentConfig cfg = smoke_config();
    TempDir dir("slicesim_trainer_evalout");
    fs::create_directories(dir.path);
    fs::path mpath = dir.path / "eval.jsonl";
    trainer::Policy stat =
        trainer::baseline_policy({agents::BaselineKind::StaticPortion, {}, {}}, 2);
    trainer::evaluate(cfg, stat, "static", 1, 2, mpath.string());
    std::vector<metrics::MetricRecord> rows =
        metrics::import_records(mpath.string(), metrics::Format::JsonLines);
    bool has_tick = false, has_reward = false;
    for (const metrics::MetricRecord& r : rows) {
        if (r.node_id.has_value()) has_tick = true;
        if (r.reward.has_value()) has_reward = true;
    }
    CHECK(has_tick);
    CHECK(has_reward);
}

TEST_CASE("greedy policies reproduce their agent's deterministic actions") {
    config::ExperimentConfig cfg = smoke_config();
    sim::SeededRng init(1, sim::Stream::WeightInit);
    env::ObsLayout lay;
    lay.slices = 2;
    lay.nodes = static_cast<int>(cfg.env.topology.nodes.size());
    lay.links = static_cast<int>(cfg.env.topology.links.size());
    agents::MaddpgHyper h;
    h.actor_hidden = {8};
    h.critic_hidden = {8};
    agents::MaddpgPopulation pop(lay, {0, 1}, {0, 1}, h, init);
    trainer::Policy pol = trainer::greedy_policy(pop);
    sim::SeededRng rng(2, sim::Stream::Evaluation);
    std::vector<double> obs(lay.global_width(), 0.4);
    env::JointAction a = pol(obs, rng);
    env::JointAction direct = pop.act_all(obs, false, rng);
    CHECK(a.cpu_fraction == direct.cpu_fraction);
    CHECK(a.bw_fraction == direct.bw_fraction);
}

TEST_CASE("warm-started training accepts only a matching population") {
    config::ExperimentConfig cfg = smoke_config();
    cfg.training.episodes = 2;
    sim::SeededRng init(5, sim::Stream::WeightInit);
    env::ObsLayout lay;
    lay.slices = 2;
    lay.nodes = static_cast<int>(cfg.env.topology.nodes.size());
    lay.links = static_cast<int>(cfg.env.topology.links.size());
    agents::MaddpgHyper h = cfg.agent.maddpg;
    agents::MaddpgPopulation pop(lay, {0, 1}, {0, 1}, h, init);
    trainer::TrainOutcome out = trainer::train_maddpg(cfg, 1, "", &pop);
    CHECK(out.episode_rewards.size() == 2);

    agents::MaddpgPopulation wrong = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    CHECK_THROWS_AS(trainer::train_maddpg(cfg, 1, "", &wrong), ConfigError);
}

TEST_CASE("run directories refuse to be reused") {
    config::ExperimentConfig cfg = smoke_config();
    TempDir dir("slicesim_trainer_reuse");
    trainer::prepare_run_dir(cfg, dir.path.string(), "train", "default");
    CHECK_THROWS_AS(trainer::prepare_run_dir(cfg, dir.path.string(), "train", "default"),
                    ConfigError);
}
