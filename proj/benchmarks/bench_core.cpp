#include <benchmark/benchmark.h>

#include <vector>

#include "slicesim/agents.hpp"
#include "slicesim/env.hpp"
#include "slicesim/nn.hpp"
#include "slicesim/replay.hpp"
#include "slicesim/rng.hpp"

using namespace slicesim;

namespace {

env::EnvConfig three_slice_config() {
    env::EnvConfig cfg;
    cfg.slices = {{"site-a", "ab"}, {"site-b", "bc"}, {"site-c", "ca"}};
    cfg.workload.arrival_rate = 1.0;
    cfg.horizon = 20;
    return cfg;
}

env::JointAction uniform_action(std::size_t slices, double v) {
    env::JointAction a;
    a.cpu_fraction.assign(slices, v);
    a.bw_fraction.assign(slices, v);
    return a;
}

void bench_nn_forward(benchmark::State& state) {
    nn::MlpSpec spec;
    spec.layer_widths = {static_cast<int>(state.range(0)), 64, 64, 1};
    sim::SeededRng rng(1, sim::Stream::Test);
    nn::ParamSet params = nn::init_params(spec, rng);
    std::vector<double> input(spec.input_width());
    for (double& v : input) v = rng.uniform(-1.0, 1.0);
    std::vector<double> out;
    for (auto _ : state) {
        nn::forward(spec, params, input, out);
        benchmark::DoNotOptimize(out);
    }
}

void bench_nn_backward(benchmark::State& state) {
    nn::MlpSpec spec;
    spec.layer_widths = {static_cast<int>(state.range(0)), 64, 64, 1};
    sim::SeededRng rng(1, sim::Stream::Test);
    nn::ParamSet params = nn::init_params(spec, rng);
    std::vector<double> input(spec.input_width());
    for (double& v : input) v = rng.uniform(-1.0, 1.0);
    std::vector<double> upstream = {1.0};
    nn::ForwardTrace trace;
    nn::Gradients grads;
    for (auto _ : state) {
        nn::forward_trace(spec, params, input, trace);
        nn::backward(spec, params, trace, upstream, grads);
        benchmark::DoNotOptimize(grads);
    }
}

void bench_env_episode(benchmark::State& state) {
    env::EnvConfig cfg = three_slice_config();
    env::SliceEnv e(cfg, 1);
    env::JointAction act = uniform_action(cfg.slices.size(), 0.3);
    for (auto _ : state) {
        e.reset();
        bool done = false;
        while (!done) done = e.step(act).done;
        e.flush_episode();
        benchmark::DoNotOptimize(e.drain_materialized());
    }
}

void bench_replay_cycle(benchmark::State& state) {
    replay::DelayedReplayBuffer buffer({.capacity = 4096, .frozen_capacity = 512});
    sim::SeededRng rng(1, sim::Stream::ReplaySampling);
    std::uint64_t id = 0;
    for (auto _ : state) {
        replay::Transition t;
        t.step_id = id;
        t.observation.assign(22, 0.5);
        t.joint_action.assign(6, 0.5);
        t.next_observation.assign(22, 0.5);
        buffer.push_frozen(std::move(t), static_cast<double>(id));
        buffer.thaw(id, 0.5, static_cast<double>(id) + 1.0);
        ++id;
        if (buffer.thawed_count() >= 64)
            benchmark::DoNotOptimize(buffer.sample(64, rng));
    }
}

void bench_maddpg_update(benchmark::State& state) {
    env::ObsLayout layout{3, 3, 3};
    agents::MaddpgHyper hyper;
    sim::SeededRng init(1, sim::Stream::WeightInit);
    agents::MaddpgPopulation pop(layout, {0, 1, 2}, {0, 1, 2}, hyper, init);
    sim::SeededRng rng(1, sim::Stream::Test);
    std::vector<replay::Transition> batch(static_cast<std::size_t>(state.range(0)));
    std::uint64_t id = 0;
    for (replay::Transition& t : batch) {
        t.step_id = id++;
        t.status = replay::Status::Thawed;
        t.reward = rng.uniform();
        t.observation.resize(layout.global_width());
        t.next_observation.resize(layout.global_width());
        t.joint_action.resize(6);
        for (double& v : t.observation) v = rng.uniform();
        for (double& v : t.next_observation) v = rng.uniform();
        for (double& v : t.joint_action) v = rng.uniform();
    }
    for (auto _ : state) benchmark::DoNotOptimize(pop.update(batch));
}

} // namespace

BENCHMARK(bench_nn_forward)->Arg(8)->Arg(22);
BENCHMARK(bench_nn_backward)->Arg(8)->Arg(22);
BENCHMARK(bench_env_episode);
BENCHMARK(bench_replay_cycle);
BENCHMARK(bench_maddpg_update)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
