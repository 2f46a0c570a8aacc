#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "slicesim/agents.hpp"
#include "slicesim/errors.hpp"

using namespace slicesim;

namespace {

env::ObsLayout small_layout() {
    env::ObsLayout lay;
    lay.slices = 2;
    lay.nodes = 2;
    lay.links = 2;
    return lay;
}

agents::MaddpgHyper small_hyper() {
    agents::MaddpgHyper h;
    h.actor_hidden = {8, 8};
    h.critic_hidden = {8, 8};
    return h;
}

agents::MaddpgPopulation make_population(std::uint64_t seed = 1) {
    sim::SeededRng rng(seed, sim::Stream::WeightInit);
    return agents::MaddpgPopulation(small_layout(), {0, 1}, {0, 1}, small_hyper(), rng);
}

std::vector<double> random_vec(std::size_t n, sim::SeededRng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform();
    return v;
}

// Plausible thawed transitions with noise-band rewards.
std::vector<replay::Transition> fake_batch(const env::ObsLayout& lay, std::size_t count,
                                           sim::SeededRng& rng) {
    std::size_t ow = static_cast<std::size_t>(lay.global_width());
    std::size_t aw = 2 * static_cast<std::size_t>(lay.slices);
    std::vector<replay::Transition> batch;
    for (std::size_t i = 0; i < count; ++i) {
        replay::Transition t;
        t.step_id = i;
        t.observation = random_vec(ow, rng);
        t.joint_action = random_vec(aw, rng);
        t.next_observation = random_vec(ow, rng);
        t.reward = 0.4 + 0.4 * rng.uniform();
        t.status = replay::Status::Thawed;
        batch.push_back(std::move(t));
    }
    return batch;
}

} // namespace

TEST_CASE("hyperparameter validation rejects out-of-range values") {
    agents::MaddpgHyper h;
    h.gamma = 1.0;
    CHECK_THROWS_AS(h.validate(), ConfigError);
    h = {};
    h.tau = 1.5;
    CHECK_THROWS_AS(h.validate(), ConfigError);
    h = {};
    h.actor_hidden.clear();
    CHECK_THROWS_AS(h.validate(), ConfigError);
    agents::DqnHyper d;
    d.grid_levels = 1;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = {};
    d.epsilon_start = 1.2;
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("population networks have the contracted widths") {
    agents::MaddpgPopulation pop = make_population();
    CHECK(pop.slices() == 2);
    const agents::AgentBundle& b = pop.bundle(0);
    CHECK(b.actor_spec.layer_widths.front() == env::ObsLayout::local_width());
    CHECK(b.actor_spec.layer_widths.back() == 2);
    CHECK(b.critic_spec.layer_widths.front() == small_layout().global_width() + 4);
    CHECK(b.critic_spec.layer_widths.back() == 1);
    CHECK_THROWS_AS(pop.bundle(2), OutOfRangeError);
    // distinct agents start from distinct weights
    CHECK(pop.bundle(0).actor.values != pop.bundle(1).actor.values);
    // targets start as exact copies
    CHECK(pop.bundle(0).actor.values == pop.bundle(0).target_actor.values);
}

TEST_CASE("deterministic acting is repeatable and inside the unit box") {
    agents::MaddpgPopulation pop = make_population();
    sim::SeededRng rng(9, sim::Stream::Exploration);
    std::vector<double> obs(8, 0.3);
    auto [c1, b1] = pop.act(0, obs, false, rng);
    auto [c2, b2] = pop.act(0, obs, false, rng);
    CHECK(c1 == c2);
    CHECK(b1 == b2);
    CHECK(c1 >= 0.0);
    CHECK(c1 <= 1.0);
    CHECK(b1 >= 0.0);
    CHECK(b1 <= 1.0);
}

TEST_CASE("zero sigma makes exploration a no-op") {
    agents::MaddpgPopulation pop = make_population();
    pop.set_sigma(0.0);
    sim::SeededRng r1(5, sim::Stream::Exploration), r2(6, sim::Stream::Exploration);
    std::vector<double> obs(8, 0.1);
    auto e = pop.act(0, obs, true, r1);
    auto d = pop.act(0, obs, false, r2);
    CHECK(e == d);
}

TEST_CASE("exploration noise scales with sigma and stays reproducible") {
    agents::MaddpgPopulation pop = make_population();
    pop.set_sigma(0.5);
    std::vector<double> obs(8, 0.2);
    sim::SeededRng det(1, sim::Stream::Exploration);
    auto base = pop.act(0, obs, false, det);
    sim::SeededRng ra(3, sim::Stream::Exploration), rb(3, sim::Stream::Exploration);
    auto na = pop.act(0, obs, true, ra);
    auto nb = pop.act(0, obs, true, rb);
    CHECK(na == nb); // same rng state, same noise
    double dev = 0.0;
    sim::SeededRng rc(4, sim::Stream::Exploration);
    const int n = 4000;
    double mean_cpu = 0.0;
    for (int i = 0; i < n; ++i) {
        auto [c, bw] = pop.act(0, obs, true, rc);
        mean_cpu += c;
        dev += (c - base.first) * (c - base.first);
    }
    mean_cpu /= n;
    dev = std::sqrt(dev / n);
    CHECK(mean_cpu == doctest::Approx(base.first).epsilon(0.05));
    CHECK(dev == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("act_all matches per-agent acting on local views") {
    agents::MaddpgPopulation pop = make_population();
    sim::SeededRng rng(2, sim::Stream::Exploration);
    env::ObsLayout lay = small_layout();
    std::vector<double> global = random_vec(lay.global_width(), rng);
    env::JointAction joint = pop.act_all(global, false, rng);
    REQUIRE(joint.cpu_fraction.size() == 2);
    for (int s = 0; s < 2; ++s) {
        std::vector<double> local = lay.local_view(global, s, s, s);
        auto [c, b] = pop.act(s, local, false, rng);
        CHECK(joint.cpu_fraction[s] == c);
        CHECK(joint.bw_fraction[s] == b);
    }
}

TEST_CASE("maddpg updates shrink the critic loss on a fixed batch") {
    agents::MaddpgPopulation pop = make_population(3);
    sim::SeededRng rng(11, sim::Stream::Test);
    std::vector<replay::Transition> batch = fake_batch(small_layout(), 16, rng);
    agents::UpdateReport first = pop.update(batch);
    REQUIRE(first.critic_loss.size() == 2);
    REQUIRE(first.actor_score.size() == 2);
    agents::UpdateReport last;
    for (int i = 0; i < 60; ++i) last = pop.update(batch);
    for (int s = 0; s < 2; ++s) {
        CHECK(std::isfinite(last.critic_loss[s]));
        CHECK(last.critic_loss[s] < first.critic_loss[s]);
    }
}

TEST_CASE("soft target updates move by exactly tau toward the online nets") {
    agents::MaddpgPopulation pop = make_population(4);
    std::vector<double> before = pop.bundle(0).actor.values; // == target at init
    sim::SeededRng rng(12, sim::Stream::Test);
    std::vector<replay::Transition> batch = fake_batch(small_layout(), 8, rng);
    pop.update(batch);
    const agents::AgentBundle& b = pop.bundle(0);
    double tau = pop.hyper().tau;
    for (std::size_t k = 0; k < before.size(); ++k) {
        double expect = before[k] + tau * (b.actor.values[k] - before[k]);
        CHECK(b.target_actor.values[k] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("updates refuse frozen, empty and misshapen batches") {
    agents::MaddpgPopulation pop = make_population();
    sim::SeededRng rng(13, sim::Stream::Test);
    std::vector<replay::Transition> batch = fake_batch(small_layout(), 4, rng);
    CHECK_THROWS_AS(pop.update({}), InsufficientThawedError);
    batch[2].status = replay::Status::Frozen;
    CHECK_THROWS_AS(pop.update(batch), FrozenInBatchError);
    batch[2].status = replay::Status::Thawed;
    batch[1].joint_action.pop_back();
    CHECK_THROWS_AS(pop.update(batch), ShapeMismatchError);
}

TEST_CASE("the dqn grid enumerates digits most significant first") {
    sim::SeededRng rng(1, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 5;
    h.hidden = {16};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    CHECK(agent.grid_size() == 625); // 5^4
    CHECK(agent.grid_action(0) == std::vector<double>{0, 0, 0, 0});
    CHECK(agent.grid_action(1) == std::vector<double>{0, 0, 0, 0.25});
    CHECK(agent.grid_action(5) == std::vector<double>{0, 0, 0.25, 0});
    CHECK(agent.grid_action(125) == std::vector<double>{0.25, 0, 0, 0});
    CHECK(agent.grid_action(624) == std::vector<double>{1, 1, 1, 1});
    CHECK_THROWS_AS(agent.grid_action(625), OutOfRangeError);
}

TEST_CASE("grid_index inverts grid_action everywhere") {
    sim::SeededRng rng(1, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 4;
    h.hidden = {8};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    for (std::size_t g = 0; g < agent.grid_size(); ++g)
        CHECK(agent.grid_index(agent.grid_action(g)) == g);
    std::vector<double> off = {0.3, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(agent.grid_index(off), OutOfRangeError);
    std::vector<double> narrow = {0.0, 0.0};
    CHECK_THROWS_AS(agent.grid_index(narrow), ShapeMismatchError);
}

TEST_CASE("greedy action is the argmax and ties keep the lowest index") {
    sim::SeededRng rng(2, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 3;
    h.hidden = {8};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    sim::SeededRng act_rng(3, sim::Stream::Exploration);
    std::vector<double> obs = random_vec(small_layout().global_width(), act_rng);
    std::size_t greedy = agent.act_greedy(obs, 0.0, act_rng);
    std::vector<double> q = nn::forward(agent.net_spec(), agent.online(), obs);
    std::size_t best = static_cast<std::size_t>(
        std::max_element(q.begin(), q.end()) - q.begin());
    CHECK(greedy == best);
    // zeroed network scores every arm identically
    std::fill(agent.online().values.begin(), agent.online().values.end(), 0.0);
    CHECK(agent.act_greedy(obs, 0.0, act_rng) == 0);
    CHECK_THROWS_AS(agent.act_greedy(obs, 1.5, act_rng), OutOfRangeError);
}

TEST_CASE("the argmax is invariant under a positive rescale of the head") {
    sim::SeededRng rng(7, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 3;
    h.hidden = {8};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    sim::SeededRng act_rng(8, sim::Stream::Exploration);
    std::vector<double> obs = random_vec(small_layout().global_width(), act_rng);
    std::size_t before = agent.act_greedy(obs, 0.0, act_rng);
    // last layer holds 8*81 weights plus 81 biases at the tail
    std::size_t head = 8 * agent.grid_size() + agent.grid_size();
    std::vector<double>& v = agent.online().values;
    REQUIRE(v.size() > head);
    for (std::size_t k = v.size() - head; k < v.size(); ++k) v[k] *= 3.0;
    CHECK(agent.act_greedy(obs, 0.0, act_rng) == before);
}

TEST_CASE("full exploration visits many arms reproducibly") {
    sim::SeededRng rng(4, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 3;
    h.hidden = {8};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    std::vector<double> obs(small_layout().global_width(), 0.5);
    sim::SeededRng r1(5, sim::Stream::Exploration), r2(5, sim::Stream::Exploration);
    std::set<std::size_t> seen;
    for (int i = 0; i < 200; ++i) {
        std::size_t a = agent.act_greedy(obs, 1.0, r1);
        CHECK(a == agent.act_greedy(obs, 1.0, r2));
        CHECK(a < agent.grid_size());
        seen.insert(a);
    }
    CHECK(seen.size() > 40);
}

TEST_CASE("dqn updates shrink the td loss on a fixed batch") {
    sim::SeededRng rng(6, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 3;
    h.hidden = {16};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    sim::SeededRng batch_rng(14, sim::Stream::Test);
    std::vector<replay::Transition> batch = fake_batch(small_layout(), 16, batch_rng);
    for (replay::Transition& t : batch) {
        std::size_t g = batch_rng.uniform_index(agent.grid_size());
        t.joint_action = agent.grid_action(g);
    }
    double first = agent.update(batch);
    double last = first;
    for (int i = 0; i < 80; ++i) last = agent.update(batch);
    CHECK(std::isfinite(last));
    CHECK(last < first);
    batch[0].status = replay::Status::Frozen;
    CHECK_THROWS_AS(agent.update(batch), FrozenInBatchError);
}

TEST_CASE("baseline policies produce their contracted shapes") {
    sim::SeededRng rng(1, sim::Stream::Baseline);
    agents::BaselinePolicy full{agents::BaselineKind::Full, {}, {}};
    env::JointAction fa = full.act(3, rng);
    CHECK(fa.cpu_fraction == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(fa.bw_fraction == std::vector<double>{1.0, 1.0, 1.0});

    agents::BaselinePolicy stat{agents::BaselineKind::StaticPortion, {}, {}};
    env::JointAction sa = stat.act(4, rng);
    for (double v : sa.cpu_fraction) CHECK(v == 0.25);
    agents::BaselinePolicy custom{agents::BaselineKind::StaticPortion, {0.7, 0.1}, {0.2, 0.6}};
    env::JointAction ca = custom.act(2, rng);
    CHECK(ca.cpu_fraction == std::vector<double>{0.7, 0.1});
    CHECK(ca.bw_fraction == std::vector<double>{0.2, 0.6});

    agents::BaselinePolicy rnd{agents::BaselineKind::Random, {}, {}};
    for (int i = 0; i < 10000; ++i) {
        env::JointAction ra = rnd.act(2, rng);
        for (double v : ra.cpu_fraction) {
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("baseline names round-trip and unknown names fail") {
    using agents::BaselineKind;
    CHECK(agents::baseline_from_string("random") == BaselineKind::Random);
    CHECK(agents::baseline_from_string("full") == BaselineKind::Full);
    CHECK(agents::baseline_from_string("static") == BaselineKind::StaticPortion);
    CHECK(std::string(agents::to_string(BaselineKind::Full)) == "full");
    CHECK_THROWS_AS(agents::baseline_from_string("greedy"), ConfigError);
}

TEST_CASE("the action-space report quantifies the discrete blow-up") {
    agents::ActionSpaceReport r = agents::action_space_report(2, 5);
    CHECK(r.dqn_grid_size == 625);
    CHECK(r.maddpg_dims == 4);
    agents::ActionSpaceReport r3 = agents::action_space_report(3, 10);
    CHECK(r3.dqn_grid_size == 1000000);
    CHECK(r3.maddpg_dims == 6);
    // continuous dimensions grow linearly while the grid grows geometrically
    agents::ActionSpaceReport r6 = agents::action_space_report(6, 5);
    CHECK(r6.maddpg_dims == 12);
    CHECK(r6.dqn_grid_size == 244140625);
    CHECK_THROWS_AS(agents::action_space_report(11, 10), OutOfRangeError);
    CHECK_THROWS_AS(agents::action_space_report(0, 5), OutOfRangeError);
}

TEST_CASE("maddpg checkpoints round-trip bit-exactly") {
    namespace fs = std::filesystem;
    agents::MaddpgPopulation pop = make_population(21);
    pop.set_sigma(0.123);
    sim::SeededRng rng(15, sim::Stream::Test);
    std::vector<replay::Transition> batch = fake_batch(small_layout(), 8, rng);
    pop.update(batch); // make online and target nets diverge
    fs::path dir = fs::temp_directory_path() / "slicesim_ckpt_maddpg";
    fs::remove_all(dir);
    agents::save_population(dir.string(), pop);
    agents::MaddpgPopulation back = agents::load_population(dir.string());
    REQUIRE(back.slices() == pop.slices());
    for (int s = 0; s < pop.slices(); ++s) {
        CHECK(back.bundle(s).actor.values == pop.bundle(s).actor.values);
        CHECK(back.bundle(s).critic.values == pop.bundle(s).critic.values);
        CHECK(back.bundle(s).target_actor.values == pop.bundle(s).target_actor.values);
        CHECK(back.bundle(s).target_critic.values == pop.bundle(s).target_critic.values);
        CHECK(back.bundle(s).sigma == 0.123);
    }
    CHECK(back.slice_node() == pop.slice_node());
    auto [algo, slices] = agents::read_manifest(dir.string());
    CHECK(algo == "maddpg");
    CHECK(slices == 2);
    fs::remove_all(dir);
}

TEST_CASE("dqn checkpoints round-trip and mismatched loads fail loud") {
    namespace fs = std::filesystem;
    sim::SeededRng rng(22, sim::Stream::WeightInit);
    agents::DqnHyper h;
    h.grid_levels = 3;
    h.hidden = {8};
    agents::DqnAgent agent(small_layout(), {0, 1}, {0, 1}, h, rng);
    fs::path dir = fs::temp_directory_path() / "slicesim_ckpt_dqn";
    fs::remove_all(dir);
    agents::save_dqn(dir.string(), agent);
    agents::DqnAgent back = agents::load_dqn(dir.string());
    CHECK(back.online().values == agent.online().values);
    CHECK(back.target().values == agent.target().values);
    CHECK(back.grid_size() == agent.grid_size());
    auto [algo, slices] = agents::read_manifest(dir.string());
    CHECK(algo == "dqn");
    CHECK(slices == 2);
    CHECK_THROWS_AS(agents::load_population(dir.string()), ManifestMismatchError);

    agents::MaddpgPopulation pop = make_population();
    fs::path mdir = fs::temp_directory_path() / "slicesim_ckpt_mix";
    fs::remove_all(mdir);
    agents::save_population(mdir.string(), pop);
    CHECK_THROWS_AS(agents::load_dqn(mdir.string()), ManifestMismatchError);
    CHECK_THROWS_AS(agents::load_dqn("/nonexistent/slicesim"), IoError);
    fs::remove_all(dir);
    fs::remove_all(mdir);
}
