#include <doctest.h>

#include "slicesim/errors.hpp"
#include "slicesim/transfer.hpp"

using namespace slicesim;

namespace {

env::ObsLayout layout2() {
    env::ObsLayout lay;
    lay.slices = 2;
    lay.nodes = 2;
    lay.links = 2;
    return lay;
}

agents::MaddpgPopulation make_pop2(std::uint64_t seed = 1) {
    agents::MaddpgHyper h;
    h.actor_hidden = {8};
    h.critic_hidden = {8};
    sim::SeededRng rng(seed, sim::Stream::WeightInit);
    return agents::MaddpgPopulation(layout2(), {0, 1}, {0, 1}, h, rng);
}

// Critic input for the two-slice layout: [10 slice fields][2 nodes]
// [2 links][phase][4 action components] = 19 wide.
std::vector<double> random_critic_in2(sim::SeededRng& rng) {
    std::vector<double> v(19);
    for (double& x : v) x = rng.uniform();
    return v;
}

// Embed a two-slice critic input into the three-slice column order, filling
// the third slice's block and action pair with junk.
std::vector<double> embed3(const std::vector<double>& v2, double junk) {
    std::vector<double> v3(26, junk);
    for (int f = 0; f < 10; ++f) v3[f] = v2[f];          // slice 0 and 1 fields
    for (int k = 0; k < 5; ++k) v3[15 + k] = v2[10 + k]; // nodes, links, phase
    for (int j = 0; j < 4; ++j) v3[20 + j] = v2[15 + j]; // action pairs 0 and 1
    return v3;
}

} // namespace

TEST_CASE("expanded critics ignore the new slice's columns exactly") {
    agents::MaddpgPopulation pop = make_pop2();
    agents::MaddpgPopulation big = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    REQUIRE(big.slices() == 3);
    CHECK(big.layout().slices == 3);
    sim::SeededRng rng(5, sim::Stream::Test);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v2 = random_critic_in2(rng);
        std::vector<double> v3 = embed3(v2, rng.uniform());
        for (int s = 0; s < 2; ++s) {
            const agents::AgentBundle& src = pop.bundle(s);
            const agents::AgentBundle& dst = big.bundle(s);
            double before = nn::forward(src.critic_spec, src.critic, v2)[0];
            double after = nn::forward(dst.critic_spec, dst.critic, v3)[0];
            CHECK(after == before); // zero columns cannot perturb the sum
        }
    }
}

TEST_CASE("expansion carries the trained actors over verbatim") {
    agents::MaddpgPopulation pop = make_pop2(7);
    agents::MaddpgPopulation big = transfer::expand(pop, {0, 1, 1}, {0, 1, 0});
    for (int s = 0; s < 2; ++s) {
        CHECK(big.bundle(s).actor.values == pop.bundle(s).actor.values);
        CHECK(big.bundle(s).target_actor.values == pop.bundle(s).actor.values);
        CHECK(big.bundle(s).target_critic.values == big.bundle(s).critic.values);
        CHECK(big.bundle(s).sigma == pop.hyper().noise_sigma);
    }
    CHECK(big.slice_node() == std::vector<int>{0, 1, 1});
    CHECK(big.slice_link() == std::vector<int>{0, 1, 0});
}

TEST_CASE("a joining agent starts from the element-wise mean of its peers") {
    agents::MaddpgPopulation pop = make_pop2(9);
    agents::MaddpgPopulation big = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    const std::vector<double>& a0 = pop.bundle(0).actor.values;
    const std::vector<double>& a1 = pop.bundle(1).actor.values;
    const std::vector<double>& mean = big.bundle(2).actor.values;
    REQUIRE(mean.size() == a0.size());
    for (std::size_t k = 0; k < mean.size(); ++k)
        CHECK(mean[k] == (a0[k] + a1[k]) / 2.0);

    // the averaged critic behaves like the mean of the old critics
    nn::ParamSet avg;
    avg.values = pop.bundle(0).critic.values;
    for (std::size_t k = 0; k < avg.values.size(); ++k) {
        avg.values[k] += pop.bundle(1).critic.values[k];
        avg.values[k] /= 2.0;
    }
    sim::SeededRng rng(10, sim::Stream::Test);
    std::vector<double> v2 = random_critic_in2(rng);
    std::vector<double> v3 = embed3(v2, 0.77);
    double expect = nn::forward(pop.bundle(0).critic_spec, avg, v2)[0];
    double got = nn::forward(big.bundle(2).critic_spec, big.bundle(2).critic, v3)[0];
    CHECK(got == expect);
}

TEST_CASE("fresh initialization is available and reproducible") {
    agents::MaddpgPopulation pop = make_pop2(3);
    sim::SeededRng r1(4, sim::Stream::WeightInit, 1), r2(4, sim::Stream::WeightInit, 1);
    agents::MaddpgPopulation f1 = transfer::expand(pop, {0, 1, 0}, {0, 1, 1}, false, &r1);
    agents::MaddpgPopulation f2 = transfer::expand(pop, {0, 1, 0}, {0, 1, 1}, false, &r2);
    CHECK(f1.bundle(2).actor.values == f2.bundle(2).actor.values);
    // fresh weights are not the peer mean
    agents::MaddpgPopulation avg = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    CHECK(f1.bundle(2).actor.values != avg.bundle(2).actor.values);
    CHECK_THROWS_AS(transfer::expand(pop, {0, 1, 0}, {0, 1, 1}, false, nullptr), ConfigError);
}

TEST_CASE("contract keeps the survivors' behavior on the shrunken input") {
    agents::MaddpgPopulation pop = make_pop2(11);
    agents::MaddpgPopulation big = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    agents::MaddpgPopulation back = transfer::contract(big, {0, 1});
    REQUIRE(back.slices() == 2);
    for (int s = 0; s < 2; ++s) {
        CHECK(back.bundle(s).actor.values == pop.bundle(s).actor.values);
        // the zero-extension is sliced back off exactly
        CHECK(back.bundle(s).critic.values == pop.bundle(s).critic.values);
        CHECK(back.bundle(s).critic_spec == pop.bundle(s).critic_spec);
    }
    CHECK(back.slice_node() == pop.slice_node());
    CHECK(back.slice_link() == pop.slice_link());
}

TEST_CASE("contract can reorder and select arbitrary survivors") {
    agents::MaddpgPopulation pop = make_pop2(13);
    agents::MaddpgPopulation big = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    agents::MaddpgPopulation only1 = transfer::contract(big, {1});
    REQUIRE(only1.slices() == 1);
    CHECK(only1.bundle(0).actor.values == pop.bundle(1).actor.values);
    CHECK(only1.slice_node() == std::vector<int>{1});
    CHECK(only1.slice_link() == std::vector<int>{1});
}

TEST_CASE("surgery rejects malformed requests") {
    agents::MaddpgPopulation pop = make_pop2();
    // shrinking through expand
    CHECK_THROWS_AS(transfer::expand(pop, {0}, {0}), ShrinkNotSupportedError);
    // placement vectors of different lengths
    CHECK_THROWS_AS(transfer::expand(pop, {0, 1, 0}, {0, 1}), WidthMismatchError);
    // moving an existing slice
    CHECK_THROWS_AS(transfer::expand(pop, {1, 1, 0}, {0, 1, 1}), WidthMismatchError);
    // survivor set errors
    CHECK_THROWS_AS(transfer::contract(pop, {}), EmptySurvivorSetError);
    CHECK_THROWS_AS(transfer::contract(pop, {0, 2}), OutOfRangeError);
    CHECK_THROWS_AS(transfer::contract(pop, {0, 0}), OutOfRangeError);
}

TEST_CASE("an expanded population can keep training") {
    agents::MaddpgPopulation pop = make_pop2(17);
    agents::MaddpgPopulation big = transfer::expand(pop, {0, 1, 0}, {0, 1, 1});
    env::ObsLayout lay3 = big.layout();
    sim::SeededRng rng(18, sim::Stream::Test);
    std::vector<replay::Transition> batch;
    for (int i = 0; i < 8; ++i) {
        replay::Transition t;
        t.step_id = static_cast<std::uint64_t>(i);
        t.observation.resize(lay3.global_width());
        t.next_observation.resize(lay3.global_width());
        t.joint_action.resize(6);
        for (double& v : t.observation) v = rng.uniform();
        for (double& v : t.next_observation) v = rng.uniform();
        for (double& v : t.joint_action) v = rng.uniform();
        t.reward = 0.5;
        t.status = replay::Status::Thawed;
        batch.push_back(std::move(t));
    }
    agents::UpdateReport rep = big.update(batch);
    CHECK(rep.critic_loss.size() == 3);
    for (double l : rep.critic_loss) CHECK(std::isfinite(l));
}
