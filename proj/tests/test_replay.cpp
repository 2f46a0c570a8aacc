#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "slicesim/errors.hpp"
#include "slicesim/replay.hpp"

using namespace slicesim;

namespace {

replay::Transition make_transition(std::uint64_t id) {
    replay::Transition t;
    t.step_id = id;
    t.observation = {static_cast<double>(id), 0.5};
    t.joint_action = {0.1, 0.2};
    t.next_observation = {static_cast<double>(id) + 1, 0.5};
    return t;
}

} // namespace

TEST_CASE("push, thaw, sample round-trip carries the reward") {
    replay::DelayedReplayBuffer buf;
    buf.push_frozen(make_transition(10), 1.0);
    CHECK(buf.frozen_count() == 1);
    CHECK(buf.thawed_count() == 0);
    buf.thaw(10, 0.75, 2.5);
    CHECK(buf.frozen_count() == 0);
    CHECK(buf.thawed_count() == 1);
    sim::SeededRng rng(1, sim::Stream::ReplaySampling);
    std::vector<replay::Transition> batch = buf.sample(1, rng);
    REQUIRE(batch.size() == 1);
    CHECK(batch[0].step_id == 10);
    CHECK(batch[0].reward == 0.75);
    CHECK(batch[0].status == replay::Status::Thawed);
    CHECK(batch[0].created_s == 1.0);
    CHECK(batch[0].thawed_s == 2.5);
}

TEST_CASE("duplicate step ids are rejected") {
    replay::DelayedReplayBuffer buf;
    buf.push_frozen(make_transition(5), 0.0);
    CHECK_THROWS_AS(buf.push_frozen(make_transition(5), 0.1), DuplicateStepError);
}

TEST_CASE("a thousand frozen pushes stay frozen") {
    replay::DelayedReplayBuffer buf;
    for (std::uint64_t i = 0; i < 1000; ++i) buf.push_frozen(make_transition(i), 0.0);
    CHECK(buf.frozen_count() == 1000);
    CHECK(buf.thawed_count() == 0);
    sim::SeededRng rng(2, sim::Stream::ReplaySampling);
    CHECK_THROWS_AS(buf.sample(1, rng), InsufficientThawedError);
}

TEST_CASE("thaw errors distinguish unknown from no-longer-frozen") {
    replay::DelayedReplayBuffer buf;
    buf.push_frozen(make_transition(3), 0.0);
    CHECK_THROWS_AS(buf.thaw(99, 0.5, 1.0), UnknownHandleError);
    buf.thaw(3, 0.5, 1.0);
    CHECK_THROWS_AS(buf.thaw(3, 0.5, 1.0), AlreadyThawedError);
}

TEST_CASE("sampling the whole store returns a permutation") {
    replay::DelayedReplayBuffer buf;
    for (std::uint64_t i = 0; i < 16; ++i) {
        buf.push_frozen(make_transition(i), 0.0);
        buf.thaw(i, 0.1, 0.0);
    }
    sim::SeededRng rng(3, sim::Stream::ReplaySampling);
    std::vector<replay::Transition> batch = buf.sample(16, rng);
    std::set<std::uint64_t> ids;
    for (const replay::Transition& t : batch) ids.insert(t.step_id);
    CHECK(ids.size() == 16);
}

TEST_CASE("over-large batches are refused") {
    replay::DelayedReplayBuffer buf;
    buf.push_frozen(make_transition(1), 0.0);
    buf.thaw(1, 0.5, 0.0);
    sim::SeededRng rng(4, sim::Stream::ReplaySampling);
    CHECK_THROWS_AS(buf.sample(2, rng), InsufficientThawedError);
}

TEST_CASE("sampling frequencies are uniform across the store") {
    replay::DelayedReplayBuffer buf;
    const int n = 20;
    for (std::uint64_t i = 0; i < n; ++i) {
        buf.push_frozen(make_transition(i), 0.0);
        buf.thaw(i, 0.1, 0.0);
    }
    sim::SeededRng rng(5, sim::Stream::ReplaySampling);
    std::vector<int> counts(n, 0);
    const int draws = 20000, batch = 5;
    for (int d = 0; d < draws; ++d)
        for (const replay::Transition& t : buf.sample(batch, rng))
            ++counts[static_cast<std::size_t>(t.step_id)];
    double expected = static_cast<double>(draws) * batch / n;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 19 cells; far beyond any reasonable percentile would flag bias
    CHECK(chi2 < 50.0);
}

TEST_CASE("thawed ring evicts in thaw order at capacity") {
    replay::ReplayConfig cfg;
    cfg.capacity = 3;
    replay::DelayedReplayBuffer buf(cfg);
    for (std::uint64_t i = 0; i < 5; ++i) buf.push_frozen(make_transition(i), 0.0);
    // thaw out of push order; eviction must follow thaw order
    for (std::uint64_t i : {4, 3, 2, 1, 0}) buf.thaw(i, 0.1, static_cast<double>(i));
    CHECK(buf.thawed_count() == 3);
    sim::SeededRng rng(6, sim::Stream::ReplaySampling);
    std::set<std::uint64_t> ids;
    for (const replay::Transition& t : buf.sample(3, rng)) ids.insert(t.step_id);
    CHECK(ids == std::set<std::uint64_t>{2, 1, 0});
}

TEST_CASE("frozen cap squeezes out the oldest frozen entry") {
    replay::ReplayConfig cfg;
    cfg.frozen_capacity = 4;
    replay::DelayedReplayBuffer buf(cfg);
    for (std::uint64_t i = 0; i < 6; ++i) buf.push_frozen(make_transition(i), 0.0);
    CHECK(buf.frozen_count() == 4);
    CHECK(buf.stale_frozen() == 2);
    CHECK_THROWS_AS(buf.thaw(0, 0.5, 1.0), AlreadyThawedError); // squeezed out
    CHECK_NOTHROW(buf.thaw(5, 0.5, 1.0));
}

TEST_CASE("expire_frozen drops entries created before the horizon") {
    replay::DelayedReplayBuffer buf;
    buf.push_frozen(make_transition(1), 1.0);
    buf.push_frozen(make_transition(2), 5.0);
    CHECK(buf.expire_frozen(3.0) == 1);
    CHECK(buf.frozen_count() == 1);
    CHECK(buf.stale_frozen() == 1);
    CHECK_NOTHROW(buf.thaw(2, 0.5, 6.0));
}

TEST_CASE("buffer dump lists every transition with its status") {
    namespace fs = std::filesystem;
    replay::DelayedReplayBuffer buf;
    buf.push_frozen(make_transition(1), 0.0);
    buf.push_frozen(make_transition(2), 0.5);
    buf.thaw(1, 0.9, 2.0);
    fs::path p = fs::temp_directory_path() / "slicesim_buffer_dump.jsonl";
    buf.dump(p.string());
    std::ifstream in(p);
    std::string line;
    int frozen = 0, thawed = 0;
    while (std::getline(in, line)) {
        if (line.find("\"frozen\"") != std::string::npos) ++frozen;
        if (line.find("\"thawed\"") != std::string::npos) ++thawed;
    }
    CHECK(frozen == 1);
    CHECK(thawed == 1);
    fs::remove(p);
}
