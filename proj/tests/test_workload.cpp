#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "slicesim/errors.hpp"
#include "slicesim/workload.hpp"

using namespace slicesim;

namespace {

workload::Generator make_generator(const workload::WorkloadConfig& cfg, std::uint64_t seed) {
    return workload::Generator(0, 0, 0, cfg, sim::SeededRng(seed, sim::Stream::Workload));
}

} // namespace

TEST_CASE("10k generated demands stay inside the band with the right mean") {
    model::Topology topo = model::Topology::default_three_site();
    workload::WorkloadConfig cfg;
    workload::Generator gen = make_generator(cfg, 101);
    double now = 0.0, sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        model::Task t = gen.next_task(topo, now);
        now = t.arrival_s;
        REQUIRE(t.demand_fraction >= 0.27);
        REQUIRE(t.demand_fraction <= 0.33);
        sum += t.demand_fraction;
    }
    double mean = sum / n;
    CHECK(mean > 0.298);
    CHECK(mean < 0.302);
}

TEST_CASE("degenerate demand interval pins every draw") {
    model::Topology topo = model::Topology::default_three_site();
    workload::WorkloadConfig cfg;
    cfg.demand_low = cfg.demand_high = 0.3;
    workload::Generator gen = make_generator(cfg, 5);
    for (int i = 0; i < 100; ++i) {
        model::Task t = gen.next_task(topo, 0.0);
        CHECK(t.demand_fraction == 0.3);
        CHECK(t.cpu_work == doctest::Approx(0.3 * 4));
        CHECK(t.data_volume == doctest::Approx(0.3 * 10));
    }
}

TEST_CASE("inter-arrival mean converges to 1/rate") {
    model::Topology topo = model::Topology::default_three_site();
    workload::WorkloadConfig cfg;
    cfg.arrival_rate = 2.0;
    workload::Generator gen = make_generator(cfg, 77);
    double now = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) now = gen.next_task(topo, now).arrival_s;
    double mean_gap = now / n;
    CHECK(mean_gap == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("streams are reproducible per (seed, slice)") {
    model::Topology topo = model::Topology::default_three_site();
    workload::WorkloadConfig cfg;
    workload::Generator a = make_generator(cfg, 9);
    workload::Generator b = make_generator(cfg, 9);
    for (int i = 0; i < 50; ++i) {
        model::Task ta = a.next_task(topo, 0.0);
        model::Task tb = b.next_task(topo, 0.0);
        CHECK(ta.arrival_s == tb.arrival_s);
        CHECK(ta.demand_fraction == tb.demand_fraction);
    }
}

TEST_CASE("workload config validation") {
    workload::WorkloadConfig cfg;
    cfg.demand_low = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.demand_low = 0.4;
    cfg.demand_high = 0.3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.arrival_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("empty trace file yields an empty stream") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "slicesim_trace_empty.csv";
    {
        std::ofstream out(p);
        out << "arrival_s,slice_id,demand_fraction,cpu_work,data_volume\n";
    }
    CHECK(workload::replay_trace(p.string()).empty());
    fs::remove(p);
}

TEST_CASE("trace round-trip reproduces the generated stream") {
    namespace fs = std::filesystem;
    model::Topology topo = model::Topology::default_three_site();
    workload::WorkloadConfig cfg;
    workload::Generator gen = make_generator(cfg, 55);
    std::vector<model::Task> tasks;
    double now = 0.0;
    for (int i = 0; i < 200; ++i) {
        tasks.push_back(gen.next_task(topo, now));
        now = tasks.back().arrival_s;
    }
    fs::path p = fs::temp_directory_path() / "slicesim_trace_roundtrip.csv";
    workload::write_trace(p.string(), tasks);
    std::vector<model::Task> back = workload::replay_trace(p.string());
    REQUIRE(back.size() == tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK(back[i].arrival_s == tasks[i].arrival_s);
        CHECK(back[i].slice_id == tasks[i].slice_id);
        CHECK(back[i].demand_fraction == tasks[i].demand_fraction);
        CHECK(back[i].cpu_work == tasks[i].cpu_work);
        CHECK(back[i].data_volume == tasks[i].data_volume);
    }
    fs::remove(p);
}

TEST_CASE("malformed trace rows name the offending line") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "slicesim_trace_bad.csv";
    {
        std::ofstream out(p);
        out << "arrival_s,slice_id,demand_fraction,cpu_work,data_volume\n";
        out << "0.5,0,0.3,1.2,3.0\n";
        out << "0.7,zero,0.3,1.2,3.0\n";
    }
    try {
        workload::replay_trace(p.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    fs::remove(p);
}

TEST_CASE("unsorted traces are rejected") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "slicesim_trace_unsorted.csv";
    {
        std::ofstream out(p);
        out << "arrival_s,slice_id,demand_fraction,cpu_work,data_volume\n";
        out << "2.0,0,0.3,1.2,3.0\n";
        out << "1.0,0,0.3,1.2,3.0\n";
    }
    CHECK_THROWS_AS(workload::replay_trace(p.string()), ParseError);
    fs::remove(p);
}
