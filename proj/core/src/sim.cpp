#include "slicesim/sim.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace slicesim::sim {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed, Stream stream, std::uint64_t salt)
    : SeededRng(seed, mix64(static_cast<std::uint64_t>(stream) + mix64(salt))) {}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t raw_stream)
    : seed_(seed), stream_(raw_stream), engine_(mix64(seed + mix64(raw_stream))) {}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform() {
    // 53 random bits into [0,1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t SeededRng::uniform_index(std::size_t n) {
    // modulo bias is negligible for n << 2^64 and keeps the draw count fixed
    return static_cast<std::size_t>(next_u64() % n);
}

double SeededRng::exponential(double rate) {
    double u = uniform();
    return -std::log1p(-u) / rate;
}

double SeededRng::normal(double mean, double stddev) {
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925287 * u2);
}

const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::TaskArrival: return "TaskArrival";
    case EventKind::TaskCompletion: return "TaskCompletion";
    case EventKind::MonitorTick: return "MonitorTick";
    case EventKind::DecisionEpoch: return "DecisionEpoch";
    }
    return "?";
}

std::uint64_t TraceEntry::digest(std::uint64_t prev) const {
    std::uint64_t h = prev;
    h = mix64(h ^ static_cast<std::uint64_t>(kind));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(time));
    h = mix64(h ^ payload);
    return h;
}

EventHandle Engine::schedule(double fire_time, EventKind kind, std::uint64_t payload,
                             std::function<void()> action) {
    if (fire_time < now_) {
        throw PastTimeError("schedule: fire_time " + std::to_string(fire_time) +
                            " precedes clock " + std::to_string(now_));
    }
    Entry e{fire_time, next_seq_++, kind, payload, std::move(action)};
    EventHandle h = e.seq;
    queue_.push(std::move(e));
    live_.insert(h);
    return h;
}

bool Engine::cancel(EventHandle h) {
    if (live_.erase(h) == 0) return false;
    cancelled_.insert(h);
    return true;
}

std::size_t Engine::run_until(double t_end) {
    if (t_end < now_) {
        throw PastTimeError("run_until: t_end precedes clock");
    }
    std::size_t processed = 0;
    while (!queue_.empty() && queue_.top().fire_time <= t_end) {
        Entry e = queue_.top();
        queue_.pop();
        if (cancelled_.count(e.seq)) {
            cancelled_.erase(e.seq);
            continue;
        }
        live_.erase(e.seq);
        now_ = e.fire_time;
        if (trace_enabled_) trace_.push_back(TraceEntry{e.fire_time, e.kind, e.payload, e.seq});
        if (e.action) e.action();
        ++processed;
    }
    now_ = t_end;
    return processed;
}

std::uint64_t Engine::trace_digest() const {
    std::uint64_t h = 0x5eed5eed5eed5eedULL;
    for (const auto& t : trace_) h = t.digest(h);
    return h;
}

} // namespace slicesim::sim
