#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

namespace slicesim::sim {

enum class EventKind : std::uint8_t {
    TaskArrival,
    TaskCompletion,
    MonitorTick,
    DecisionEpoch,
};

const char* to_string(EventKind k);

using EventHandle = std::uint64_t;
inline constexpr EventHandle kNoEvent = 0;

struct TraceEntry {
    double time = 0.0;
    EventKind kind = EventKind::TaskArrival;
    std::uint64_t payload = 0;
    std::uint64_t seq = 0;

    /// Order-sensitive fingerprint of (kind, time, payload).
    std::uint64_t digest(std::uint64_t prev) const;
};

/// Deterministic discrete-event core. The clock only advances while
/// processing events; ties at equal fire time are broken by scheduling
/// order (sequence number), giving a total order the replay of which is
/// bit-identical for a fixed schedule.
class Engine {
public:
    Engine() = default;

    double now() const { return now_; }

    /// Enqueue an event. fire_time must not precede the clock.
    EventHandle schedule(double fire_time, EventKind kind, std::uint64_t payload,
                         std::function<void()> action);

    /// Cancel a scheduled event. Returns false if the handle is unknown or
    /// the event already fired.
    bool cancel(EventHandle h);

    /// Process every event with fire_time <= t_end in (fire_time, seq)
    /// order, then set the clock to t_end. Returns the processed count.
    std::size_t run_until(double t_end);

    bool empty() const { return live_.empty(); }
    std::size_t pending_count() const { return live_.size(); }

    void set_trace_enabled(bool on) { trace_enabled_ = on; }
    const std::vector<TraceEntry>& trace() const { return trace_; }
    std::uint64_t trace_digest() const;

private:
    struct Entry {
        double fire_time;
        std::uint64_t seq;
        EventKind kind;
        std::uint64_t payload;
        std::function<void()> action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
            return a.seq > b.seq;
        }
    };

    double now_ = 0.0;
    std::uint64_t next_seq_ = 1;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    std::unordered_set<std::uint64_t> live_;
    std::unordered_set<std::uint64_t> cancelled_;
    bool trace_enabled_ = false;
    std::vector<TraceEntry> trace_;
};

} // namespace slicesim::sim
