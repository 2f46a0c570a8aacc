#include "slicesim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace slicesim::env {

namespace {
constexpr double kRelSlack = 1e-9; // rounding slack for minimum comparisons
}

void RewardWeights::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw ConfigError("reward weights alpha and beta must be non-negative");
    if (alpha + beta != 1.0)
        throw ConfigError("reward weights must satisfy alpha + beta = 1 exactly (got " +
                          std::to_string(alpha) + " + " + std::to_string(beta) + ")");
}

void EnvConfig::validate() const {
    topology.validate();
    workload.validate();
    weights.validate();
    if (slices.empty()) throw ConfigError("at least one slice is required");
    if (!(epoch_s > 0.0)) throw ConfigError("epoch_s must be positive");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (!(tick_interval_s > 0.0)) throw ConfigError("tick_interval_s must be positive");
    for (const SlicePlacement& p : slices) {
        if (topology.node_index(p.node_id) < 0)
            throw ConfigError("slice placed on unknown node: " + p.node_id);
        if (topology.link_index(p.link_id) < 0)
            throw ConfigError("slice placed on unknown link: " + p.link_id);
    }
}

std::vector<double> JointAction::flat() const {
    std::vector<double> v;
    v.reserve(cpu_fraction.size() * 2);
    for (std::size_t s = 0; s < cpu_fraction.size(); ++s) {
        v.push_back(cpu_fraction[s]);
        v.push_back(bw_fraction[s]);
    }
    return v;
}

JointAction JointAction::from_flat(std::span<const double> v) {
    if (v.size() % 2 != 0) throw ShapeMismatchError("flat action length must be even");
    JointAction a;
    a.cpu_fraction.reserve(v.size() / 2);
    a.bw_fraction.reserve(v.size() / 2);
    for (std::size_t i = 0; i < v.size(); i += 2) {
        a.cpu_fraction.push_back(v[i]);
        a.bw_fraction.push_back(v[i + 1]);
    }
    return a;
}

namespace {

// Rescale the components of each over-committed group by 1/sum, then nudge
// the largest component so the post-rounding sum cannot exceed 1.
void rescale_groups(std::vector<double>& vals, const std::vector<int>& group, int group_count) {
    for (int g = 0; g < group_count; ++g) {
        double sum = 0.0;
        for (std::size_t s = 0; s < vals.size(); ++s)
            if (group[s] == g) sum += vals[s];
        if (sum <= 1.0) continue;
        double scaled_sum = 0.0;
        std::size_t largest = 0;
        double largest_val = -1.0;
        for (std::size_t s = 0; s < vals.size(); ++s) {
            if (group[s] != g) continue;
            vals[s] /= sum;
            scaled_sum += vals[s];
            if (vals[s] > largest_val) {
                largest_val = vals[s];
                largest = s;
            }
        }
        if (scaled_sum > 1.0) vals[largest] -= scaled_sum - 1.0;
    }
}

} // namespace

JointAction project_action(const JointAction& raw, const std::vector<int>& slice_node,
                           const std::vector<int>& slice_link, int node_count, int link_count) {
    std::size_t n = raw.cpu_fraction.size();
    if (raw.bw_fraction.size() != n || slice_node.size() != n || slice_link.size() != n)
        throw ShapeMismatchError("joint action and placement vectors disagree on slice count");
    JointAction out = raw;
    for (double& v : out.cpu_fraction) v = std::clamp(v, 0.0, 1.0);
    for (double& v : out.bw_fraction) v = std::clamp(v, 0.0, 1.0);
    rescale_groups(out.cpu_fraction, slice_node, node_count);
    rescale_groups(out.bw_fraction, slice_link, link_count);
    return out;
}

double compute_reward(const std::vector<double>& delay_s, const std::vector<double>& energy_j,
                      const std::vector<model::Minima>& minima, const RewardWeights& w) {
    w.validate();
    std::size_t s_count = delay_s.size();
    if (s_count == 0) throw ShapeMismatchError("compute_reward needs at least one slice");
    if (energy_j.size() != s_count || minima.size() != s_count)
        throw ShapeMismatchError("compute_reward: per-slice vectors disagree on slice count");
    double sum = 0.0;
    for (std::size_t s = 0; s < s_count; ++s) {
        double lm = minima[s].delay_s;
        double em = minima[s].energy_j;
        if (!(lm > 0.0) || !(em > 0.0))
            throw DomainError("slice " + std::to_string(s) + ": minima must be positive");
        if (delay_s[s] < lm * (1.0 - kRelSlack))
            throw DomainError("slice " + std::to_string(s) + ": realized delay " +
                              std::to_string(delay_s[s]) + " below its minimum " +
                              std::to_string(lm));
        if (energy_j[s] < em * (1.0 - kRelSlack))
            throw DomainError("slice " + std::to_string(s) + ": realized energy " +
                              std::to_string(energy_j[s]) + " below its minimum " +
                              std::to_string(em));
        double term = w.alpha * std::min(1.0, lm / delay_s[s]) +
                      w.beta * std::min(1.0, em / energy_j[s]);
        sum += term;
    }
    return sum / static_cast<double>(s_count);
}

std::vector<double> ObsLayout::local_view(std::span<const double> global, int s, int node_index,
                                          int link_index) const {
    if (global.size() != static_cast<std::size_t>(global_width()))
        throw ShapeMismatchError("global observation width mismatch");
    if (s < 0 || s >= slices) throw OutOfRangeError("slice index out of range");
    std::vector<double> local;
    local.reserve(local_width());
    for (int f = 0; f < kSliceFields; ++f) local.push_back(global[slice_offset(s) + f]);
    local.push_back(global[node_offset(node_index)]);
    local.push_back(global[link_offset(link_index)]);
    local.push_back(global[phase_offset()]);
    return local;
}

namespace {

struct InFlight {
    model::Task task;
    model::Minima minima;
    double cpu_remaining = 0.0;
    double vol_remaining = 0.0;
    double energy_j = 0.0;
};

struct TaskRecord {
    int slice = 0;
    double delay_s = 0.0;
    double energy_j = 0.0;
    model::Minima minima;
};

struct Pending {
    std::uint64_t step_id = 0;
    std::int64_t episode = 0;
    std::int64_t step = 0;
    double step_end_s = 0.0;
    bool sealed = false;
    std::unordered_set<std::uint64_t> open;
    std::vector<TaskRecord> records;
};

struct SliceRt {
    double cpu_alloc = 0.0;
    double bw_alloc = 0.0;
    double last_demand = 0.0;
    std::deque<InFlight> system; // arrival order; front is the transmit head
    std::optional<workload::Generator> gen;
    sim::EventHandle arrival_event = sim::kNoEvent;
    std::vector<sim::EventHandle> trace_events;
    sim::EventHandle compute_event = sim::kNoEvent;
    sim::EventHandle transmit_event = sim::kNoEvent;

    bool busy() const { return !system.empty(); }

    double queued_cpu() const {
        double v = 0.0;
        for (const InFlight& f : system) v += f.cpu_remaining;
        return v;
    }
    double queued_vol() const {
        double v = 0.0;
        for (const InFlight& f : system) v += f.vol_remaining;
        return v;
    }
    // index of the task whose cpu phase is draining, or -1
    int compute_head() const {
        for (std::size_t i = 0; i < system.size(); ++i)
            if (system[i].cpu_remaining > 0.0) return static_cast<int>(i);
        return -1;
    }
    bool transmitting() const {
        return !system.empty() && system.front().cpu_remaining == 0.0 &&
               system.front().vol_remaining > 0.0 && bw_alloc > 0.0;
    }
};

} // namespace

struct SliceEnv::Impl {
    SliceEnv* owner;
    sim::Engine engine;
    std::vector<SliceRt> slices;
    std::vector<std::vector<model::Task>> trace_by_slice; // trace mode template
    bool trace_mode = false;
    bool accepting_arrivals = false;
    double last_account_s = 0.0;
    std::uint64_t next_step_id = 1;
    std::optional<Pending> current;
    std::deque<Pending> open_pendings;
    std::vector<MaterializedReward> outbox;
    // per-node conservation ledger
    std::vector<double> energy_integral_j;
    std::vector<double> energy_attres_j; // attributed + idle remainder

    explicit Impl(SliceEnv* o) : owner(o) {}

    const EnvConfig& cfg() const { return owner->cfg_; }
    const model::Topology& topo() const { return owner->cfg_.topology; }

    void load_trace() {
        trace_mode = true;
        trace_by_slice.assign(slices.size(), {});
        for (model::Task t : workload::replay_trace(cfg().trace_path)) {
            if (t.slice_id < 0 || t.slice_id >= static_cast<int>(slices.size()))
                throw ConfigError("trace references slice " + std::to_string(t.slice_id) +
                                  " outside the configured slice count");
            t.node_index = owner->slice_node_[t.slice_id];
            t.link_index = owner->slice_link_[t.slice_id];
            trace_by_slice[t.slice_id].push_back(t);
        }
    }

    void begin_episode() {
        engine = sim::Engine{};
        last_account_s = 0.0;
        accepting_arrivals = true;
        current.reset();
        open_pendings.clear();
        outbox.clear();
        energy_integral_j.assign(topo().nodes.size(), 0.0);
        energy_attres_j.assign(topo().nodes.size(), 0.0);
        std::uint64_t ep = static_cast<std::uint64_t>(owner->episode_);
        std::uint64_t task_seq = 1;
        for (std::size_t s = 0; s < slices.size(); ++s) {
            SliceRt& rt = slices[s];
            rt.cpu_alloc = rt.bw_alloc = rt.last_demand = 0.0;
            rt.system.clear();
            rt.arrival_event = rt.compute_event = rt.transmit_event = sim::kNoEvent;
            rt.trace_events.clear();
            if (trace_mode) {
                for (model::Task t : trace_by_slice[s]) {
                    t.id = task_seq++;
                    rt.trace_events.push_back(schedule_arrival(static_cast<int>(s), t));
                }
            } else {
                rt.gen.emplace(static_cast<int>(s), owner->slice_node_[s],
                               owner->slice_link_[s], cfg().workload,
                               sim::SeededRng(owner->seed_, sim::Stream::Workload,
                                              (ep << 16) | s));
                schedule_next_generated(static_cast<int>(s));
            }
        }
        schedule_tick(cfg().tick_interval_s);
    }

    sim::EventHandle schedule_arrival(int s, const model::Task& task) {
        return engine.schedule(task.arrival_s, sim::EventKind::TaskArrival, task.id,
                               [this, s, task] { on_arrival(s, task); });
    }

    void schedule_next_generated(int s) {
        if (!accepting_arrivals) return;
        model::Task task = slices[s].gen->next_task(topo(), engine.now());
        slices[s].arrival_event = schedule_arrival(s, task);
    }

    void schedule_tick(double at) {
        engine.schedule(at, sim::EventKind::MonitorTick, 0, [this, at] {
            account_to(at);
            emit_tick(at);
            schedule_tick(at + cfg().tick_interval_s);
        });
    }

    void on_arrival(int s, const model::Task& task) {
        double now = engine.now();
        account_to(now);
        SliceRt& rt = slices[s];
        if (accepting_arrivals) {
            InFlight f;
            f.task = task;
            f.minima = model::minima(task, topo());
            f.cpu_remaining = std::max(0.0, task.cpu_work);
            f.vol_remaining = std::max(0.0, task.data_volume);
            rt.system.push_back(std::move(f));
            rt.last_demand = task.demand_fraction;
            if (current) current->open.insert(task.id);
            complete_finished(s, now);
            reschedule(s);
        }
        if (!trace_mode) schedule_next_generated(s);
    }

    void on_compute_finish(int s, std::uint64_t task_id) {
        double now = engine.now();
        // account_to drains the head to exactly zero at the crossing this
        // event marks, so locate the task by id instead of by head index.
        account_to(now);
        SliceRt& rt = slices[s];
        rt.compute_event = sim::kNoEvent;
        auto it = std::find_if(rt.system.begin(), rt.system.end(),
                               [&](const InFlight& f) { return f.task.id == task_id; });
        if (it == rt.system.end())
            throw Error("compute finish fired for a task no longer in the system");
        for (auto j = rt.system.begin(); j != it; ++j)
            if (j->cpu_remaining > 0.0)
                throw Error("compute finish fired for a task that is not the compute head");
        it->cpu_remaining = 0.0;
        complete_finished(s, now);
        reschedule(s);
    }

    void on_transmit_finish(int s, std::uint64_t task_id) {
        double now = engine.now();
        account_to(now);
        SliceRt& rt = slices[s];
        rt.transmit_event = sim::kNoEvent;
        if (rt.system.empty() || rt.system.front().task.id != task_id)
            throw Error("transmit finish fired for a task that is not at the front");
        rt.system.front().vol_remaining = 0.0;
        complete_finished(s, now);
        reschedule(s);
    }

    // Pop every leading task with both phases drained and record completions.
    void complete_finished(int s, double now) {
        SliceRt& rt = slices[s];
        while (!rt.system.empty() && rt.system.front().cpu_remaining == 0.0 &&
               rt.system.front().vol_remaining == 0.0) {
            InFlight done = std::move(rt.system.front());
            rt.system.pop_front();
            TaskRecord rec;
            rec.slice = s;
            rec.delay_s = now - done.task.arrival_s;
            rec.energy_j = done.energy_j;
            rec.minima = done.minima;
            notify_completion(done.task.id, rec, now);
        }
    }

    void notify_completion(std::uint64_t task_id, const TaskRecord& rec, double now) {
        if (current && current->open.erase(task_id) > 0) current->records.push_back(rec);
        for (Pending& p : open_pendings)
            if (p.open.erase(task_id) > 0) p.records.push_back(rec);
        sweep_materialized(now);
    }

    void sweep_materialized(double now) {
        // creation order; later pendings can empty before earlier ones
        for (auto it = open_pendings.begin(); it != open_pendings.end();) {
            if (it->sealed && it->open.empty()) {
                materialize(*it, std::max(now, it->step_end_s));
                it = open_pendings.erase(it);
            } else {
                ++it;
            }
        }
    }

    void materialize(const Pending& p, double time) {
        std::size_t s_count = slices.size();
        std::vector<double> delay(s_count, 1.0), energy(s_count, 1.0);
        std::vector<model::Minima> mins(s_count, model::Minima{1.0, 1.0});
        std::vector<double> out_delay(s_count, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> out_energy(s_count, std::numeric_limits<double>::quiet_NaN());
        std::vector<int> counts(s_count, 0);
        std::vector<double> dsum(s_count, 0.0), esum(s_count, 0.0);
        std::vector<double> lmsum(s_count, 0.0), emsum(s_count, 0.0);
        for (const TaskRecord& r : p.records) {
            ++counts[r.slice];
            dsum[r.slice] += r.delay_s;
            esum[r.slice] += r.energy_j;
            lmsum[r.slice] += r.minima.delay_s;
            emsum[r.slice] += r.minima.energy_j;
        }
        for (std::size_t s = 0; s < s_count; ++s) {
            if (counts[s] == 0) continue; // empty slice keeps the unit sentinel
            delay[s] = dsum[s] / counts[s];
            energy[s] = esum[s];
            mins[s] = model::Minima{lmsum[s] / counts[s], emsum[s]};
            out_delay[s] = delay[s];
            out_energy[s] = energy[s];
        }
        double r = compute_reward(delay, energy, mins, cfg().weights);
        ++owner->audit_.rewards_materialized;
        if (!(r > 0.0 && r <= 1.0 + 1e-12)) ++owner->audit_.reward_bound_violations;
        MaterializedReward m;
        m.step_id = p.step_id;
        m.episode = p.episode;
        m.step = p.step;
        m.step_end_s = p.step_end_s;
        m.time_s = time;
        m.reward = std::min(r, 1.0);
        m.slice_delay_s = std::move(out_delay);
        m.slice_energy_j = std::move(out_energy);
        outbox.push_back(std::move(m));
    }

    // Close the accounting segment [last_account_s, t): drain the pipeline
    // heads, integrate power, attribute energy to busy slices and their
    // in-flight tasks. State is constant inside a segment because every
    // state change runs through an event handler that calls this first.
    void account_to(double t) {
        double dt = t - last_account_s;
        last_account_s = t;
        if (dt <= 0.0) return;
        const model::Topology& tp = topo();
        for (std::size_t n = 0; n < tp.nodes.size(); ++n) {
            const model::NodeSpec& node = tp.nodes[n];
            double util = 0.0;
            int busy = 0;
            for (std::size_t s = 0; s < slices.size(); ++s) {
                if (owner->slice_node_[s] != static_cast<int>(n) || !slices[s].busy()) continue;
                ++busy;
                util += slices[s].cpu_alloc;
            }
            if (util > 1.0 + 1e-12) ++owner->audit_.capacity_violations;
            double p = model::power(node, std::min(util, 1.0));
            energy_integral_j[n] += p * dt;
            if (busy == 0) {
                energy_attres_j[n] += p * dt; // idle remainder
            } else {
                for (std::size_t s = 0; s < slices.size(); ++s) {
                    if (owner->slice_node_[s] != static_cast<int>(n) || !slices[s].busy())
                        continue;
                    double share = model::attribute_energy(node, dt, std::min(util, 1.0),
                                                           slices[s].cpu_alloc, busy);
                    energy_attres_j[n] += share;
                    // every in-flight task of the slice accrues the full
                    // slice share over its residence
                    for (InFlight& f : slices[s].system) f.energy_j += share;
                }
            }
            double denom = std::max(energy_integral_j[n], 1e-9);
            double rel = std::abs(energy_integral_j[n] - energy_attres_j[n]) / denom;
            owner->audit_.energy_max_rel_err = std::max(owner->audit_.energy_max_rel_err, rel);
        }
        for (std::size_t l = 0; l < tp.links.size(); ++l) {
            double bw = 0.0;
            for (std::size_t s = 0; s < slices.size(); ++s)
                if (owner->slice_link_[s] == static_cast<int>(l) && slices[s].transmitting())
                    bw += slices[s].bw_alloc;
            if (bw > 1.0 + 1e-12) ++owner->audit_.capacity_violations;
        }
        for (std::size_t s = 0; s < slices.size(); ++s) {
            SliceRt& rt = slices[s];
            // Latch the transmit predicate before the cpu drain: a head that
            // reaches zero at the segment end must not transmit over the same
            // segment it finished computing in.
            bool tx = rt.transmitting();
            int h = rt.compute_head();
            if (h >= 0 && rt.cpu_alloc > 0.0) {
                double rate = rt.cpu_alloc * tp.nodes[owner->slice_node_[s]].cpu_cores;
                rt.system[h].cpu_remaining =
                    std::max(0.0, rt.system[h].cpu_remaining - rate * dt);
            }
            if (tx) {
                double rate = rt.bw_alloc * tp.links[owner->slice_link_[s]].capacity_gbps;
                rt.system.front().vol_remaining =
                    std::max(0.0, rt.system.front().vol_remaining - rate * dt);
            }
        }
    }

    // Recompute the slice's phase-finish events from current remainders and
    // rates. Call after any mutation, with accounting already closed.
    void reschedule(int s) {
        SliceRt& rt = slices[s];
        double now = engine.now();
        const model::Topology& tp = topo();
        if (rt.compute_event != sim::kNoEvent) {
            engine.cancel(rt.compute_event);
            rt.compute_event = sim::kNoEvent;
        }
        int h = rt.compute_head();
        if (h >= 0 && rt.cpu_alloc > 0.0) {
            double rate = rt.cpu_alloc * tp.nodes[owner->slice_node_[s]].cpu_cores;
            std::uint64_t id = rt.system[h].task.id;
            double at = now + rt.system[h].cpu_remaining / rate;
            rt.compute_event = engine.schedule(at, sim::EventKind::TaskCompletion, id,
                                               [this, s, id] { on_compute_finish(s, id); });
        }
        if (rt.transmit_event != sim::kNoEvent) {
            engine.cancel(rt.transmit_event);
            rt.transmit_event = sim::kNoEvent;
        }
        if (rt.transmitting()) {
            double rate = rt.bw_alloc * tp.links[owner->slice_link_[s]].capacity_gbps;
            std::uint64_t id = rt.system.front().task.id;
            double at = now + rt.system.front().vol_remaining / rate;
            rt.transmit_event = engine.schedule(at, sim::EventKind::TaskCompletion, id,
                                                [this, s, id] { on_transmit_finish(s, id); });
        }
    }

    void apply_allocation(const JointAction& a) {
        double now = engine.now();
        account_to(now);
        for (std::size_t s = 0; s < slices.size(); ++s) {
            slices[s].cpu_alloc = a.cpu_fraction[s];
            slices[s].bw_alloc = a.bw_fraction[s];
            reschedule(static_cast<int>(s));
        }
    }

    void emit_tick(double now) {
        if (!owner->on_tick) return;
        const model::Topology& tp = topo();
        TickSnapshot snap;
        snap.time_s = now;
        snap.node_util.assign(tp.nodes.size(), 0.0);
        snap.node_power_w.assign(tp.nodes.size(), 0.0);
        snap.link_tx_gbps.assign(tp.links.size(), 0.0);
        snap.link_rx_gbps.assign(tp.links.size(), 0.0);
        for (std::size_t s = 0; s < slices.size(); ++s) {
            if (slices[s].busy()) snap.node_util[owner->slice_node_[s]] += slices[s].cpu_alloc;
            if (slices[s].transmitting()) {
                double gbps =
                    slices[s].bw_alloc * tp.links[owner->slice_link_[s]].capacity_gbps;
                snap.link_tx_gbps[owner->slice_link_[s]] += gbps;
                snap.link_rx_gbps[owner->slice_link_[s]] += gbps;
            }
        }
        for (std::size_t n = 0; n < tp.nodes.size(); ++n) {
            snap.node_util[n] = std::min(snap.node_util[n], 1.0);
            snap.node_power_w[n] = model::power(tp.nodes[n], snap.node_util[n]);
        }
        owner->on_tick(snap);
    }

    std::vector<double> build_observation() const {
        const ObsLayout& lay = owner->layout_;
        const model::Topology& tp = topo();
        const EnvConfig& c = cfg();
        std::vector<double> obs(lay.global_width(), 0.0);
        for (std::size_t s = 0; s < slices.size(); ++s) {
            const SliceRt& rt = slices[s];
            double cores = tp.nodes[owner->slice_node_[s]].cpu_cores;
            double cap = tp.links[owner->slice_link_[s]].capacity_gbps;
            int off = lay.slice_offset(static_cast<int>(s));
            obs[off + 0] = std::clamp(rt.queued_cpu() / (cores * c.epoch_s), 0.0, 1.0);
            obs[off + 1] = std::clamp(rt.queued_vol() / (cap * c.epoch_s), 0.0, 1.0);
            obs[off + 2] = rt.cpu_alloc;
            obs[off + 3] = rt.bw_alloc;
            obs[off + 4] = rt.last_demand;
            if (rt.busy()) obs[lay.node_offset(owner->slice_node_[s])] += rt.cpu_alloc;
            if (rt.transmitting()) obs[lay.link_offset(owner->slice_link_[s])] += rt.bw_alloc;
        }
        for (std::size_t n = 0; n < tp.nodes.size(); ++n)
            obs[lay.node_offset(static_cast<int>(n))] =
                std::min(obs[lay.node_offset(static_cast<int>(n))], 1.0);
        double now = engine.now();
        double cycles = now / c.epoch_s;
        double phase = cycles - std::floor(cycles);
        if (std::abs(phase) < 1e-9 || std::abs(phase - 1.0) < 1e-9) phase = 0.0;
        obs[lay.phase_offset()] = phase;
        return obs;
    }

    void stop_arrivals() {
        accepting_arrivals = false;
        for (SliceRt& rt : slices) {
            if (rt.arrival_event != sim::kNoEvent) {
                engine.cancel(rt.arrival_event);
                rt.arrival_event = sim::kNoEvent;
            }
            for (sim::EventHandle h : rt.trace_events) engine.cancel(h);
            rt.trace_events.clear();
        }
    }
};

SliceEnv::SliceEnv(EnvConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    seed_ = seed;
    layout_.slices = static_cast<int>(cfg_.slices.size());
    layout_.nodes = static_cast<int>(cfg_.topology.nodes.size());
    layout_.links = static_cast<int>(cfg_.topology.links.size());
    for (const SlicePlacement& p : cfg_.slices) {
        slice_node_.push_back(cfg_.topology.node_index(p.node_id));
        slice_link_.push_back(cfg_.topology.link_index(p.link_id));
    }
    impl_ = std::make_unique<Impl>(this);
    impl_->slices.resize(cfg_.slices.size());
    if (!cfg_.trace_path.empty()) impl_->load_trace();
}

SliceEnv::~SliceEnv() = default;

std::vector<double> SliceEnv::reset() {
    ++episode_;
    step_index_ = 0;
    impl_->begin_episode();
    return impl_->build_observation();
}

StepResult SliceEnv::step(const JointAction& action) {
    if (episode_ < 0) throw NotResetError("step() before reset()");
    if (step_index_ >= cfg_.horizon)
        throw NotResetError("episode horizon reached; call reset()");
    if (action.cpu_fraction.size() != cfg_.slices.size() ||
        action.bw_fraction.size() != cfg_.slices.size())
        throw ShapeMismatchError("joint action slice count mismatch");
    Impl& im = *impl_;
    double t1 = static_cast<double>(step_index_ + 1) * cfg_.epoch_s;
    JointAction applied = project_action(action, slice_node_, slice_link_,
                                         layout_.nodes, layout_.links);
    im.apply_allocation(applied);
    Pending p;
    p.step_id = im.next_step_id++;
    p.episode = episode_;
    p.step = step_index_;
    for (const SliceRt& rt : im.slices)
        for (const InFlight& f : rt.system) p.open.insert(f.task.id);
    im.current = std::move(p);
    im.engine.schedule(t1, sim::EventKind::DecisionEpoch, static_cast<std::uint64_t>(step_index_),
                       [] {});
    im.engine.run_until(t1);
    im.account_to(t1);
    Pending sealed = std::move(*im.current);
    im.current.reset();
    sealed.sealed = true;
    sealed.step_end_s = t1;
    std::uint64_t step_id = sealed.step_id;
    if (sealed.open.empty())
        im.materialize(sealed, t1);
    else
        im.open_pendings.push_back(std::move(sealed));
    ++step_index_;
    StepResult r;
    r.observation = im.build_observation();
    r.applied = std::move(applied);
    r.step_id = step_id;
    r.done = step_index_ >= cfg_.horizon;
    return r;
}

std::vector<MaterializedReward> SliceEnv::drain_materialized() {
    std::vector<MaterializedReward> out;
    out.swap(impl_->outbox);
    return out;
}

void SliceEnv::flush_episode() {
    if (episode_ < 0) throw NotResetError("flush_episode() before reset()");
    Impl& im = *impl_;
    im.stop_arrivals();
    JointAction full;
    full.cpu_fraction.assign(cfg_.slices.size(), 1.0);
    full.bw_fraction.assign(cfg_.slices.size(), 1.0);
    im.apply_allocation(
        project_action(full, slice_node_, slice_link_, layout_.nodes, layout_.links));
    int guard = 0;
    while (!im.open_pendings.empty()) {
        if (++guard > 100000) throw Error("episode flush did not converge");
        im.engine.run_until(im.engine.now() + cfg_.epoch_s);
        im.account_to(im.engine.now());
    }
}

double SliceEnv::now() const { return impl_->engine.now(); }

std::size_t SliceEnv::open_pending_count() const {
    return impl_->open_pendings.size() + (impl_->current ? 1 : 0);
}

int SliceEnv::pending_open_tasks(std::uint64_t step_id) const {
    if (impl_->current && impl_->current->step_id == step_id)
        return static_cast<int>(impl_->current->open.size());
    for (const Pending& p : impl_->open_pendings)
        if (p.step_id == step_id) return static_cast<int>(p.open.size());
    return -1;
}

std::size_t SliceEnv::in_flight_tasks(int slice) const {
    if (slice < 0 || slice >= static_cast<int>(impl_->slices.size()))
        throw OutOfRangeError("slice index out of range");
    return impl_->slices[slice].system.size();
}

} // namespace slicesim::env
