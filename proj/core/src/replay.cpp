#include "slicesim/replay.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace slicesim::replay {

void ReplayConfig::validate() const {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    if (frozen_capacity == 0) throw ConfigError("frozen capacity must be positive");
}

DelayedReplayBuffer::DelayedReplayBuffer(ReplayConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void DelayedReplayBuffer::drop_oldest_frozen() {
    while (!frozen_order_.empty()) {
        std::uint64_t id = frozen_order_.front();
        frozen_order_.pop_front();
        if (frozen_.erase(id) > 0) {
            ++stale_frozen_;
            return;
        }
        // id already thawed; keep scanning
    }
}

std::uint64_t DelayedReplayBuffer::push_frozen(Transition t, double now_s) {
    if (!seen_ids_.insert(t.step_id).second)
        throw DuplicateStepError("step_id " + std::to_string(t.step_id) + " already pushed");
    if (frozen_.size() >= cfg_.frozen_capacity) drop_oldest_frozen();
    t.status = Status::Frozen;
    t.created_s = now_s;
    std::uint64_t id = t.step_id;
    frozen_order_.push_back(id);
    frozen_.emplace(id, std::move(t));
    return id;
}

void DelayedReplayBuffer::thaw(std::uint64_t handle, double reward, double now_s) {
    auto it = frozen_.find(handle);
    if (it == frozen_.end()) {
        if (seen_ids_.count(handle))
            throw AlreadyThawedError("step_id " + std::to_string(handle) +
                                     " is not frozen any more");
        throw UnknownHandleError("no transition with step_id " + std::to_string(handle));
    }
    Transition t = std::move(it->second);
    frozen_.erase(it);
    t.reward = reward;
    t.status = Status::Thawed;
    t.thawed_s = now_s;
    ring_.push_back(std::move(t));
    if (ring_.size() > cfg_.capacity) ring_.pop_front();
}

std::vector<Transition> DelayedReplayBuffer::sample(std::size_t batch,
                                                    sim::SeededRng& rng) const {
    std::size_t n = ring_.size();
    if (batch > n)
        throw InsufficientThawedError("requested batch " + std::to_string(batch) + " but only " +
                                      std::to_string(n) + " thawed transitions");
    // Floyd's subset sampling: uniform over subsets, O(batch) work.
    std::unordered_set<std::size_t> chosen;
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i = n - batch; i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_index(i + 1));
        if (!chosen.insert(j).second) {
            chosen.insert(i);
            j = i;
        }
        const Transition& t = ring_[j];
        if (t.status != Status::Thawed)
            throw FrozenInBatchError("frozen transition reached the sample path");
        out.push_back(t);
    }
    return out;
}

std::size_t DelayedReplayBuffer::expire_frozen(double created_before_s) {
    std::size_t dropped = 0;
    for (auto it = frozen_.begin(); it != frozen_.end();) {
        if (it->second.created_s < created_before_s) {
            it = frozen_.erase(it);
            ++dropped;
        } else {
            ++it;
        }
    }
    stale_frozen_ += dropped;
    return dropped;
}

static nlohmann::json to_json(const Transition& t) {
    nlohmann::json j;
    j["step_id"] = t.step_id;
    j["status"] = t.status == Status::Frozen ? "frozen" : "thawed";
    j["created_s"] = t.created_s;
    j["observation"] = t.observation;
    j["joint_action"] = t.joint_action;
    j["next_observation"] = t.next_observation;
    j["done"] = t.done;
    if (t.status == Status::Thawed) {
        j["thawed_s"] = t.thawed_s;
        j["reward"] = t.reward;
    }
    return j;
}

void DelayedReplayBuffer::dump(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write buffer dump: " + path);
    for (std::uint64_t id : frozen_order_) {
        auto it = frozen_.find(id);
        if (it != frozen_.end()) out << to_json(it->second).dump() << "\n";
    }
    for (const Transition& t : ring_) out << to_json(t).dump() << "\n";
    if (!out) throw IoError("failed writing buffer dump: " + path);
}

} // namespace slicesim::replay
