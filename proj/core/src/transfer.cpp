#include "slicesim/transfer.hpp"

#include <unordered_set>

namespace slicesim::transfer {

namespace {

using env::ObsLayout;

// Critic input columns: [5 per slice][nodes][links][phase][2 per slice].
// new_to_old[c'] is the source column for new column c', or -1 for a fresh
// zero column.
std::vector<int> critic_column_map(const ObsLayout& old_l, const ObsLayout& new_l,
                                   const std::vector<int>& new_to_old_slice) {
    int mid = old_l.nodes + old_l.links + 1; // node, link, phase columns
    int old_action_base = ObsLayout::kSliceFields * old_l.slices + mid;
    std::vector<int> map;
    map.reserve(ObsLayout::kSliceFields * new_l.slices + mid + 2 * new_l.slices);
    for (int s = 0; s < new_l.slices; ++s)
        for (int f = 0; f < ObsLayout::kSliceFields; ++f)
            map.push_back(new_to_old_slice[s] < 0
                              ? -1
                              : ObsLayout::kSliceFields * new_to_old_slice[s] + f);
    for (int k = 0; k < mid; ++k)
        map.push_back(ObsLayout::kSliceFields * old_l.slices + k);
    for (int s = 0; s < new_l.slices; ++s)
        for (int j = 0; j < 2; ++j)
            map.push_back(new_to_old_slice[s] < 0 ? -1
                                                  : old_action_base + 2 * new_to_old_slice[s] + j);
    return map;
}

// Rebuild a network around a permuted/extended first-layer input. Columns
// mapped to -1 get zero weights; every other parameter is copied.
std::pair<nn::MlpSpec, nn::ParamSet> remap_input(const nn::MlpSpec& spec,
                                                 const nn::ParamSet& params,
                                                 const std::vector<int>& new_to_old) {
    nn::MlpSpec out_spec = spec;
    out_spec.layer_widths[0] = static_cast<int>(new_to_old.size());
    out_spec.validate();
    nn::ParamSet out;
    out.values.resize(out_spec.param_count());
    int old_in = spec.layer_widths[0];
    int new_in = out_spec.layer_widths[0];
    int first_out = spec.layer_widths[1];
    for (int o = 0; o < first_out; ++o)
        for (int c = 0; c < new_in; ++c)
            out.values[static_cast<std::size_t>(o) * new_in + c] =
                new_to_old[c] < 0
                    ? 0.0
                    : params.values[static_cast<std::size_t>(o) * old_in + new_to_old[c]];
    std::size_t old_tail = static_cast<std::size_t>(first_out) * old_in;
    std::size_t new_tail = static_cast<std::size_t>(first_out) * new_in;
    std::size_t tail_len = params.values.size() - old_tail; // first bias onward
    for (std::size_t k = 0; k < tail_len; ++k)
        out.values[new_tail + k] = params.values[old_tail + k];
    return {out_spec, out};
}

nn::ParamSet mean_params(const std::vector<const nn::ParamSet*>& sets) {
    nn::ParamSet out;
    out.values.assign(sets.front()->values.size(), 0.0);
    for (const nn::ParamSet* p : sets) {
        if (p->values.size() != out.values.size())
            throw WidthMismatchError("cannot average parameter sets of different layouts");
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += p->values[k];
    }
    for (double& v : out.values) v /= static_cast<double>(sets.size());
    return out;
}

} // namespace

agents::MaddpgPopulation expand(const agents::MaddpgPopulation& pop,
                                std::vector<int> new_slice_node,
                                std::vector<int> new_slice_link, bool average_init,
                                sim::SeededRng* fresh_rng) {
    int old_n = pop.slices();
    int new_n = static_cast<int>(new_slice_node.size());
    if (new_slice_link.size() != new_slice_node.size())
        throw WidthMismatchError("placement vectors disagree on slice count");
    if (new_n < old_n)
        throw ShrinkNotSupportedError("expand cannot reduce the slice count; use contract");
    if (!average_init && fresh_rng == nullptr)
        throw ConfigError("fresh-random initialization needs an rng");
    for (int s = 0; s < old_n; ++s)
        if (new_slice_node[s] != pop.slice_node()[s] || new_slice_link[s] != pop.slice_link()[s])
            throw WidthMismatchError("existing slice placements must be preserved by expand");
    // The critic's node/link columns carry over, so the topology has to match.
    for (int s = 0; s < new_n; ++s)
        if (new_slice_node[s] < 0 || new_slice_node[s] >= pop.layout().nodes ||
            new_slice_link[s] < 0 || new_slice_link[s] >= pop.layout().links)
            throw WidthMismatchError("new placement references a node or link outside the "
                                     "trained topology");

    ObsLayout old_l = pop.layout();
    ObsLayout new_l = old_l;
    new_l.slices = new_n;
    std::vector<int> slice_map(new_n);
    for (int s = 0; s < new_n; ++s) slice_map[s] = s < old_n ? s : -1;
    std::vector<int> col_map = critic_column_map(old_l, new_l, slice_map);

    std::vector<agents::AgentBundle> bundles;
    for (int s = 0; s < old_n; ++s) {
        const agents::AgentBundle& src = pop.bundle(s);
        agents::AgentBundle b;
        b.slice_id = s;
        b.actor_spec = src.actor_spec;
        b.actor = src.actor;
        std::tie(b.critic_spec, b.critic) = remap_input(src.critic_spec, src.critic, col_map);
        b.target_actor = b.actor;
        b.target_critic = b.critic;
        b.actor_opt.reset(b.actor.values.size());
        b.critic_opt.reset(b.critic.values.size());
        b.sigma = pop.hyper().noise_sigma;
        bundles.push_back(std::move(b));
    }
    for (int s = old_n; s < new_n; ++s) {
        agents::AgentBundle b;
        b.slice_id = s;
        b.actor_spec = pop.bundle(0).actor_spec;
        if (average_init) {
            std::vector<const nn::ParamSet*> actors, critics;
            for (int o = 0; o < old_n; ++o) {
                actors.push_back(&pop.bundle(o).actor);
                critics.push_back(&pop.bundle(o).critic);
            }
            b.actor = mean_params(actors);
            std::tie(b.critic_spec, b.critic) =
                remap_input(pop.bundle(0).critic_spec, mean_params(critics), col_map);
        } else {
            b.actor = nn::init_params(b.actor_spec, *fresh_rng, 0.1);
            b.critic_spec = agents::MaddpgPopulation::critic_spec(new_l, pop.hyper());
            b.critic = nn::init_params(b.critic_spec, *fresh_rng);
        }
        b.target_actor = b.actor;
        b.target_critic = b.critic;
        b.actor_opt.reset(b.actor.values.size());
        b.critic_opt.reset(b.critic.values.size());
        b.sigma = pop.hyper().noise_sigma;
        bundles.push_back(std::move(b));
    }
    return agents::MaddpgPopulation(new_l, std::move(new_slice_node), std::move(new_slice_link),
                                    pop.hyper(), std::move(bundles));
}

agents::MaddpgPopulation contract(const agents::MaddpgPopulation& pop,
                                  const std::vector<int>& survivors) {
    if (survivors.empty()) throw EmptySurvivorSetError("survivor set must be non-empty");
    std::unordered_set<int> seen;
    for (int s : survivors) {
        if (s < 0 || s >= pop.slices())
            throw OutOfRangeError("survivor " + std::to_string(s) + " is not an existing slice");
        if (!seen.insert(s).second)
            throw OutOfRangeError("survivor " + std::to_string(s) + " listed twice");
    }
    ObsLayout old_l = pop.layout();
    ObsLayout new_l = old_l;
    new_l.slices = static_cast<int>(survivors.size());
    std::vector<int> col_map = critic_column_map(old_l, new_l, survivors);
    std::vector<int> node_map, link_map;
    std::vector<agents::AgentBundle> bundles;
    for (int i = 0; i < new_l.slices; ++i) {
        const agents::AgentBundle& src = pop.bundle(survivors[i]);
        node_map.push_back(pop.slice_node()[survivors[i]]);
        link_map.push_back(pop.slice_link()[survivors[i]]);
        agents::AgentBundle b;
        b.slice_id = i;
        b.actor_spec = src.actor_spec;
        b.actor = src.actor;
        std::tie(b.critic_spec, b.critic) = remap_input(src.critic_spec, src.critic, col_map);
        b.target_actor = b.actor;
        b.target_critic = b.critic;
        b.actor_opt.reset(b.actor.values.size());
        b.critic_opt.reset(b.critic.values.size());
        b.sigma = pop.hyper().noise_sigma;
        bundles.push_back(std::move(b));
    }
    return agents::MaddpgPopulation(new_l, std::move(node_map), std::move(link_map), pop.hyper(),
                                    std::move(bundles));
}

} // namespace slicesim::transfer
