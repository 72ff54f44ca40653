#pragma once

#include "covert/gridworld.hpp"
#include "covert/hmm.hpp"
#include "covert/mdp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>

namespace covert::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

/// MDP document: `states`, `actions` (name lists or counts), `transitions`
/// as [s, a, s', p] records, `initial_state`, `rewards` as [s, a, r]
/// records, `gamma`, `absorbing`. States and actions may be referenced by
/// name or index. Probabilities are validated on load.
Mdp mdp_from_json(const json& doc);
json mdp_to_json(const Mdp& mdp);

/// Observation document: `alphabet`, `state_emission` rows and optional
/// `action_emission` rows (ordered s * |A| + a). Without action rows every
/// action emits the `null` symbol, which is appended to the alphabet if
/// absent.
ObsModel obs_from_json(const json& doc, std::size_t num_states, std::size_t num_actions);
json obs_to_json(const ObsModel& obs);

/// Policy document: `num_states`, `num_actions`, `theta` rows.
PolicyParams policy_from_json(const json& doc);
json policy_to_json(const PolicyParams& params, const Mdp* mdp = nullptr);

/// Grid document: `map` (ASCII rows), scalar overrides (`slip_beta`,
/// `action_cost`, `penalty`, `goal_reward`, `gamma`) and `sensors` records
/// with `location`, either `radius` or `cells`, and `base_probability`.
GridWorld gridworld_from_json(const json& doc);

}  // namespace covert::io
