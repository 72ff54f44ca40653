#include "covert/io.hpp"

#include <algorithm>
#include <fstream>

namespace covert::io {

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

namespace {

// Names from either a list of strings or a count.
std::vector<std::string> read_names(const json& doc, const char* key, const char* prefix) {
    if (!doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    const json& v = doc.at(key);
    std::vector<std::string> names;
    if (v.is_number_unsigned()) {
        for (std::size_t i = 0; i < v.get<std::size_t>(); ++i) names.push_back(prefix + std::to_string(i));
    } else if (v.is_array()) {
        for (const auto& n : v) names.push_back(n.is_string() ? n.get<std::string>() : n.dump());
    } else {
        throw FormatError(std::string("field '") + key + "' must be a list of names or a count");
    }
    if (names.empty()) throw FormatError(std::string("field '") + key + "' is empty");
    return names;
}

std::size_t resolve(const json& ref, const std::vector<std::string>& names, const char* what) {
    if (ref.is_number_unsigned()) {
        const auto i = ref.get<std::size_t>();
        if (i >= names.size()) throw FormatError(std::string(what) + " index " + std::to_string(i) + " out of range");
        return i;
    }
    if (ref.is_string()) {
        auto it = std::find(names.begin(), names.end(), ref.get<std::string>());
        if (it == names.end()) throw FormatError(std::string("unknown ") + what + " '" + ref.get<std::string>() + "'");
        return static_cast<std::size_t>(it - names.begin());
    }
    throw FormatError(std::string("bad ") + what + " reference " + ref.dump());
}

Table read_rows(const json& rows, std::size_t expected_rows, std::size_t cols, const char* what) {
    if (!rows.is_array() || rows.size() != expected_rows) {
        throw FormatError(std::string(what) + " must have " + std::to_string(expected_rows) + " rows");
    }
    Table t(expected_rows, cols);
    for (std::size_t r = 0; r < expected_rows; ++r) {
        if (!rows[r].is_array() || rows[r].size() != cols) {
            throw FormatError(std::string(what) + " row " + std::to_string(r) + " must have " + std::to_string(cols) +
                              " entries");
        }
        for (std::size_t c = 0; c < cols; ++c) t(r, c) = rows[r][c].get<double>();
    }
    return t;
}

json write_rows(const Table& t) {
    json rows = json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) rows.push_back(std::vector<double>(t.row(r).begin(), t.row(r).end()));
    return rows;
}

Cell read_cell(const json& v) {
    if (!v.is_array() || v.size() != 2) throw FormatError("cell must be [row, col]");
    return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

Mdp mdp_from_json(const json& doc) {
    try {
        const auto states = read_names(doc, "states", "s");
        const auto actions = read_names(doc, "actions", "a");
        Mdp mdp(states.size(), actions.size());
        mdp.state_names = states;
        mdp.action_names = actions;
        for (const auto& rec : doc.at("transitions")) {
            if (!rec.is_array() || rec.size() != 4) throw FormatError("transition records are [s, a, s', p]");
            const auto s = resolve(rec[0], states, "state");
            const auto a = resolve(rec[1], actions, "action");
            const auto n = resolve(rec[2], states, "state");
            mdp.p(s, a, n) += rec[3].get<double>();
        }
        if (doc.contains("rewards")) {
            for (const auto& rec : doc.at("rewards")) {
                if (!rec.is_array() || rec.size() != 3) throw FormatError("reward records are [s, a, r]");
                mdp.reward(resolve(rec[0], states, "state"), resolve(rec[1], actions, "action")) = rec[2].get<double>();
            }
        }
        mdp.initial_state = resolve(doc.at("initial_state"), states, "state");
        mdp.discount = doc.at("gamma").get<double>();
        if (doc.contains("absorbing")) {
            for (const auto& s : doc.at("absorbing")) mdp.absorbing[resolve(s, states, "state")] = true;
        }
        require_valid(mdp);
        return mdp;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed MDP document: ") + e.what());
    } catch (const InvalidModel& e) {
        throw FormatError(e.what());
    }
}

json mdp_to_json(const Mdp& mdp) {
    json doc;
    doc["states"] = mdp.state_names.size() == mdp.num_states ? json(mdp.state_names) : json(mdp.num_states);
    doc["actions"] = mdp.action_names.size() == mdp.num_actions ? json(mdp.action_names) : json(mdp.num_actions);
    json transitions = json::array();
    json rewards = json::array();
    for (StateId s = 0; s < mdp.num_states; ++s) {
        for (ActionId a = 0; a < mdp.num_actions; ++a) {
            for (StateId n = 0; n < mdp.num_states; ++n) {
                if (mdp.p(s, a, n) > 0.0) transitions.push_back({s, a, n, mdp.p(s, a, n)});
            }
            if (mdp.reward(s, a) != 0.0) rewards.push_back({s, a, mdp.reward(s, a)});
        }
    }
    doc["transitions"] = transitions;
    doc["rewards"] = rewards;
    doc["initial_state"] = mdp.initial_state;
    doc["gamma"] = mdp.discount;
    json absorbing = json::array();
    for (StateId s = 0; s < mdp.num_states; ++s) {
        if (mdp.absorbing[s]) absorbing.push_back(s);
    }
    doc["absorbing"] = absorbing;
    return doc;
}

ObsModel obs_from_json(const json& doc, std::size_t num_states, std::size_t num_actions) {
    try {
        ObsModel obs;
        obs.symbols = read_names(doc, "alphabet", "o");
        const bool has_actions = doc.contains("action_emission");
        auto null_it = std::find(obs.symbols.begin(), obs.symbols.end(), "null");
        const bool append_null = !has_actions && null_it == obs.symbols.end();
        const std::size_t declared = obs.symbols.size();
        if (append_null) obs.symbols.emplace_back("null");
        obs.alphabet_size = obs.symbols.size();

        const Table declared_rows = read_rows(doc.at("state_emission"), num_states, declared, "state_emission");
        obs.state_emission = Table(num_states, obs.alphabet_size);
        for (std::size_t s = 0; s < num_states; ++s) {
            for (std::size_t o = 0; o < declared; ++o) obs.state_emission(s, o) = declared_rows(s, o);
        }
        if (has_actions) {
            obs.action_emission = read_rows(doc.at("action_emission"), num_states * num_actions, declared,
                                            "action_emission");
        } else {
            const auto null_symbol = static_cast<Symbol>(
                std::find(obs.symbols.begin(), obs.symbols.end(), "null") - obs.symbols.begin());
            obs.action_emission = ObsModel::null_action_emission(num_states, num_actions, obs.alphabet_size, null_symbol);
        }
        if (auto report = validate_obs_model(obs, num_states, num_actions); !report.ok()) {
            throw FormatError("invalid observation model: " + report.violations.front());
        }
        return obs;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed observation document: ") + e.what());
    }
}

json obs_to_json(const ObsModel& obs) {
    json doc;
    if (obs.symbols.size() == obs.alphabet_size) {
        doc["alphabet"] = obs.symbols;
    } else {
        doc["alphabet"] = obs.alphabet_size;
    }
    doc["state_emission"] = write_rows(obs.state_emission);
    doc["action_emission"] = write_rows(obs.action_emission);
    return doc;
}

PolicyParams policy_from_json(const json& doc) {
    try {
        const auto states = doc.at("num_states").get<std::size_t>();
        const auto actions = doc.at("num_actions").get<std::size_t>();
        PolicyParams params(read_rows(doc.at("theta"), states, actions, "theta"));
        if (!params.theta.all_finite()) throw FormatError("policy has non-finite entries");
        return params;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed policy document: ") + e.what());
    }
}

json policy_to_json(const PolicyParams& params, const Mdp* mdp) {
    json doc;
    doc["num_states"] = params.num_states();
    doc["num_actions"] = params.num_actions();
    if (mdp != nullptr) {
        if (mdp->state_names.size() == params.num_states()) doc["state_names"] = mdp->state_names;
        if (mdp->action_names.size() == params.num_actions()) doc["action_names"] = mdp->action_names;
    }
    doc["theta"] = write_rows(params.theta);
    return doc;
}

GridWorld gridworld_from_json(const json& doc) {
    try {
        GridWorld world;
        world.spec = parse_ascii_map(doc.at("map").get<std::vector<std::string>>());
        auto& spec = world.spec;
        spec.slip_beta = doc.value("slip_beta", spec.slip_beta);
        spec.action_cost = doc.value("action_cost", spec.action_cost);
        spec.penalty = doc.value("penalty", spec.penalty);
        spec.goal_reward = doc.value("goal_reward", spec.goal_reward);
        spec.gamma = doc.value("gamma", spec.gamma);
        validate_grid(spec);
        for (const auto& rec : doc.at("sensors")) {
            Sensor sensor;
            sensor.location = read_cell(rec.at("location"));
            sensor.base_probability = rec.value("base_probability", 0.8);
            if (rec.contains("cells")) {
                for (const auto& c : rec.at("cells")) sensor.range_cells.push_back(read_cell(c));
            } else {
                sensor.range_cells = cells_within(spec, sensor.location, rec.at("radius").get<int>());
            }
            world.sensors.push_back(std::move(sensor));
        }
        if (world.sensors.empty()) throw FormatError("grid needs at least one sensor");
        return world;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed grid document: ") + e.what());
    } catch (const InvalidModel& e) {
        throw FormatError(e.what());
    }
}

}  // namespace covert::io
