#include "covert/gridworld.hpp"

#include <algorithm>
#include <sstream>

namespace covert {

namespace {

bool contains(const std::vector<Cell>& cells, Cell c) {
    return std::find(cells.begin(), cells.end(), c) != cells.end();
}

Cell step(Cell c, Move m) {
    switch (m) {
        case Move::north: return {c.row - 1, c.col};
        case Move::east: return {c.row, c.col + 1};
        case Move::south: return {c.row + 1, c.col};
        case Move::west: return {c.row, c.col - 1};
    }
    return c;
}

// The two directions orthogonal to m; north slips west/east.
std::pair<Move, Move> laterals(Move m) {
    if (m == Move::north || m == Move::south) return {Move::west, Move::east};
    return {Move::north, Move::south};
}

std::string describe(Cell c) {
    std::ostringstream os;
    os << "(" << c.row << "," << c.col << ")";
    return os.str();
}

}  // namespace

bool GridSpec::is_wall(Cell c) const { return contains(walls, c); }
bool GridSpec::is_penalty(Cell c) const { return contains(penalty_cells, c); }
bool GridSpec::is_dark_green(Cell c) const { return contains(dark_green, c); }
bool GridSpec::is_light_green(Cell c) const { return contains(light_green, c); }

bool Sensor::covers(Cell c) const { return contains(range_cells, c); }

std::vector<Cell> cells_within(const GridSpec& spec, Cell center, int radius) {
    std::vector<Cell> out;
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            if (manhattan_distance({r, c}, center) <= radius) out.push_back({r, c});
        }
    }
    return out;
}

void validate_grid(const GridSpec& spec) {
    if (spec.rows <= 0 || spec.cols <= 0) throw InvalidModel("grid must have positive dimensions");
    auto check_cells = [&](const std::vector<Cell>& cells, const char* what) {
        for (const auto& c : cells) {
            if (!spec.in_bounds(c)) throw InvalidModel(std::string(what) + " cell " + describe(c) + " out of bounds");
        }
    };
    check_cells(spec.walls, "wall");
    check_cells(spec.penalty_cells, "penalty");
    check_cells(spec.dark_green, "dark green");
    check_cells(spec.light_green, "light green");
    for (auto [cell, what] : {std::pair{spec.initial_cell, "initial"}, std::pair{spec.agent_goal, "agent goal"},
                              std::pair{spec.user_goal, "user goal"}}) {
        if (!spec.in_bounds(cell)) throw InvalidModel(std::string(what) + " cell " + describe(cell) + " out of bounds");
        if (spec.is_wall(cell)) throw InvalidModel(std::string(what) + " cell " + describe(cell) + " is a wall");
    }
    if (!(spec.slip_beta >= 0.0 && spec.slip_beta < 0.5)) throw InvalidModel("slip_beta must lie in [0, 0.5)");
    if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw InvalidModel("gamma must lie strictly inside (0,1)");
}

Mdp build_gridworld(const GridSpec& spec, GoalOwner owner) {
    validate_grid(spec);
    const std::size_t n = spec.num_cells();
    Mdp mdp(n, kNumMoves);
    mdp.discount = spec.gamma;
    mdp.initial_state = spec.state_of(spec.initial_cell);
    const Cell goal = owner == GoalOwner::agent ? spec.agent_goal : spec.user_goal;
    mdp.absorbing[spec.state_of(goal)] = true;
    mdp.action_names = {"N", "E", "S", "W"};
    mdp.state_names.reserve(n);
    for (StateId s = 0; s < n; ++s) mdp.state_names.push_back(describe(spec.cell_of(s)));

    auto blocked = [&](Cell c) { return !spec.in_bounds(c) || spec.is_wall(c); };
    for (StateId s = 0; s < n; ++s) {
        const Cell here = spec.cell_of(s);
        for (ActionId a = 0; a < kNumMoves; ++a) {
            if (mdp.absorbing[s] || spec.is_wall(here)) {
                mdp.p(s, a, s) = 1.0;
                continue;
            }
            const Move move = static_cast<Move>(a);
            const auto [left, right] = laterals(move);
            const std::pair<Move, double> components[] = {
                {move, 1.0 - 2.0 * spec.slip_beta}, {left, spec.slip_beta}, {right, spec.slip_beta}};
            for (const auto& [m, prob] : components) {
                if (prob == 0.0) continue;
                const Cell target = step(here, m);
                const StateId next = blocked(target) ? s : spec.state_of(target);
                mdp.p(s, a, next) += prob;
            }
            double r = -spec.action_cost;
            for (StateId next = 0; next < n; ++next) {
                const double p = mdp.p(s, a, next);
                if (p == 0.0 || next == s) continue;
                const Cell there = spec.cell_of(next);
                if (spec.is_penalty(there)) r -= p * spec.penalty;
                if (there == goal) r += p * spec.goal_reward;
            }
            mdp.reward(s, a) = r;
        }
    }
    return mdp;
}

double sensor_state_probability(const Sensor& sensor, Cell cell, const GridSpec& spec) {
    if (!sensor.covers(cell)) return 0.0;
    double p = sensor.base_probability - spec.distance_decay * manhattan_distance(cell, sensor.location);
    if (spec.is_dark_green(cell)) p -= spec.dark_green_reduction;
    if (spec.is_light_green(cell)) p -= spec.light_green_reduction;
    return std::clamp(p, 0.0, 1.0);
}

ObsModel build_sensor_obs_model(const std::vector<Sensor>& sensors, const GridSpec& spec) {
    if (sensors.empty()) throw InvalidModel("at least one sensor is required");
    if (sensors.size() > 16) throw InvalidModel("too many sensors for a tuple alphabet");
    for (const auto& sensor : sensors) {
        if (!spec.in_bounds(sensor.location)) throw InvalidModel("sensor location out of bounds");
        if (!(sensor.base_probability >= 0.0 && sensor.base_probability <= 1.0)) {
            throw InvalidModel("sensor base probability must lie in [0,1]");
        }
    }
    const std::size_t k = sensors.size();
    const std::size_t tuples = std::size_t{1} << k;
    ObsModel obs;
    obs.alphabet_size = tuples + 1;
    for (Symbol o = 0; o < tuples; ++o) {
        std::string name = "(";
        for (std::size_t i = 0; i < k; ++i) name += (i ? "," : "") + std::to_string((o >> i) & 1U);
        obs.symbols.push_back(name + ")");
    }
    obs.symbols.emplace_back("null");

    const std::size_t n = spec.num_cells();
    obs.state_emission = Table(n, obs.alphabet_size);
    std::vector<double> p(k);
    for (StateId s = 0; s < n; ++s) {
        const Cell cell = spec.cell_of(s);
        for (std::size_t i = 0; i < k; ++i) p[i] = sensor_state_probability(sensors[i], cell, spec);
        for (Symbol o = 0; o < tuples; ++o) {
            double prob = 1.0;
            for (std::size_t i = 0; i < k; ++i) prob *= ((o >> i) & 1U) ? p[i] : 1.0 - p[i];
            obs.state_emission(s, o) = prob;
        }
    }
    obs.action_emission = ObsModel::null_action_emission(n, kNumMoves, obs.alphabet_size, tuples);
    return obs;
}

GridSpec parse_ascii_map(const std::vector<std::string>& lines) {
    if (lines.empty()) throw InvalidModel("empty map");
    GridSpec spec;
    spec.rows = static_cast<int>(lines.size());
    spec.cols = static_cast<int>(lines.front().size());
    bool start = false, agent = false, user = false;
    for (int r = 0; r < spec.rows; ++r) {
        const auto& line = lines[static_cast<std::size_t>(r)];
        if (static_cast<int>(line.size()) != spec.cols) throw InvalidModel("map rows have unequal length");
        for (int c = 0; c < spec.cols; ++c) {
            const Cell cell{r, c};
            switch (line[static_cast<std::size_t>(c)]) {
                case '.': break;
                case '#': spec.walls.push_back(cell); break;
                case 'X': spec.penalty_cells.push_back(cell); break;
                case 'g': spec.light_green.push_back(cell); break;
                case 'G': spec.dark_green.push_back(cell); break;
                case 'S': spec.initial_cell = cell; start = true; break;
                case 'A': spec.agent_goal = cell; agent = true; break;
                case 'U': spec.user_goal = cell; user = true; break;
                default: throw InvalidModel(std::string("unknown map character '") + line[static_cast<std::size_t>(c)] + "'");
            }
        }
    }
    if (!start || !agent || !user) throw InvalidModel("map must mark S, A and U");
    return spec;
}

}  // namespace covert
