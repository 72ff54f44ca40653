#pragma once

#include "covert/hmm.hpp"
#include "covert/mdp.hpp"

#include <string>
#include <vector>

namespace covert {

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

inline int manhattan_distance(Cell a, Cell b) {
    return (a.row > b.row ? a.row - b.row : b.row - a.row) + (a.col > b.col ? a.col - b.col : b.col - a.col);
}

/// Compass actions in index order.
enum class Move : ActionId { north = 0, east = 1, south = 2, west = 3 };
inline constexpr std::size_t kNumMoves = 4;

struct GridSpec {
    int rows = 0;
    int cols = 0;
    std::vector<Cell> walls;
    std::vector<Cell> penalty_cells;
    std::vector<Cell> dark_green;
    std::vector<Cell> light_green;
    Cell initial_cell;
    Cell agent_goal;
    Cell user_goal;
    double slip_beta = 0.1;
    double action_cost = 0.2;
    double penalty = 2.0;
    double goal_reward = 20.0;
    double gamma = 0.95;
    double dark_green_reduction = 0.2;
    double light_green_reduction = 0.1;
    double distance_decay = 0.05;

    bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }
    StateId state_of(Cell c) const { return static_cast<StateId>(c.row * cols + c.col); }
    Cell cell_of(StateId s) const { return {static_cast<int>(s) / cols, static_cast<int>(s) % cols}; }
    std::size_t num_cells() const { return static_cast<std::size_t>(rows * cols); }

    bool is_wall(Cell c) const;
    bool is_penalty(Cell c) const;
    bool is_dark_green(Cell c) const;
    bool is_light_green(Cell c) const;
};

struct Sensor {
    Cell location;
    std::vector<Cell> range_cells;
    double base_probability = 0.8;

    bool covers(Cell c) const;
};

/// Cells within Manhattan distance `radius` of `center`, inside the grid.
std::vector<Cell> cells_within(const GridSpec& spec, Cell center, int radius);

/// Throws InvalidModel on out-of-bounds cells, a wall on a goal or start, or
/// slip_beta outside [0, 0.5).
void validate_grid(const GridSpec& spec);

enum class GoalOwner { agent, user };

/// Slip dynamics with bouncing walls. The owner's goal is absorbing and pays
/// goal_reward on entry; every action costs action_cost; entering a penalty
/// cell costs penalty. Successor-dependent terms are folded into R(s,a) as
/// expectations.
Mdp build_gridworld(const GridSpec& spec, GoalOwner owner = GoalOwner::agent);

/// Clamped detection probability of `sensor` for an agent in `cell`.
double sensor_state_probability(const Sensor& sensor, Cell cell, const GridSpec& spec);

/// Symbol for a tuple of per-sensor bits (bit i is sensor i).
inline Symbol sensor_symbol(const std::vector<int>& bits) {
    Symbol s = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 0) s |= Symbol{1} << i;
    }
    return s;
}

/// Alphabet of 2^n sensor tuples plus a trailing null symbol emitted by
/// every action.
ObsModel build_sensor_obs_model(const std::vector<Sensor>& sensors, const GridSpec& spec);

inline Symbol null_symbol(std::size_t num_sensors) { return Symbol{1} << num_sensors; }

/// A grid plus its sensors.
struct GridWorld {
    GridSpec spec;
    std::vector<Sensor> sensors;
};

/// Parses an ASCII map: '#' wall, '.' open, 'X' penalty, 'g'/'G' light/dark
/// green, 'S' start, 'A' agent goal, 'U' user goal.
GridSpec parse_ascii_map(const std::vector<std::string>& lines);

}  // namespace covert
