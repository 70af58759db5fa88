#pragma once

#include <string>
#include <vector>

#include "roml/metamdp.hpp"

namespace roml {

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Khazad Dum map and reward constants. Row 0 is the top of the map.
struct KhazadDumConfig {
    int rows = 9;
    int cols = 11;
    std::vector<Cell> abyss;
    std::vector<Cell> bridge;
    std::vector<Cell> walls;
    Cell goal{3, 3};
    std::vector<Cell> starts;
    int horizon = 32;
    int episodes = 4;
    double shaping_radius = 5.0;
    double goal_reward = 5.0;     // in units of 1/T
    double rain_damage = 3.0;     // per bridge step, in units of 1/T, times tau
    double rain_mean = 0.1;
    double kernel_width = 0.5;    // soft one-hot kernel; 0 gives exact one-hot

    /// The default 9x11 map. A three-cell bridge at column 4 runs between a wall
    /// and the abyss; the detour is the corridor at column 9. Shortest paths from
    /// the middle start cell are 8 steps over the bridge and 14 around it.
    static KhazadDumConfig standard();

    /// Map from text rows using the ascii_map() alphabet: '.' floor, '~' abyss,
    /// '=' bridge, '#' wall, 'G' goal, 'S' start floor. Rows must have equal width
    /// and exactly one 'G'. Reward and rain constants keep their defaults.
    static KhazadDumConfig from_ascii(const std::vector<std::string>& rows);
};

/// Grid world where a rainy bridge offers a short but risky crossing over an
/// abyss. The task is the rain intensity tau.
class KhazadDum final : public MetaMdp {
public:
    enum Action : int { Left = 0, Right = 1, Up = 2, Down = 3 };
    enum class Kind : unsigned char { Floor, Abyss, Bridge, Wall, Goal };

    explicit KhazadDum(KhazadDumConfig config = KhazadDumConfig::standard());

    std::string name() const override { return "khazad_dum"; }
    std::size_t num_states() const override { return static_cast<std::size_t>(config_.rows * config_.cols); }
    int num_actions() const override { return 4; }
    int horizon() const override { return config_.horizon; }
    int episodes() const override { return config_.episodes; }
    TaskDistribution task_distribution() const override;

    int initial_state(const Task& task, RandomStream& rng) const override;
    bool is_absorbing(int state) const override;
    Transition step(int state, int action, const Task& task, RandomStream& rng) const override;
    void observe(int state, std::span<double> out) const override;

    const KhazadDumConfig& config() const { return config_; }
    Kind kind(Cell c) const;
    Kind kind(int state) const { return kind(cell(state)); }
    Cell cell(int state) const { return {state / config_.cols, state % config_.cols}; }
    int state(Cell c) const { return c.row * config_.cols + c.col; }
    int goal_distance(Cell c) const;
    /// Shaped step cost after arriving at `c` (0 at the goal, 1/T beyond the radius).
    double step_cost(Cell c) const;

    /// Deterministic move used by tests and shortest-path helpers (no rain).
    Cell move(Cell from, int dr, int dc) const;
    /// Shortest path length from `from` to the goal, optionally forbidding bridge cells; -1 if none.
    int shortest_path(Cell from, bool allow_bridge) const;

    std::string ascii_map() const;

private:
    KhazadDumConfig config_;
    std::vector<Kind> kinds_;
    std::vector<std::vector<std::pair<int, double>>> kernel_;  // sparse soft one-hot per state
};

}  // namespace roml
