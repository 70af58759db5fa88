#include "roml/khazad_dum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>

namespace roml {

KhazadDumConfig KhazadDumConfig::standard() {
    return from_ascii({
        "###########",
        "#....G....#",
        "#.........#",
        "####=~###.#",
        "####=~###.#",
        "####=~###.#",
        "#.........#",
        "#...SSS...#",
        "###########",
    });
}

KhazadDumConfig KhazadDumConfig::from_ascii(const std::vector<std::string>& rows) {
    if (rows.empty() || rows.front().empty()) throw ParameterError("khazad dum map must be non-empty");
    KhazadDumConfig c;
    c.rows = static_cast<int>(rows.size());
    c.cols = static_cast<int>(rows.front().size());
    int goals = 0;
    for (int r = 0; r < c.rows; ++r) {
        if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != c.cols)
            throw ParameterError("khazad dum map rows must have equal width");
        for (int col = 0; col < c.cols; ++col) {
            const Cell here{r, col};
            switch (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) {
                case '.': break;
                case '~': c.abyss.push_back(here); break;
                case '=': c.bridge.push_back(here); break;
                case '#': c.walls.push_back(here); break;
                case 'S': c.starts.push_back(here); break;
                case 'G':
                    c.goal = here;
                    ++goals;
                    break;
                default: throw ParameterError("unknown khazad dum map character");
            }
        }
    }
    if (goals != 1) throw ParameterError("khazad dum map needs exactly one goal");
    return c;
}

KhazadDum::KhazadDum(KhazadDumConfig config) : config_(std::move(config)) {
    if (config_.rows < 1 || config_.cols < 1) throw ParameterError("khazad dum grid must be non-empty");
    if (config_.horizon < 1 || config_.episodes < 1) throw ParameterError("khazad dum needs T >= 1 and K >= 1");
    if (config_.starts.empty()) throw ParameterError("khazad dum needs at least one start cell");
    if (!(config_.rain_mean > 0.0)) throw ParameterError("khazad dum rain mean must be positive");
    auto inside = [&](Cell c) { return c.row >= 0 && c.row < config_.rows && c.col >= 0 && c.col < config_.cols; };
    kinds_.assign(num_states(), Kind::Floor);
    auto mark = [&](const std::vector<Cell>& cells, Kind k) {
        for (const auto& c : cells) {
            if (!inside(c)) throw ParameterError("khazad dum cell outside the grid");
            kinds_[static_cast<std::size_t>(state(c))] = k;
        }
    };
    mark(config_.abyss, Kind::Abyss);
    mark(config_.bridge, Kind::Bridge);
    mark(config_.walls, Kind::Wall);
    mark({config_.goal}, Kind::Goal);
    for (const auto& s : config_.starts)
        if (kind(s) != Kind::Floor) throw ParameterError("khazad dum start cells must be floor");

    kernel_.resize(num_states());
    for (int s = 0; s < static_cast<int>(num_states()); ++s) {
        const Cell c = cell(s);
        auto& k = kernel_[static_cast<std::size_t>(s)];
        if (config_.kernel_width <= 0.0) {
            k.emplace_back(s, 1.0);
            continue;
        }
        double total = 0.0;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const Cell n{c.row + dr, c.col + dc};
                if (!inside(n)) continue;
                const double w = std::exp(-(dr * dr + dc * dc) / (2.0 * config_.kernel_width * config_.kernel_width));
                k.emplace_back(state(n), w);
                total += w;
            }
        }
        for (auto& [idx, w] : k) w /= total;
    }
}

TaskDistribution KhazadDum::task_distribution() const { return TaskDistribution::exponential(1.0 / config_.rain_mean); }

KhazadDum::Kind KhazadDum::kind(Cell c) const {
    if (c.row < 0 || c.row >= config_.rows || c.col < 0 || c.col >= config_.cols) return Kind::Wall;
    return kinds_[static_cast<std::size_t>(state(c))];
}

int KhazadDum::goal_distance(Cell c) const {
    return std::abs(c.row - config_.goal.row) + std::abs(c.col - config_.goal.col);
}

double KhazadDum::step_cost(Cell c) const {
    const double unit = 1.0 / config_.horizon;
    if (kind(c) == Kind::Abyss) return unit;
    return unit * std::min(1.0, goal_distance(c) / config_.shaping_radius);
}

int KhazadDum::initial_state(const Task&, RandomStream& rng) const {
    return state(config_.starts[rng.index(config_.starts.size())]);
}

bool KhazadDum::is_absorbing(int s) const {
    const Kind k = kind(s);
    return k == Kind::Abyss || k == Kind::Goal;
}

Cell KhazadDum::move(Cell from, int dr, int dc) const {
    const Cell to{from.row + dr, from.col + dc};
    return kind(to) == Kind::Wall ? from : to;
}

Transition KhazadDum::step(int s, int action, const Task& task, RandomStream& rng) const {
    const double unit = 1.0 / config_.horizon;
    const Cell here = cell(s);
    Transition tr;
    tr.next_state = s;
    switch (kind(here)) {
        case Kind::Abyss: tr.reward = -unit; return tr;
        case Kind::Goal: return tr;
        default: break;
    }
    static constexpr int kDr[4] = {0, 0, -1, 1};
    static constexpr int kDc[4] = {-1, 1, 0, 0};
    if (action < 0 || action > 3) throw ParameterError("khazad dum action must be in 0..3");
    int dr = kDr[action];
    int dc = kDc[action];
    double damage = 0.0;
    if (kind(here) == Kind::Bridge) {
        const double tau = task.at(0);
        tr.hazard = true;
        if (tau > 0.0) {
            const int nr = std::clamp(static_cast<int>(std::lround(dr + rng.normal(0.0, tau))), -1, 1);
            const int nc = std::clamp(static_cast<int>(std::lround(dc + rng.normal(0.0, tau))), -1, 1);
            tr.slip = std::abs(nr - dr) + std::abs(nc - dc);
            dr = nr;
            dc = nc;
        }
        damage = config_.rain_damage * tau * unit;
    }
    const Cell to = move(here, dr, dc);
    tr.next_state = state(to);
    tr.reward = -step_cost(to) - damage;
    if (kind(to) == Kind::Goal) tr.reward += config_.goal_reward * unit;
    return tr;
}

void KhazadDum::observe(int s, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& [idx, w] : kernel_[static_cast<std::size_t>(s)]) out[static_cast<std::size_t>(idx)] = w;
}

int KhazadDum::shortest_path(Cell from, bool allow_bridge) const {
    std::vector<int> dist(num_states(), -1);
    std::deque<int> queue;
    dist[static_cast<std::size_t>(state(from))] = 0;
    queue.push_back(state(from));
    static constexpr int kDr[4] = {0, 0, -1, 1};
    static constexpr int kDc[4] = {-1, 1, 0, 0};
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        const Cell c = cell(s);
        if (kind(c) == Kind::Goal) return dist[static_cast<std::size_t>(s)];
        for (int a = 0; a < 4; ++a) {
            const Cell n = move(c, kDr[a], kDc[a]);
            const Kind k = kind(n);
            if (k == Kind::Abyss || (k == Kind::Bridge && !allow_bridge)) continue;
            const int ns = state(n);
            if (dist[static_cast<std::size_t>(ns)] >= 0) continue;
            dist[static_cast<std::size_t>(ns)] = dist[static_cast<std::size_t>(s)] + 1;
            queue.push_back(ns);
        }
    }
    return -1;
}

std::string KhazadDum::ascii_map() const {
    std::string out;
    for (int r = 0; r < config_.rows; ++r) {
        for (int c = 0; c < config_.cols; ++c) {
            const Cell here{r, c};
            char ch = '.';
            switch (kind(here)) {
                case Kind::Abyss: ch = '~'; break;
                case Kind::Bridge: ch = '='; break;
                case Kind::Wall: ch = '#'; break;
                case Kind::Goal: ch = 'G'; break;
                case Kind::Floor:
                    if (std::find(config_.starts.begin(), config_.starts.end(), here) != config_.starts.end()) ch = 'S';
                    break;
            }
            out += ch;
        }
        out += '\n';
    }
    return out;
}

}  // namespace roml
