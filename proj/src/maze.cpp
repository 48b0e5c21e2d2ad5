#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "diiq/env.hpp"

namespace diiq {

MazeLayout MazeLayout::parse(const std::string& text) {
    MazeLayout m;
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw std::invalid_argument("empty maze layout");
    m.height = static_cast<int>(rows.size());
    m.width = static_cast<int>(rows[0].size());
    m.walls.assign(static_cast<size_t>(m.width) * m.height, 0);
    int starts = 0, goals = 0;
    for (int y = 0; y < m.height; ++y) {
        if (static_cast<int>(rows[y].size()) != m.width)
            throw std::invalid_argument("ragged maze layout at row " + std::to_string(y));
        for (int x = 0; x < m.width; ++x) {
            char c = rows[y][x];
            switch (c) {
                case '#': m.walls[static_cast<size_t>(y) * m.width + x] = 1; break;
                case '.': break;
                case 'S': m.start_x = x; m.start_y = y; ++starts; break;
                case 'G': m.goal_x = x; m.goal_y = y; ++goals; break;
                default:
                    throw std::invalid_argument(std::string("bad maze cell '") + c + "'");
            }
        }
    }
    if (starts != 1 || goals != 1)
        throw std::invalid_argument("maze needs exactly one S and one G");
    if (m.start_x == m.goal_x && m.start_y == m.goal_y)
        throw std::invalid_argument("start equals goal");
    if (maze_shortest_steps(m, make_action_pattern("standard")) < 0)
        throw std::invalid_argument("goal unreachable from start under the standard pattern");
    return m;
}

MazeLayout MazeLayout::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open maze layout: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::pair<int, int> maze_apply_move(const MazeLayout& layout, int x, int y,
                                    const std::pair<float, float>& move) {
    int dx = static_cast<int>(std::lround(move.first));
    int dy = static_cast<int>(std::lround(move.second));
    if (dx != 0 && dy != 0) {
        // diagonal single hop: only the target cell must be free
        if (layout.wall(x + dx, y + dy)) return {x, y};
        return {x + dx, y + dy};
    }
    // axis move, possibly multi-cell: every cell along the way must be free
    int steps = std::abs(dx) + std::abs(dy);
    int sx = dx == 0 ? 0 : (dx > 0 ? 1 : -1);
    int sy = dy == 0 ? 0 : (dy > 0 ? 1 : -1);
    int cx = x, cy = y;
    for (int i = 0; i < steps; ++i) {
        if (layout.wall(cx + sx, cy + sy)) return {x, y};
        cx += sx;
        cy += sy;
    }
    return {cx, cy};
}

int maze_shortest_steps(const MazeLayout& layout, const ActionPattern& pattern) {
    std::vector<int> dist(static_cast<size_t>(layout.width) * layout.height, -1);
    auto idx = [&](int x, int y) { return static_cast<size_t>(y) * layout.width + x; };
    std::deque<std::pair<int, int>> q;
    q.emplace_back(layout.start_x, layout.start_y);
    dist[idx(layout.start_x, layout.start_y)] = 0;
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        if (x == layout.goal_x && y == layout.goal_y) return dist[idx(x, y)];
        for (const auto& mv : pattern.moves) {
            auto [nx, ny] = maze_apply_move(layout, x, y, mv);
            if (dist[idx(nx, ny)] < 0) {
                dist[idx(nx, ny)] = dist[idx(x, y)] + 1;
                q.emplace_back(nx, ny);
            }
        }
    }
    return -1;
}

namespace {

class GridMaze final : public Env {
  public:
    GridMaze(const EnvSpec& spec, Role role) : spec_(spec), role_(role) {
        const auto& p = acting();
        if (p.moves.empty()) throw std::invalid_argument("empty action pattern");
        best_steps_ = maze_shortest_steps(spec_.layout, p);
    }

    StateVec reset() override {
        x_ = spec_.layout.start_x;
        y_ = spec_.layout.start_y;
        steps_ = 0;
        return observe();
    }

    StepResult step(int action) override {
        const auto& p = acting();
        if (action < 0 || action >= p.size())
            throw std::invalid_argument("maze action index out of range");
        auto [nx, ny] = maze_apply_move(spec_.layout, x_, y_, p.moves[action]);
        x_ = nx;
        y_ = ny;
        ++steps_;
        StepResult r;
        r.reward = spec_.step_penalty;
        bool at_goal = (x_ == spec_.layout.goal_x && y_ == spec_.layout.goal_y);
        if (at_goal) {
            r.reward += spec_.goal_reward;
            r.done = true;
        } else if (steps_ >= spec_.max_episode_steps) {
            r.done = true;
            r.truncated = true;
        }
        r.state = observe();
        return r;
    }

    int action_count() const override { return acting().size(); }
    int state_dim() const override {
        if (spec_.grid_obs == 0) return 2;
        return spec_.grid_obs * spec_.layout.height * spec_.layout.width;
    }
    const EnvSpec& spec() const override { return spec_; }
    Role role() const override { return role_; }

    float best_return() const override {
        if (best_steps_ < 0) return spec_.step_penalty * spec_.max_episode_steps;
        return spec_.goal_reward + spec_.step_penalty * static_cast<float>(best_steps_);
    }
    float worst_return() const override {
        return spec_.step_penalty * static_cast<float>(spec_.max_episode_steps);
    }

  private:
    const ActionPattern& acting() const {
        return role_ == Role::Agent ? spec_.agent_pattern : spec_.expert_pattern;
    }

    StateVec observe() const {
        if (spec_.grid_obs == 0) {
            return {static_cast<float>(x_) / spec_.layout.width,
                    static_cast<float>(y_) / spec_.layout.height};
        }
        int hw = spec_.layout.height * spec_.layout.width;
        StateVec s(static_cast<size_t>(spec_.grid_obs) * hw, 0.0f);
        if (spec_.grid_obs == 1) {
            s[static_cast<size_t>(y_) * spec_.layout.width + x_] = 1.0f;
            return s;
        }
        for (int y = 0; y < spec_.layout.height; ++y)
            for (int x = 0; x < spec_.layout.width; ++x)
                if (spec_.layout.wall(x, y))
                    s[static_cast<size_t>(y) * spec_.layout.width + x] = 1.0f;
        s[hw + static_cast<size_t>(y_) * spec_.layout.width + x_] = 1.0f;
        s[2 * hw + static_cast<size_t>(spec_.layout.goal_y) * spec_.layout.width +
          spec_.layout.goal_x] = 1.0f;
        return s;
    }

    EnvSpec spec_;
    Role role_;
    int x_ = 0, y_ = 0;
    int steps_ = 0;
    int best_steps_ = -1;
};

}  // namespace

std::unique_ptr<Env> make_grid_maze(const EnvSpec& spec, Role role) {
    return std::make_unique<GridMaze>(spec, role);
}

}  // namespace diiq
