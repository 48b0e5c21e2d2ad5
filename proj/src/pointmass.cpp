#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "diiq/env.hpp"

namespace diiq {

namespace {

// Discrete-time point mass on the maze grid. Positions are in cell units;
// walls occupy whole cells. Axis-separable collision: a blocked axis keeps
// its coordinate and zeroes that velocity component.
class PointMassMaze final : public Env {
  public:
    PointMassMaze(const EnvSpec& spec, Role role) : spec_(spec), role_(role) {
        if (acting().moves.empty()) throw std::invalid_argument("empty action pattern");
        best_cell_steps_ = bfs8_cells();
    }

    StateVec reset() override {
        px_ = spec_.layout.start_x + 0.5f;
        py_ = spec_.layout.start_y + 0.5f;
        vx_ = vy_ = 0.0f;
        steps_ = 0;
        return observe();
    }

    StepResult step(int action) override {
        const auto& p = acting();
        if (action < 0 || action >= p.size())
            throw std::invalid_argument("point-mass action index out of range");
        float fx = p.moves[action].first;
        float fy = p.moves[action].second;
        vx_ = (vx_ + fx * spec_.dt) * (1.0f - spec_.friction);
        vy_ = (vy_ + fy * spec_.dt) * (1.0f - spec_.friction);
        vx_ = std::clamp(vx_, -spec_.v_max, spec_.v_max);
        vy_ = std::clamp(vy_, -spec_.v_max, spec_.v_max);

        float nx = px_ + vx_ * spec_.dt;
        if (cell_blocked(nx, py_)) {
            vx_ = 0.0f;
        } else {
            px_ = nx;
        }
        float ny = py_ + vy_ * spec_.dt;
        if (cell_blocked(px_, ny)) {
            vy_ = 0.0f;
        } else {
            py_ = ny;
        }

        ++steps_;
        StepResult r;
        r.reward = spec_.step_penalty;
        float gx = spec_.layout.goal_x + 0.5f;
        float gy = spec_.layout.goal_y + 0.5f;
        float d = std::hypot(px_ - gx, py_ - gy);
        if (d <= spec_.goal_tolerance) {
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
    int state_dim() const override { return 4; }
    const EnvSpec& spec() const override { return spec_; }
    Role role() const override { return role_; }

    float best_return() const override {
        if (best_cell_steps_ < 0) return worst_return();
        // optimistic step bound: full speed the whole way
        float per_step = spec_.v_max * spec_.dt;
        int steps = static_cast<int>(std::ceil(static_cast<float>(best_cell_steps_) / per_step));
        steps = std::max(steps, 1);
        return spec_.goal_reward + spec_.step_penalty * static_cast<float>(steps);
    }
    float worst_return() const override {
        return spec_.step_penalty * static_cast<float>(spec_.max_episode_steps);
    }

  private:
    const ActionPattern& acting() const {
        return role_ == Role::Agent ? spec_.agent_pattern : spec_.expert_pattern;
    }

    bool cell_blocked(float x, float y) const {
        return spec_.layout.wall(static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)));
    }

    StateVec observe() const {
        float half = 2.0f * spec_.v_max;
        return {std::clamp(px_ / spec_.layout.width, 0.0f, 1.0f),
                std::clamp(py_ / spec_.layout.height, 0.0f, 1.0f),
                std::clamp((vx_ + spec_.v_max) / half, 0.0f, 1.0f),
                std::clamp((vy_ + spec_.v_max) / half, 0.0f, 1.0f)};
    }

    // 8-connected cell distance start -> goal (lower bound on travel).
    int bfs8_cells() const {
        const auto& m = spec_.layout;
        std::vector<int> dist(static_cast<size_t>(m.width) * m.height, -1);
        auto idx = [&](int x, int y) { return static_cast<size_t>(y) * m.width + x; };
        std::deque<std::pair<int, int>> q;
        q.emplace_back(m.start_x, m.start_y);
        dist[idx(m.start_x, m.start_y)] = 0;
        while (!q.empty()) {
            auto [x, y] = q.front();
            q.pop_front();
            if (x == m.goal_x && y == m.goal_y) return dist[idx(x, y)];
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (m.wall(x + dx, y + dy)) continue;
                    if (dist[idx(x + dx, y + dy)] < 0) {
                        dist[idx(x + dx, y + dy)] = dist[idx(x, y)] + 1;
                        q.emplace_back(x + dx, y + dy);
                    }
                }
        }
        return -1;
    }

    EnvSpec spec_;
    Role role_;
    float px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
    int steps_ = 0;
    int best_cell_steps_ = -1;
};

}  // namespace

std::unique_ptr<Env> make_point_mass(const EnvSpec& spec, Role role) {
    return std::make_unique<PointMassMaze>(spec, role);
}

}  // namespace diiq
