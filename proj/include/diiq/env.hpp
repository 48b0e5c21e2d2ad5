#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "diiq/rng.hpp"

namespace diiq {

using StateVec = std::vector<float>;

// A move set for one role. Maze moves are integer cell displacements,
// point-mass moves are force vectors; both fit in a float pair.
struct ActionPattern {
    std::string name;
    std::vector<std::pair<float, float>> moves;

    int size() const { return static_cast<int>(moves.size()); }
};

// Builds one of the named patterns, or parses "custom:dx,dy;dx,dy;...".
ActionPattern make_action_pattern(const std::string& name);

// True if the two patterns share at least one move.
bool patterns_overlap(const ActionPattern& a, const ActionPattern& b);

struct MazeLayout {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> walls;  // row-major, 1 = wall
    int start_x = 0, start_y = 0;
    int goal_x = 0, goal_y = 0;

    bool wall(int x, int y) const {
        if (x < 0 || y < 0 || x >= width || y >= height) return true;
        return walls[static_cast<size_t>(y) * width + x] != 0;
    }

    // Parses the ASCII format: '#' wall, '.' free, 'S' start, 'G' goal.
    // Validates start/goal placement and start->goal reachability under the
    // standard 4-move pattern.
    static MazeLayout parse(const std::string& text);
    static MazeLayout load_file(const std::string& path);
};

// Shortest number of moves from start to goal under `pattern`, respecting
// the same blocking rules the environment applies. -1 if unreachable.
int maze_shortest_steps(const MazeLayout& layout, const ActionPattern& pattern);

// Result of applying a maze move: destination cell (unchanged when blocked).
std::pair<int, int> maze_apply_move(const MazeLayout& layout, int x, int y,
                                    const std::pair<float, float>& move);

enum class Role { Agent, Expert };

struct EnvSpec {
    std::string id;  // "maze" | "pointmass"
    MazeLayout layout;
    ActionPattern agent_pattern;
    ActionPattern expert_pattern;
    int max_episode_steps = 300;
    float step_penalty = -1.0f;
    float goal_reward = 100.0f;
    float sticky_prob = 0.0f;
    std::uint64_t sticky_seed = 0;
    // maze observation: 0 = normalized coordinates, 1 = agent one-hot channel,
    // 3 = walls + agent + goal channels
    int grid_obs = 0;

    // point-mass dynamics
    float dt = 0.1f;
    float friction = 0.1f;
    float v_max = 1.0f;
    float goal_tolerance = 0.5f;

    void validate() const;
};

struct StepResult {
    StateVec state;
    float reward = 0.0f;
    bool done = false;       // episode over (goal reached or step limit)
    bool truncated = false;  // over by the step limit only: targets keep bootstrapping
};

class Env {
  public:
    virtual ~Env() = default;
    virtual StateVec reset() = 0;
    virtual StepResult step(int action) = 0;
    virtual int action_count() const = 0;
    virtual int state_dim() const = 0;
    virtual const EnvSpec& spec() const = 0;
    virtual Role role() const = 0;

    // Episodic-return bounds used for normalized reporting. best_return is an
    // upper bound on what any policy can achieve; worst_return is the return
    // of never reaching the goal.
    virtual float best_return() const = 0;
    virtual float worst_return() const = 0;

    const ActionPattern& agent_action_pattern() const { return spec().agent_pattern; }
    const ActionPattern& expert_action_pattern() const { return spec().expert_pattern; }
    const ActionPattern& acting_pattern() const {
        return role() == Role::Agent ? spec().agent_pattern : spec().expert_pattern;
    }

    float normalized_return(float ret) const {
        float lo = worst_return(), hi = best_return();
        if (hi <= lo) return 0.0f;
        return (ret - lo) / (hi - lo);
    }
};

// Constructs the environment named by spec.id, acting under `role`'s pattern.
// sticky_prob > 0 wraps it in the sticky-action wrapper.
std::unique_ptr<Env> make_env(const EnvSpec& spec, Role role);

}  // namespace diiq
