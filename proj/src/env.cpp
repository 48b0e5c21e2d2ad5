#include "diiq/env.hpp"

#include <sstream>
#include <stdexcept>

namespace diiq {

std::unique_ptr<Env> make_grid_maze(const EnvSpec& spec, Role role);   // maze.cpp
std::unique_ptr<Env> make_point_mass(const EnvSpec& spec, Role role);  // pointmass.cpp

ActionPattern make_action_pattern(const std::string& name) {
    ActionPattern p;
    p.name = name;
    if (name == "standard") {
        p.moves = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
    } else if (name == "modified") {
        // partial overlap with standard: shares up/down, horizontal moves hop
        // two cells at a time
        p.moves = {{0, -1}, {0, 1}, {-2, 0}, {2, 0}};
    } else if (name == "orthogonal") {
        p.moves = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}, {0, 0}};
    } else if (name == "diagonal") {
        p.moves = {{-1, -1}, {1, -1}, {-1, 1}, {1, 1}, {0, 0}};
    } else if (name.rfind("custom:", 0) == 0) {
        std::istringstream in(name.substr(7));
        std::string tok;
        while (std::getline(in, tok, ';')) {
            size_t comma = tok.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("custom pattern move needs dx,dy: " + tok);
            p.moves.emplace_back(std::stof(tok.substr(0, comma)), std::stof(tok.substr(comma + 1)));
        }
        if (p.moves.empty()) throw std::invalid_argument("custom pattern has no moves");
    } else {
        throw std::invalid_argument("unknown action pattern: " + name);
    }
    for (size_t i = 0; i < p.moves.size(); ++i)
        for (size_t j = i + 1; j < p.moves.size(); ++j)
            if (p.moves[i] == p.moves[j])
                throw std::invalid_argument("action pattern has duplicate moves");
    return p;
}

bool patterns_overlap(const ActionPattern& a, const ActionPattern& b) {
    for (const auto& ma : a.moves)
        for (const auto& mb : b.moves)
            if (ma == mb) return true;
    return false;
}

void EnvSpec::validate() const {
    if (id != "maze" && id != "pointmass")
        throw std::invalid_argument("unknown environment id: " + id);
    if (agent_pattern.moves.empty() || expert_pattern.moves.empty())
        throw std::invalid_argument("action patterns must be nonempty");
    if (max_episode_steps <= 0) throw std::invalid_argument("max_episode_steps must be > 0");
    if (step_penalty >= 0.0f) throw std::invalid_argument("step_penalty must be < 0");
    if (goal_reward <= 0.0f) throw std::invalid_argument("goal_reward must be > 0");
    if (sticky_prob < 0.0f || sticky_prob >= 1.0f)
        throw std::invalid_argument("sticky_prob must be in [0,1)");
    if (id == "pointmass") {
        if (dt <= 0 || v_max <= 0 || goal_tolerance <= 0 || friction < 0 || friction >= 1)
            throw std::invalid_argument("bad point-mass dynamics parameters");
    }
}

namespace {

// With probability sticky_prob the previously executed action overrides the
// chosen one. The first step of a run is never overridden.
class StickyEnv final : public Env {
  public:
    StickyEnv(std::unique_ptr<Env> inner, float prob, std::uint64_t seed)
        : inner_(std::move(inner)), prob_(prob), rng_(seed) {}

    StateVec reset() override {
        prev_action_ = -1;
        return inner_->reset();
    }

    StepResult step(int action) override {
        if (prev_action_ >= 0 && uniform01(rng_) < prob_) action = prev_action_;
        prev_action_ = action;
        return inner_->step(action);
    }

    int action_count() const override { return inner_->action_count(); }
    int state_dim() const override { return inner_->state_dim(); }
    const EnvSpec& spec() const override { return inner_->spec(); }
    Role role() const override { return inner_->role(); }
    float best_return() const override { return inner_->best_return(); }
    float worst_return() const override { return inner_->worst_return(); }

  private:
    std::unique_ptr<Env> inner_;
    float prob_;
    Rng rng_;
    int prev_action_ = -1;
};

}  // namespace

std::unique_ptr<Env> make_env(const EnvSpec& spec, Role role) {
    spec.validate();
    std::unique_ptr<Env> env;
    if (spec.id == "maze") {
        env = make_grid_maze(spec, role);
    } else {
        env = make_point_mass(spec, role);
    }
    if (spec.sticky_prob > 0.0f)
        env = std::make_unique<StickyEnv>(std::move(env), spec.sticky_prob, spec.sticky_seed);
    return env;
}

}  // namespace diiq
