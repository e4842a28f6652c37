// tltl/arm_sim.hpp — 3-link planar manipulator environment with the two
// benchmark tasks and their reward adapters, plus the toast-placing formula
// as an evaluation-only fixture.
//
// State (8-dim): joint angles q1..q3, joint velocities dq1..dq3, and the
// end-effector position (xe, ye) recomputed from forward kinematics each
// step. Actions are joint velocity commands; Gaussian noise is added to the
// commands and the result is clipped to the velocity limits. Obstacles are
// penetrable: entering one is penalized by the reward, never terminal.
//
// The TLTL feature schema adds Euclidean distance channels on top of the
// raw state: d_g (task 1) or d_gr/d_gg/d_gb (task 2), and d_o1..d_oK.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <random>
#include <string>
#include <vector>

#include "tltl/formula.hpp"
#include "tltl/reps.hpp"
#include "tltl/semantics.hpp"

namespace tltl {

struct SceneConfig {
    struct Goal {
        std::string name;
        double x = 0.0, y = 0.0;
        double radius = 0.2;
    };
    struct Obstacle {
        double x = 0.0, y = 0.0;
        double radius = 0.1;
    };

    std::array<double, 3> links{0.3, 0.3, 0.3};
    double dt = 0.05;             // seconds
    double noise_std = 0.05;      // velocity command noise, rad/s
    double vel_limit = 2.0;       // |joint velocity| bound, rad/s
    std::vector<Goal> goals;
    std::vector<Obstacle> obstacles;
    std::string task = "task1";   // "task1" or "task2"
    int horizon = 200;

    double reach() const { return links[0] + links[1] + links[2]; }
    void validate() const;

    static SceneConfig task1_default();
    static SceneConfig task2_default();

    static SceneConfig from_json_file(const std::string& path);
    static SceneConfig from_json_string(const std::string& text);
    std::string to_json() const;
};

// End-effector position of the planar chain.
Eigen::Vector2d forward_kinematics(const Eigen::Vector3d& q, const std::array<double, 3>& links);

class ArmEnv : public Environment {
  public:
    explicit ArmEnv(SceneConfig scene);

    int horizon() const override { return scene_.horizon; }
    int state_dim() const override { return 8; }
    int action_dim() const override { return 3; }
    Eigen::VectorXd reset(std::mt19937_64& rng) override;
    Eigen::VectorXd step(const Eigen::VectorXd& action, std::mt19937_64& rng) override;

    const SceneConfig& scene() const { return scene_; }

    // Feature channels exposed to TLTL: raw state plus distance channels.
    FeatureSchema feature_schema() const;

    // Raw rollout states (rows of 8) -> feature trajectory.
    Trajectory make_trajectory(const Eigen::MatrixXd& states) const;

  private:
    SceneConfig scene_;
    Eigen::VectorXd state_;
};

// Ordered record of goal-disc entries within an episode. An "entry" is the
// first in-disc sample after being outside (edge-triggered).
class VisitTracker {
  public:
    explicit VisitTracker(const SceneConfig& scene) : scene_(scene) {}

    struct Entry {
        int goal;  // index into scene.goals
        int step;
    };

    // Replay a feature trajectory and record every goal entry event.
    std::vector<Entry> entries(const Trajectory& traj) const;

  private:
    const SceneConfig& scene_;
};

// Per-step rewards; episodic returns are their sums.
Eigen::VectorXd reward_task1_discrete_steps(const SceneConfig& scene, const Trajectory& traj);
Eigen::VectorXd reward_task1_continuous_steps(const SceneConfig& scene, const Trajectory& traj,
                                              double c1, double c2);
Eigen::VectorXd reward_task2_discrete_steps(const SceneConfig& scene, const Trajectory& traj);
Eigen::VectorXd reward_task2_continuous_steps(const SceneConfig& scene, const Trajectory& traj,
                                              double c1, double c2, double c3);

double reward_task1_discrete(const SceneConfig& scene, const Trajectory& traj);
double reward_task1_continuous(const SceneConfig& scene, const Trajectory& traj, double c1,
                               double c2);
double reward_task2_discrete(const SceneConfig& scene, const Trajectory& traj);
double reward_task2_continuous(const SceneConfig& scene, const Trajectory& traj, double c1,
                               double c2, double c3);

// Terminal TLTL reward: robustness of `formula` over the whole trajectory.
double tltl_reward(const FormulaPtr& formula, const Trajectory& traj,
                   const RobustnessConfig& cfg = {});

struct BuiltinFormulas {
    FormulaPtr phi1;       // reach goal and stay, avoid obstacles (task 1)
    FormulaPtr phi2;       // visit g_r then g_g then g_b in order (task 2)
    FormulaPtr phi_toast;  // toast-placing fixture
};

// Task specification for `scene.task`, over the env's feature schema.
FormulaPtr task_formula(const SceneConfig& scene);

// All three built-in specifications. phi1/phi2 use the given scenes' radii;
// phi_toast is over the toast fixture schema below.
BuiltinFormulas builtin_formulas(const SceneConfig& task1, const SceneConfig& task2);

// Toast fixture: axis-aligned boxes over channels {xe, ye, ze, pg}.
// Evaluation-only; no dynamics simulated.
struct ToastScene {
    // box = {xmin, xmax, ymin, ymax, zmin, zmax}
    std::array<double, 6> table{-1.0, 1.0, -1.0, 1.0, -0.1, 0.05};
    std::array<double, 6> toaster{0.4, 0.7, -0.2, 0.2, 0.05, 0.35};
    std::array<double, 6> slot{0.5, 0.6, -0.05, 0.05, 0.35, 0.45};
    double delta_close = 5.0;    // gripper position below which it counts as closed
    double delta_open = 95.0;    // above which it counts as open
    double gripper_scale = 0.01; // normalizes 0-100 gripper units to the metric scale
};

FeatureSchema toast_schema();
FormulaPtr toast_formula(const ToastScene& scene = {});

// Hand-designed comparison reward for the toast task: per-step distance
// shaping with a gripper term that flips once the slot has been approached
// within 3 cm. Evaluated on synthetic trajectories only.
Eigen::VectorXd toast_comparison_reward_steps(const ToastScene& scene, const Trajectory& traj,
                                              double c1, double c2, double c3);

// RewardAdapter bridges for the REPS loop ----------------------------------

class TltlRewardAdapter : public RewardAdapter {
  public:
    TltlRewardAdapter(const ArmEnv& env, FormulaPtr formula, RobustnessConfig cfg = {})
        : env_(env), formula_(std::move(formula)), cfg_(cfg) {}
    double terminal(const Eigen::MatrixXd& states, const Eigen::MatrixXd&) const override {
        return tltl_reward(formula_, env_.make_trajectory(states), cfg_);
    }

  private:
    const ArmEnv& env_;
    FormulaPtr formula_;
    RobustnessConfig cfg_;
};

class TaskRewardAdapter : public RewardAdapter {
  public:
    enum class Kind { Discrete, Continuous };
    TaskRewardAdapter(const ArmEnv& env, Kind kind, double c1 = 1.0, double c2 = 0.1,
                      double c3 = 0.1)
        : env_(env), kind_(kind), c1_(c1), c2_(c2), c3_(c3) {}

    bool has_step_rewards() const override { return true; }
    Eigen::VectorXd step_rewards(const Eigen::MatrixXd& states,
                                 const Eigen::MatrixXd&) const override;
    double terminal(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const override {
        return step_rewards(states, actions).sum();
    }

  private:
    const ArmEnv& env_;
    Kind kind_;
    double c1_, c2_, c3_;
};

}  // namespace tltl
