#include "tltl/arm_sim.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tltl/parser.hpp"

namespace tltl {

using json = nlohmann::json;

void SceneConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SceneConfig: dt must be > 0");
    if (!(vel_limit > 0.0)) throw std::invalid_argument("SceneConfig: vel_limit must be > 0");
    if (noise_std < 0.0) throw std::invalid_argument("SceneConfig: noise_std must be >= 0");
    if (horizon < 1) throw std::invalid_argument("SceneConfig: horizon must be >= 1");
    if (task != "task1" && task != "task2")
        throw std::invalid_argument("SceneConfig: task must be 'task1' or 'task2'");
    for (const auto& g : goals) {
        if (!(g.radius > 0.0)) throw std::invalid_argument("SceneConfig: goal radius must be > 0");
        if (std::hypot(g.x, g.y) > reach())
            throw std::invalid_argument("SceneConfig: goal '" + g.name +
                                        "' outside reachable workspace");
    }
    for (const auto& o : obstacles) {
        if (!(o.radius > 0.0))
            throw std::invalid_argument("SceneConfig: obstacle radius must be > 0");
        if (std::hypot(o.x, o.y) > reach())
            throw std::invalid_argument("SceneConfig: obstacle outside reachable workspace");
    }
    if (task == "task1" && goals.size() != 1)
        throw std::invalid_argument("SceneConfig: task1 needs exactly one goal");
    if (task == "task2" && goals.size() != 3)
        throw std::invalid_argument("SceneConfig: task2 needs exactly three goals");
}

SceneConfig SceneConfig::task1_default() {
    SceneConfig s;
    s.task = "task1";
    s.horizon = 200;
    s.goals = {{"g", 0.6, 0.4, 0.2}};
    s.obstacles = {{0.3, 0.2, 0.1}, {0.5, -0.1, 0.1}};
    return s;
}

SceneConfig SceneConfig::task2_default() {
    SceneConfig s;
    s.task = "task2";
    s.horizon = 500;
    s.goals = {{"gr", 0.6, 0.3, 0.2}, {"gg", -0.2, 0.6, 0.2}, {"gb", 0.4, -0.5, 0.2}};
    s.obstacles = {{0.3, 0.2, 0.1}, {0.5, -0.1, 0.1}, {0.0, 0.45, 0.1}};
    return s;
}

SceneConfig SceneConfig::from_json_string(const std::string& text) {
    json j = json::parse(text);
    SceneConfig s;
    if (j.contains("links")) {
        auto l = j.at("links");
        if (l.size() != 3) throw std::invalid_argument("SceneConfig: need 3 link lengths");
        for (int i = 0; i < 3; ++i) s.links[static_cast<std::size_t>(i)] = l.at(static_cast<std::size_t>(i)).get<double>();
    }
    s.dt = j.value("dt", s.dt);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.vel_limit = j.value("vel_limit", s.vel_limit);
    s.task = j.value("task", s.task);
    s.horizon = j.value("horizon", s.horizon);
    if (j.contains("goals")) {
        s.goals.clear();
        for (const auto& g : j.at("goals"))
            s.goals.push_back({g.at("name").get<std::string>(), g.at("x").get<double>(),
                               g.at("y").get<double>(), g.at("radius").get<double>()});
    } else {
        s.goals = (s.task == "task2") ? task2_default().goals : task1_default().goals;
    }
    if (j.contains("obstacles")) {
        s.obstacles.clear();
        for (const auto& o : j.at("obstacles"))
            s.obstacles.push_back(
                {o.at("x").get<double>(), o.at("y").get<double>(), o.at("radius").get<double>()});
    } else {
        s.obstacles = (s.task == "task2") ? task2_default().obstacles : task1_default().obstacles;
    }
    s.validate();
    return s;
}

SceneConfig SceneConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

std::string SceneConfig::to_json() const {
    json j;
    j["links"] = {links[0], links[1], links[2]};
    j["dt"] = dt;
    j["noise_std"] = noise_std;
    j["vel_limit"] = vel_limit;
    j["task"] = task;
    j["horizon"] = horizon;
    j["goals"] = json::array();
    for (const auto& g : goals)
        j["goals"].push_back({{"name", g.name}, {"x", g.x}, {"y", g.y}, {"radius", g.radius}});
    j["obstacles"] = json::array();
    for (const auto& o : obstacles)
        j["obstacles"].push_back({{"x", o.x}, {"y", o.y}, {"radius", o.radius}});
    return j.dump(2);
}

Eigen::Vector2d forward_kinematics(const Eigen::Vector3d& q, const std::array<double, 3>& links) {
    double angle = 0.0, x = 0.0, y = 0.0;
    for (int j = 0; j < 3; ++j) {
        angle += q(j);
        x += links[static_cast<std::size_t>(j)] * std::cos(angle);
        y += links[static_cast<std::size_t>(j)] * std::sin(angle);
    }
    return {x, y};
}

ArmEnv::ArmEnv(SceneConfig scene) : scene_(std::move(scene)) {
    scene_.validate();
    state_ = Eigen::VectorXd::Zero(8);
}

Eigen::VectorXd ArmEnv::reset(std::mt19937_64&) {
    state_ = Eigen::VectorXd::Zero(8);
    Eigen::Vector2d ee = forward_kinematics(Eigen::Vector3d::Zero(), scene_.links);
    state_(6) = ee(0);
    state_(7) = ee(1);
    return state_;
}

Eigen::VectorXd ArmEnv::step(const Eigen::VectorXd& action, std::mt19937_64& rng) {
    if (action.size() != 3 || !action.allFinite())
        throw std::invalid_argument("ArmEnv: action must be a finite 3-vector");
    Eigen::Vector3d qdot;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < 3; ++j) {
        double v = action(j);
        if (scene_.noise_std > 0.0) v += scene_.noise_std * gauss(rng);
        qdot(j) = std::clamp(v, -scene_.vel_limit, scene_.vel_limit);
    }
    Eigen::Vector3d q = state_.head<3>() + qdot * scene_.dt;
    Eigen::Vector2d ee = forward_kinematics(q, scene_.links);
    state_.head<3>() = q;
    state_.segment<3>(3) = qdot;
    state_(6) = ee(0);
    state_(7) = ee(1);
    return state_;
}

FeatureSchema ArmEnv::feature_schema() const {
    std::vector<std::string> names = {"q1", "q2", "q3", "dq1", "dq2", "dq3", "xe", "ye"};
    for (const auto& g : scene_.goals) names.push_back("d_" + g.name);
    for (std::size_t j = 0; j < scene_.obstacles.size(); ++j)
        names.push_back("d_o" + std::to_string(j + 1));
    return FeatureSchema(names);
}

Trajectory ArmEnv::make_trajectory(const Eigen::MatrixXd& states) const {
    if (states.cols() != 8) throw std::invalid_argument("ArmEnv: raw states must have 8 columns");
    Trajectory traj;
    traj.schema = feature_schema();
    traj.dt = scene_.dt;
    const int n = static_cast<int>(states.rows());
    traj.states.resize(n, traj.schema.dimension());
    for (int i = 0; i < n; ++i) {
        traj.states.block(i, 0, 1, 8) = states.row(i);
        const double xe = states(i, 6), ye = states(i, 7);
        int col = 8;
        for (const auto& g : scene_.goals) traj.states(i, col++) = std::hypot(xe - g.x, ye - g.y);
        for (const auto& o : scene_.obstacles)
            traj.states(i, col++) = std::hypot(xe - o.x, ye - o.y);
    }
    return traj;
}

std::vector<VisitTracker::Entry> VisitTracker::entries(const Trajectory& traj) const {
    std::vector<Entry> out;
    const int ng = static_cast<int>(scene_.goals.size());
    std::vector<bool> inside(static_cast<std::size_t>(ng), false);
    for (int i = 0; i < traj.length(); ++i) {
        for (int g = 0; g < ng; ++g) {
            const auto& goal = scene_.goals[static_cast<std::size_t>(g)];
            const int col = traj.schema.index_of("d_" + goal.name);
            if (col < 0) throw std::invalid_argument("VisitTracker: missing goal channel");
            const bool in = traj.states(i, col) <= goal.radius;
            if (in && !inside[static_cast<std::size_t>(g)]) out.push_back({g, i});
            inside[static_cast<std::size_t>(g)] = in;
        }
    }
    return out;
}

namespace {

// Per-step rewards are accumulated over the post-action states (trajectory
// rows 1..n-1), giving one entry per control step.
int steps_of(const Trajectory& traj) { return traj.length() - 1; }

bool inside_any_obstacle(const SceneConfig& scene, const Trajectory& traj, int i) {
    for (std::size_t j = 0; j < scene.obstacles.size(); ++j) {
        const int col = traj.schema.index_of("d_o" + std::to_string(j + 1));
        if (traj.states(i, col) <= scene.obstacles[j].radius) return true;
    }
    return false;
}

double obstacle_distance_sum(const SceneConfig& scene, const Trajectory& traj, int i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < scene.obstacles.size(); ++j) {
        const int col = traj.schema.index_of("d_o" + std::to_string(j + 1));
        acc += traj.states(i, col);
    }
    return acc;
}

}  // namespace

Eigen::VectorXd reward_task1_discrete_steps(const SceneConfig& scene, const Trajectory& traj) {
    const int T = steps_of(traj);
    const int dg = traj.schema.index_of("d_" + scene.goals.at(0).name);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(T);
    for (int t = 0; t < T; ++t) {
        const int i = t + 1;
        if (traj.states(i, dg) <= scene.goals[0].radius) r(t) = 5.0;
        else if (inside_any_obstacle(scene, traj, i)) r(t) = -2.0;
    }
    return r;
}

Eigen::VectorXd reward_task1_continuous_steps(const SceneConfig& scene, const Trajectory& traj,
                                              double c1, double c2) {
    const int T = steps_of(traj);
    const int dg = traj.schema.index_of("d_" + scene.goals.at(0).name);
    Eigen::VectorXd r(T);
    for (int t = 0; t < T; ++t) {
        const int i = t + 1;
        r(t) = -c1 * traj.states(i, dg) + c2 * obstacle_distance_sum(scene, traj, i);
    }
    return r;
}

Eigen::VectorXd reward_task2_discrete_steps(const SceneConfig& scene, const Trajectory& traj) {
    const int T = steps_of(traj);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(T);
    VisitTracker tracker(scene);
    auto entries = tracker.entries(traj);
    std::vector<bool> visited(scene.goals.size(), false);
    std::size_t next_correct = 0;
    for (const auto& e : entries) {
        if (e.step == 0) continue;  // initial state precedes the first action
        const int t = e.step - 1;
        if (static_cast<std::size_t>(e.goal) == next_correct) {
            r(t) += 5.0;
            visited[next_correct] = true;
            while (next_correct < visited.size() && visited[next_correct]) ++next_correct;
        } else {
            r(t) -= 5.0;
        }
    }
    for (int t = 0; t < T; ++t)
        if (inside_any_obstacle(scene, traj, t + 1)) r(t) -= 2.0;
    return r;
}

Eigen::VectorXd reward_task2_continuous_steps(const SceneConfig& scene, const Trajectory& traj,
                                              double c1, double c2, double c3) {
    const int T = steps_of(traj);
    Eigen::VectorXd r(T);
    VisitTracker tracker(scene);
    auto entries = tracker.entries(traj);
    // next correct goal per step, advanced by in-order entry events
    std::vector<int> goal_cols;
    for (const auto& g : scene.goals) goal_cols.push_back(traj.schema.index_of("d_" + g.name));
    std::vector<bool> visited(scene.goals.size(), false);
    std::size_t next_correct = 0;
    std::size_t ev = 0;
    for (int t = 0; t < T; ++t) {
        const int i = t + 1;
        while (ev < entries.size() && entries[ev].step <= i) {
            if (static_cast<std::size_t>(entries[ev].goal) == next_correct) {
                visited[next_correct] = true;
                while (next_correct < visited.size() && visited[next_correct]) ++next_correct;
            }
            ++ev;
        }
        const std::size_t target = std::min(next_correct, scene.goals.size() - 1);
        double term = -c1 * traj.states(i, goal_cols[target]);
        for (std::size_t g = 0; g < scene.goals.size(); ++g)
            if (g != target) term += c2 * traj.states(i, goal_cols[g]);
        term += c3 * obstacle_distance_sum(scene, traj, i);
        r(t) = term;
    }
    return r;
}

double reward_task1_discrete(const SceneConfig& scene, const Trajectory& traj) {
    return reward_task1_discrete_steps(scene, traj).sum();
}
double reward_task1_continuous(const SceneConfig& scene, const Trajectory& traj, double c1,
                               double c2) {
    return reward_task1_continuous_steps(scene, traj, c1, c2).sum();
}
double reward_task2_discrete(const SceneConfig& scene, const Trajectory& traj) {
    return reward_task2_discrete_steps(scene, traj).sum();
}
double reward_task2_continuous(const SceneConfig& scene, const Trajectory& traj, double c1,
                               double c2, double c3) {
    return reward_task2_continuous_steps(scene, traj, c1, c2, c3).sum();
}

double tltl_reward(const FormulaPtr& formula, const Trajectory& traj,
                   const RobustnessConfig& cfg) {
    return robustness(formula, traj, 0, cfg);
}

namespace {

FormulaPtr goal_pred(const std::string& goal_name, double radius) {
    return Formula::make_pred(Predicate("d_" + goal_name, Cmp::Lt, radius));
}

FormulaPtr obstacle_clause(const SceneConfig& scene) {
    FormulaPtr clause;
    for (std::size_t j = 0; j < scene.obstacles.size(); ++j) {
        FormulaPtr p = Formula::make_pred(
            Predicate("d_o" + std::to_string(j + 1), Cmp::Gt, scene.obstacles[j].radius));
        clause = clause ? Formula::make_and(std::move(clause), std::move(p)) : p;
    }
    return Formula::make_always(std::move(clause));
}

FormulaPtr no_revisit(const FormulaPtr& psi) {
    // G (psi -> X G !psi)
    return Formula::make_always(Formula::make_implies(
        psi, Formula::make_next(Formula::make_always(Formula::make_not(psi)))));
}

FormulaPtr phi1_formula(const SceneConfig& scene) {
    FormulaPtr stay = Formula::make_eventually(Formula::make_always(
        goal_pred(scene.goals.at(0).name, scene.goals.at(0).radius)));
    return Formula::make_and(std::move(stay), obstacle_clause(scene));
}

FormulaPtr phi2_formula(const SceneConfig& scene) {
    const auto& g = scene.goals;
    FormulaPtr pr = goal_pred(g.at(0).name, g.at(0).radius);
    FormulaPtr pg = goal_pred(g.at(1).name, g.at(1).radius);
    FormulaPtr pb = goal_pred(g.at(2).name, g.at(2).radius);
    FormulaPtr chain = Formula::make_then(pr, Formula::make_then(pg, pb));
    FormulaPtr guard_r =
        Formula::make_until(Formula::make_not(Formula::make_or(pg, pb)), pr);
    FormulaPtr guard_g = Formula::make_until(Formula::make_not(pb), pg);
    FormulaPtr f = Formula::make_and(std::move(chain), std::move(guard_r));
    f = Formula::make_and(std::move(f), std::move(guard_g));
    f = Formula::make_and(std::move(f), no_revisit(pr));
    f = Formula::make_and(std::move(f), no_revisit(pg));
    f = Formula::make_and(std::move(f), no_revisit(pb));
    return Formula::make_and(std::move(f), obstacle_clause(scene));
}

// Box membership as a conjunction of the six face comparisons.
FormulaPtr box_pred(const std::string& prefix, const std::array<double, 6>& box) {
    auto face = [&](const std::string& axis, Cmp cmp, double c) {
        return Formula::make_pred(Predicate(axis, cmp, c));
    };
    FormulaPtr f = face("xe", Cmp::Gt, box[0]);
    f = Formula::make_and(std::move(f), face("xe", Cmp::Lt, box[1]));
    f = Formula::make_and(std::move(f), face("ye", Cmp::Gt, box[2]));
    f = Formula::make_and(std::move(f), face("ye", Cmp::Lt, box[3]));
    f = Formula::make_and(std::move(f), face("ze", Cmp::Gt, box[4]));
    f = Formula::make_and(std::move(f), face("ze", Cmp::Lt, box[5]));
    (void)prefix;
    return f;
}

}  // namespace

FormulaPtr task_formula(const SceneConfig& scene) {
    return scene.task == "task2" ? phi2_formula(scene) : phi1_formula(scene);
}

FeatureSchema toast_schema() { return FeatureSchema({"xe", "ye", "ze", "pg"}); }

FormulaPtr toast_formula(const ToastScene& scene) {
    FormulaPtr psi_table = box_pred("table", scene.table);
    FormulaPtr psi_toaster = box_pred("toaster", scene.toaster);
    FormulaPtr psi_slot = box_pred("slot", scene.slot);
    FormulaPtr psi_gc =
        Formula::make_pred(Predicate("pg", Cmp::Lt, scene.delta_close, scene.gripper_scale));
    FormulaPtr psi_go =
        Formula::make_pred(Predicate("pg", Cmp::Gt, scene.delta_open, scene.gripper_scale));

    FormulaPtr no_hit = Formula::make_always(
        Formula::make_not(Formula::make_or(psi_table, psi_toaster)));
    FormulaPtr reach_slot = Formula::make_eventually(psi_slot);
    FormulaPtr closed_until = Formula::make_until(psi_gc, psi_slot);
    FormulaPtr open_after = Formula::make_always(Formula::make_implies(
        psi_slot, Formula::make_next(Formula::make_always(psi_go))));

    FormulaPtr f = Formula::make_and(std::move(no_hit), std::move(reach_slot));
    f = Formula::make_and(std::move(f), std::move(closed_until));
    return Formula::make_and(std::move(f), std::move(open_after));
}

BuiltinFormulas builtin_formulas(const SceneConfig& task1, const SceneConfig& task2) {
    return {phi1_formula(task1), phi2_formula(task2), toast_formula()};
}

Eigen::VectorXd toast_comparison_reward_steps(const ToastScene& scene, const Trajectory& traj,
                                              double c1, double c2, double c3) {
    auto center = [](const std::array<double, 6>& b) {
        return Eigen::Vector3d{(b[0] + b[1]) / 2, (b[2] + b[3]) / 2, (b[4] + b[5]) / 2};
    };
    const Eigen::Vector3d slot_c = center(scene.slot);
    const Eigen::Vector3d toaster_c = center(scene.toaster);
    const int xe = traj.schema.index_of("xe"), ye = traj.schema.index_of("ye"),
              ze = traj.schema.index_of("ze"), pg = traj.schema.index_of("pg");
    if (xe < 0 || ye < 0 || ze < 0 || pg < 0)
        throw std::invalid_argument("toast reward: trajectory missing {xe,ye,ze,pg} channels");
    const int n = traj.length();
    Eigen::VectorXd r(n);
    double min_d_slot = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
        Eigen::Vector3d p{traj.states(t, xe), traj.states(t, ye), traj.states(t, ze)};
        const double d_slot = (p - slot_c).norm();
        const double d_toaster = (p - toaster_c).norm();
        const double gp = traj.states(t, pg);
        min_d_slot = std::min(min_d_slot, d_slot);
        const double grip_term = (min_d_slot > 0.03) ? std::abs(gp) : std::abs(100.0 - gp);
        r(t) = -c1 * d_slot + c2 * d_toaster - c3 * grip_term;
    }
    return r;
}

Eigen::VectorXd TaskRewardAdapter::step_rewards(const Eigen::MatrixXd& states,
                                                const Eigen::MatrixXd&) const {
    Trajectory traj = env_.make_trajectory(states);
    const SceneConfig& scene = env_.scene();
    if (scene.task == "task2") {
        return kind_ == Kind::Discrete
                   ? reward_task2_discrete_steps(scene, traj)
                   : reward_task2_continuous_steps(scene, traj, c1_, c2_, c3_);
    }
    return kind_ == Kind::Discrete ? reward_task1_discrete_steps(scene, traj)
                                   : reward_task1_continuous_steps(scene, traj, c1_, c2_);
}

}  // namespace tltl
