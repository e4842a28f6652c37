#include "tltl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tltl/parser.hpp"
#include "tltl/semantics.hpp"

namespace tltl {

using json = nlohmann::json;

void ExperimentConfig::validate() const {
    scene.validate();
    reps.validate();
    if (reward != "tltl" && reward != "discrete" && reward != "continuous")
        throw ConfigError("reward must be one of tltl/discrete/continuous, got '" + reward + "'");
    if (reps_variant != "episodic" && reps_variant != "stepwise")
        throw ConfigError("reps_variant must be episodic or stepwise, got '" + reps_variant + "'");
    if (reward == "tltl" && reps_variant == "stepwise")
        throw ConfigError("tltl reward is terminal-only and cannot drive step-based REPS");
    if (seeds.empty()) throw ConfigError("at least one seed required");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("scene")) cfg.scene = SceneConfig::from_json_string(j.at("scene").dump());
        else if (j.value("task", "task1") == "task2") cfg.scene = SceneConfig::task2_default();
        else cfg.scene = SceneConfig::task1_default();
        if (j.contains("horizon")) cfg.scene.horizon = j.at("horizon").get<int>();
        cfg.reward = j.value("reward", cfg.reward);
        cfg.reps_variant = j.value("reps_variant", cfg.reps_variant);
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<int>>();
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.reps.samples = j.value("samples", cfg.reps.samples);
        cfg.reps.epsilon = j.value("epsilon", cfg.reps.epsilon);
        cfg.reps.eta_min = j.value("eta_min", cfg.reps.eta_min);
        cfg.reps.sigma_floor = j.value("sigma_floor", cfg.reps.sigma_floor);
        cfg.reps.sigma0 = j.value("sigma0", cfg.reps.sigma0);
        cfg.reward_offset = j.value("reward_offset", 0.0);
        if (j.contains("coefficients")) {
            const auto& c = j.at("coefficients");
            cfg.c1 = c.value("c1", cfg.c1);
            cfg.c2 = c.value("c2", cfg.c2);
            cfg.c3 = c.value("c3", cfg.c3);
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("c1")) cfg.grid_c1 = g.at("c1").get<std::vector<double>>();
            if (g.contains("c2")) cfg.grid_c2 = g.at("c2").get<std::vector<double>>();
            if (g.contains("c3")) cfg.grid_c3 = g.at("c3").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["scene"] = json::parse(scene.to_json());
    j["reward"] = reward;
    j["reps_variant"] = reps_variant;
    j["seeds"] = seeds;
    j["iterations"] = iterations;
    j["samples"] = reps.samples;
    j["epsilon"] = reps.epsilon;
    j["eta_min"] = reps.eta_min;
    j["sigma_floor"] = reps.sigma_floor;
    j["sigma0"] = reps.sigma0;
    j["reward_offset"] = reward_offset;
    j["coefficients"] = {{"c1", c1}, {"c2", c2}, {"c3", c3}};
    if (!grid_c1.empty() || !grid_c2.empty() || !grid_c3.empty())
        j["grid"] = {{"c1", grid_c1}, {"c2", grid_c2}, {"c3", grid_c3}};
    return j.dump(2);
}

std::string ExperimentConfig::hash() const {
    const std::size_t h = std::hash<std::string>{}(to_json());
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void ExperimentConfig::apply_fast_profile() {
    if (scene.task == "task2") {
        scene.horizon = 200;
        iterations = 150;
    } else {
        scene.horizon = 100;
        iterations = 60;
    }
}

int worker_threads() {
    if (const char* env = std::getenv("TLTL_LAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t episode_seed(int seed, int iteration, int episode) {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(seed));
    h = splitmix64(h + static_cast<std::uint64_t>(iteration));
    return splitmix64(h + static_cast<std::uint64_t>(episode));
}

// Wraps the driving adapter to add the diagnostic constant offset.
class OffsetAdapter : public RewardAdapter {
  public:
    OffsetAdapter(const RewardAdapter& inner, double offset) : inner_(inner), offset_(offset) {}
    double terminal(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) const override {
        return inner_.terminal(s, a) + offset_;
    }
    bool has_step_rewards() const override { return inner_.has_step_rewards(); }
    Eigen::VectorXd step_rewards(const Eigen::MatrixXd& s,
                                 const Eigen::MatrixXd& a) const override {
        return inner_.step_rewards(s, a).array() + offset_;
    }

  private:
    const RewardAdapter& inner_;
    double offset_;
};

std::unique_ptr<RewardAdapter> make_driving_adapter(const ExperimentConfig& cfg,
                                                    const ArmEnv& env, const FormulaPtr& spec) {
    if (cfg.reward == "tltl") return std::make_unique<TltlRewardAdapter>(env, spec);
    const auto kind = cfg.reward == "discrete" ? TaskRewardAdapter::Kind::Discrete
                                               : TaskRewardAdapter::Kind::Continuous;
    return std::make_unique<TaskRewardAdapter>(env, kind, cfg.c1, cfg.c2, cfg.c3);
}

// Collect one iteration's batch; episodes are independent, so they are
// spread over worker threads and stored by index for determinism.
EpisodeBatch collect_batch(const LinearGaussianPolicy& policy, const ExperimentConfig& cfg,
                           const RewardAdapter& reward, int seed, int iteration) {
    const int N = cfg.reps.samples;
    EpisodeBatch batch;
    batch.episodes.resize(static_cast<std::size_t>(N));
    const int workers = std::min(worker_threads(), N);
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&](int begin, int end) {
        try {
            ArmEnv env(cfg.scene);
            for (int i = begin; i < end; ++i)
                batch.episodes[static_cast<std::size_t>(i)] =
                    sample_episode(policy, env, reward, episode_seed(seed, iteration, i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
        }
    };
    if (workers <= 1) {
        work(0, N);
    } else {
        std::vector<std::thread> threads;
        const int chunk = (N + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(N, begin + chunk);
            if (begin < end) threads.emplace_back(work, begin, end);
        }
        for (auto& t : threads) t.join();
    }
    if (err) std::rethrow_exception(err);
    return batch;
}

}  // namespace

LearningCurve run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const int n_seeds = static_cast<int>(cfg.seeds.size());

    LearningCurve curve;
    curve.seeds = cfg.seeds;
    curve.config_hash = cfg.hash();
    curve.per_seed = Eigen::MatrixXd::Zero(n_seeds, cfg.iterations);

    ArmEnv proto_env(cfg.scene);
    const FormulaPtr spec = task_formula(cfg.scene);
    const RobustnessConfig rcfg;

    for (int si = 0; si < n_seeds; ++si) {
        const int seed = cfg.seeds[static_cast<std::size_t>(si)];
        auto driving = make_driving_adapter(cfg, proto_env, spec);
        const OffsetAdapter reward(*driving, cfg.reward_offset);

        LinearGaussianPolicy policy = LinearGaussianPolicy::initial(
            cfg.scene.horizon, proto_env.state_dim(), proto_env.action_dim(), cfg.reps.sigma0);

        for (int it = 0; it < cfg.iterations; ++it) {
            EpisodeBatch batch = collect_batch(policy, cfg, reward, seed, it);

            // Reported metric: batch-average TLTL robustness, always.
            double rho_sum = 0.0;
            for (const auto& ep : batch.episodes)
                rho_sum += tltl_reward(spec, proto_env.make_trajectory(ep.states), rcfg);
            curve.per_seed(si, it) = rho_sum / batch.size();

            if (cfg.reps_variant == "stepwise") {
                policy = update_policy_stepwise(policy, batch, cfg.reps);
            } else {
                Eigen::VectorXd returns = batch.returns();
                const double eta =
                    solve_dual(returns, cfg.reps.epsilon, cfg.reps.eta_min, cfg.reps.eta_max);
                Eigen::VectorXd w = compute_weights(returns, eta);
                policy = update_policy(policy, batch, w, cfg.reps.sigma_floor);
            }

            if (progress && si == n_seeds - 1) {
                LearningCurve partial = curve;
                partial.mean_rho.assign(static_cast<std::size_t>(it + 1), 0.0);
                partial.var_rho.assign(static_cast<std::size_t>(it + 1), 0.0);
                for (int k = 0; k <= it; ++k) {
                    partial.mean_rho[static_cast<std::size_t>(k)] = curve.per_seed.col(k).mean();
                    const double m = partial.mean_rho[static_cast<std::size_t>(k)];
                    partial.var_rho[static_cast<std::size_t>(k)] =
                        (curve.per_seed.col(k).array() - m).square().mean();
                }
                progress(it + 1, partial);
            }
        }
    }

    curve.mean_rho.resize(static_cast<std::size_t>(cfg.iterations));
    curve.var_rho.resize(static_cast<std::size_t>(cfg.iterations));
    for (int it = 0; it < cfg.iterations; ++it) {
        const double m = n_seeds ? curve.per_seed.col(it).mean() : 0.0;
        curve.mean_rho[static_cast<std::size_t>(it)] = m;
        curve.var_rho[static_cast<std::size_t>(it)] =
            (curve.per_seed.col(it).array() - m).square().mean();
    }
    return curve;
}

namespace {

double final_window_mean(const LearningCurve& curve, int window = 10) {
    const int n = curve.iterations();
    if (n == 0) return -std::numeric_limits<double>::infinity();
    const int w = std::min(window, n);
    double acc = 0.0;
    for (int i = n - w; i < n; ++i) acc += curve.mean_rho[static_cast<std::size_t>(i)];
    return acc / w;
}

}  // namespace

GridResult grid_search_continuous(const ExperimentConfig& cfg) {
    if (cfg.reward != "continuous")
        throw ConfigError("grid search requires reward = continuous");
    if (cfg.grid_c1.empty() || cfg.grid_c2.empty() || cfg.grid_c3.empty())
        throw ConfigError("grid search requires non-empty c1/c2/c3 grids");

    GridResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (double a : cfg.grid_c1)
        for (double b : cfg.grid_c2)
            for (double c : cfg.grid_c3) {
                ExperimentConfig cell = cfg;
                cell.c1 = a;
                cell.c2 = b;
                cell.c3 = c;
                cell.grid_c1.clear();
                cell.grid_c2.clear();
                cell.grid_c3.clear();
                LearningCurve curve = run_experiment(cell);
                const double score = final_window_mean(curve);
                result.cells.push_back({a, b, c});
                result.curves.push_back(std::move(curve));
                if (score > best) {
                    best = score;
                    result.best_index = result.cells.size() - 1;
                }
            }
    return result;
}

void emit_outputs(const ExperimentConfig& cfg, const LearningCurve& curve,
                  const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    {
        std::ofstream csv(fs::path(dir) / "curve.csv");
        if (!csv) throw std::runtime_error("cannot write curve.csv in " + dir);
        csv << "iteration,mean_rho,var_rho\n";
        for (int i = 0; i < curve.iterations(); ++i)
            csv << i << ',' << format_double(curve.mean_rho[static_cast<std::size_t>(i)]) << ','
                << format_double(curve.var_rho[static_cast<std::size_t>(i)]) << '\n';
    }
    {
        std::ofstream cj(fs::path(dir) / "config.json");
        if (!cj) throw std::runtime_error("cannot write config.json in " + dir);
        cj << cfg.to_json() << '\n';
    }
    {
        // Minimal static SVG: mean line plus +-1 std dev band.
        const int n = curve.iterations();
        const double W = 640, H = 400, ML = 50, MB = 30, MT = 10, MR = 10;
        double lo = 0, hi = 1;
        if (n > 0) {
            lo = hi = curve.mean_rho[0];
            for (int i = 0; i < n; ++i) {
                const double s = std::sqrt(curve.var_rho[static_cast<std::size_t>(i)]);
                lo = std::min(lo, curve.mean_rho[static_cast<std::size_t>(i)] - s);
                hi = std::max(hi, curve.mean_rho[static_cast<std::size_t>(i)] + s);
            }
            if (hi - lo < 1e-12) hi = lo + 1.0;
        }
        auto px = [&](int i) { return ML + (n > 1 ? (W - ML - MR) * i / (n - 1) : 0.0); };
        auto py = [&](double v) { return H - MB - (H - MB - MT) * (v - lo) / (hi - lo); };
        std::ostringstream band, line;
        for (int i = 0; i < n; ++i) {
            const double s = std::sqrt(curve.var_rho[static_cast<std::size_t>(i)]);
            band << px(i) << ',' << py(curve.mean_rho[static_cast<std::size_t>(i)] + s) << ' ';
            line << px(i) << ',' << py(curve.mean_rho[static_cast<std::size_t>(i)]) << ' ';
        }
        for (int i = n - 1; i >= 0; --i) {
            const double s = std::sqrt(curve.var_rho[static_cast<std::size_t>(i)]);
            band << px(i) << ',' << py(curve.mean_rho[static_cast<std::size_t>(i)] - s) << ' ';
        }
        std::ofstream svg(fs::path(dir) / "curve.svg");
        if (!svg) throw std::runtime_error("cannot write curve.svg in " + dir);
        svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
            << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
            << "  <rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
        if (n > 0) {
            svg << "  <polygon points=\"" << band.str()
                << "\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n"
                << "  <polyline points=\"" << line.str()
                << "\" fill=\"none\" stroke=\"#3182bd\" stroke-width=\"2\"/>\n";
        }
        if (n > 0 && lo < 0 && hi > 0)
            svg << "  <line x1=\"" << ML << "\" y1=\"" << py(0.0) << "\" x2=\"" << (W - MR)
                << "\" y2=\"" << py(0.0) << "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";
        svg << "</svg>\n";
    }
}

LearningCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "iteration,mean_rho,var_rho")
        throw std::runtime_error(path + ": bad curve.csv header");
    LearningCurve curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // iteration index, implied by order
        std::getline(ss, cell, ',');
        curve.mean_rho.push_back(std::stod(cell));
        std::getline(ss, cell, ',');
        curve.var_rho.push_back(std::stod(cell));
    }
    return curve;
}

}  // namespace tltl
