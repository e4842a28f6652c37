// tltl/experiment.hpp — experiment orchestration: reward type x REPS
// variant x seeds, with learning curves always reported in TLTL-robustness
// units regardless of which reward drives the optimization.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tltl/arm_sim.hpp"
#include "tltl/reps.hpp"

namespace tltl {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct ExperimentConfig {
    SceneConfig scene = SceneConfig::task1_default();
    std::string reward = "tltl";            // tltl | discrete | continuous
    std::string reps_variant = "episodic";  // episodic | stepwise
    std::vector<int> seeds{0, 1, 2, 3};
    int iterations = 60;
    RepsConfig reps;
    double c1 = 1.0, c2 = 0.1, c3 = 0.1;  // continuous-reward coefficients
    std::vector<double> grid_c1, grid_c2, grid_c3;
    // Diagnostic constant added to the driving reward. The reported
    // robustness curve must be invariant to it (REPS weights are
    // shift-invariant); tests rely on that.
    double reward_offset = 0.0;

    void validate() const;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_string(const std::string& text);
    std::string to_json() const;
    std::string hash() const;

    // Desk-scale profile: shrinks horizon and iteration count.
    void apply_fast_profile();
};

struct LearningCurve {
    std::vector<double> mean_rho;  // across seeds, per iteration
    std::vector<double> var_rho;   // population variance across seeds
    Eigen::MatrixXd per_seed;      // seeds x iterations, batch-average robustness
    std::vector<int> seeds;
    std::string config_hash;

    int iterations() const { return static_cast<int>(mean_rho.size()); }
};

using ProgressFn = std::function<void(int completed_iterations, const LearningCurve& partial)>;

// Run the configured experiment over all seeds. The reward selected in cfg
// drives REPS; every sampled trajectory is additionally scored by the
// task's TLTL robustness for the reported curve.
LearningCurve run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = nullptr);

struct GridResult {
    std::vector<std::array<double, 3>> cells;  // (c1, c2, c3) per cell
    std::vector<LearningCurve> curves;
    std::size_t best_index = 0;
    std::array<double, 3> best() const { return cells.at(best_index); }
};

// Run one experiment per coefficient cell; best = highest mean robustness
// over the final 10 iterations.
GridResult grid_search_continuous(const ExperimentConfig& cfg);

// Write curve.csv, config.json and curve.svg into `dir`.
void emit_outputs(const ExperimentConfig& cfg, const LearningCurve& curve,
                  const std::string& dir);

// Read back a curve.csv (mean/var columns only).
LearningCurve read_curve_csv(const std::string& path);

// Worker cap: TLTL_LAB_THREADS, else hardware concurrency.
int worker_threads();

}  // namespace tltl
