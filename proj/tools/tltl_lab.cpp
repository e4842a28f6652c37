// tltl-lab — command-line front end.
//
//   tltl-lab run  --config <json> --out <dir> [--fast] [--seeds 0,1,2,3]
//   tltl-lab grid --config <json> --out <dir> [--fast]
//   tltl-lab eval --formula <file|string> --trace <csv>
//
// Exit codes: 0 success, 2 config error, 3 runtime fault.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tltl/experiment.hpp"
#include "tltl/parser.hpp"
#include "tltl/semantics.hpp"

namespace {

std::vector<int> parse_seed_list(const std::string& text) {
    std::vector<int> seeds;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) seeds.push_back(std::stoi(cell));
    return seeds;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool fast,
            const std::string& seeds) {
    tltl::ExperimentConfig cfg = tltl::ExperimentConfig::from_json_file(config_path);
    if (fast) cfg.apply_fast_profile();
    if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
    cfg.validate();
    // flush partial results every few iterations so interrupts leave usable
    // output behind
    auto progress = [&](int done, const tltl::LearningCurve& partial) {
        if (done % 10 == 0) tltl::emit_outputs(cfg, partial, out_dir);
    };
    tltl::LearningCurve curve = tltl::run_experiment(cfg, progress);
    tltl::emit_outputs(cfg, curve, out_dir);
    std::cout << "wrote " << out_dir << "/curve.csv (" << curve.iterations()
              << " iterations, " << cfg.seeds.size() << " seeds)\n";
    return 0;
}

int cmd_grid(const std::string& config_path, const std::string& out_dir, bool fast) {
    tltl::ExperimentConfig cfg = tltl::ExperimentConfig::from_json_file(config_path);
    if (fast) cfg.apply_fast_profile();
    tltl::GridResult result = tltl::grid_search_continuous(cfg);
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        tltl::ExperimentConfig cell = cfg;
        cell.c1 = result.cells[i][0];
        cell.c2 = result.cells[i][1];
        cell.c3 = result.cells[i][2];
        cell.grid_c1.clear();
        cell.grid_c2.clear();
        cell.grid_c3.clear();
        tltl::emit_outputs(cell, result.curves[i],
                           (std::filesystem::path(out_dir) / ("cell_" + std::to_string(i))).string());
    }
    const auto best = result.best();
    nlohmann::json j = {{"best_index", result.best_index},
                        {"c1", best[0]},
                        {"c2", best[1]},
                        {"c3", best[2]}};
    std::ofstream bf(std::filesystem::path(out_dir) / "best.json");
    bf << j.dump(2) << '\n';
    std::cout << "best cell " << result.best_index << ": c1=" << best[0] << " c2=" << best[1]
              << " c3=" << best[2] << '\n';
    return 0;
}

int cmd_eval(const std::string& formula_arg, const std::string& trace_path) {
    tltl::Trajectory traj = tltl::read_trace_csv(trace_path);
    std::string text = formula_arg;
    if (std::filesystem::exists(formula_arg)) {
        std::ifstream in(formula_arg);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    tltl::FormulaPtr f = tltl::parse(text, traj.schema);
    const bool sat = tltl::eval_bool(f, traj, 0);
    const double rho = tltl::robustness(f, traj, 0);
    nlohmann::json j = {{"sat", sat}, {"rho", rho}};
    std::cout << j.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TLTL robustness rewards with episodic REPS on a planar arm"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds, formula_arg, trace_path;
    bool fast = false;

    auto* run = app.add_subcommand("run", "run one experiment configuration");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("--fast", fast, "desk-scale profile (shorter horizon/iterations)");
    run->add_option("--seeds", seeds, "comma-separated seed list override");

    auto* grid = app.add_subcommand("grid", "grid-search continuous-reward coefficients");
    grid->add_option("--config", config_path, "experiment config JSON")->required();
    grid->add_option("--out", out_dir, "output directory")->required();
    grid->add_flag("--fast", fast, "desk-scale profile");

    auto* eval = app.add_subcommand("eval", "evaluate a formula on a CSV trace");
    eval->add_option("--formula", formula_arg, "formula text or file")->required();
    eval->add_option("--trace", trace_path, "CSV trace with feature header")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, fast, seeds);
        if (grid->parsed()) return cmd_grid(config_path, out_dir, fast);
        if (eval->parsed()) return cmd_eval(formula_arg, trace_path);
    } catch (const tltl::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const tltl::SyntaxError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const tltl::UnknownFeature& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
